#pragma once

#include <functional>
#include <thread>
#include <vector>

#include "capflow/config.hpp"

namespace capflow {

// Runs body(i) for i in [0, n). With workers > 1 the range is split into
// fixed contiguous chunks so any per-chunk accumulation the caller does can
// be merged in index order, keeping results independent of thread timing.
inline void parallel_for(int n, const std::function<void(int)>& body,
                         int workers = worker_count()) {
    if (n <= 0) return;
    if (workers <= 1 || n == 1) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    if (workers > n) workers = n;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace capflow
