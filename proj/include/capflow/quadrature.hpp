#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "capflow/parallel.hpp"
#include "capflow/surface.hpp"

namespace capflow {

// Eight-point Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    static constexpr int n = 8;
    static constexpr std::array<double, 8> nodes = {
        -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
        -0.1834346424956498, 0.1834346424956498, 0.5255324099163290,
        0.7966664774136267, 0.9602898564975363};
    static constexpr std::array<double, 8> weights = {
        0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
        0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
        0.2223810344533745, 0.1012285362903763};
};

namespace detail {
inline int cell_count(double span, int requested) {
    if (requested > 0) return requested;
    return std::max(1, static_cast<int>(std::ceil(span / defaults::quad_cell)));
}
} // namespace detail

// Tensor Gauss quadrature of f against the area measure of the surface.
inline double integrate(const ParametricSurface& srf,
                        const std::function<double(const CurvaturePack&)>& f,
                        int cells_u = -1, int cells_v = -1) {
    const Chart& c = srf.chart;
    const int nu = detail::cell_count(c.u_span(), cells_u);
    const int nv = detail::cell_count(c.v_span(), cells_v);
    const double hu = c.u_span() / nu, hv = c.v_span() / nv;

    std::vector<double> cell_values(static_cast<size_t>(nu) * nv, 0.0);
    parallel_for(nu * nv, [&](int cell) {
        const int iu = cell / nv, iv = cell % nv;
        const double ua = c.u0 + iu * hu, va = c.v0 + iv * hv;
        double acc = 0.0;
        for (int a = 0; a < GaussRule::n; ++a) {
            const double u = ua + 0.5 * hu * (1.0 + GaussRule::nodes[a]);
            for (int b = 0; b < GaussRule::n; ++b) {
                const double v = va + 0.5 * hv * (1.0 + GaussRule::nodes[b]);
                const CurvaturePack p = fundamental_forms(srf, u, v);
                acc += GaussRule::weights[a] * GaussRule::weights[b]
                       * f(p) * std::sqrt(p.det_g);
            }
        }
        cell_values[cell] = acc * 0.25 * hu * hv;
    });
    return std::accumulate(cell_values.begin(), cell_values.end(), 0.0);
}

// Quadrature of f against the length measure of one boundary edge.
inline double integrate_boundary(const ParametricSurface& srf, ChartEdge edge,
                                 const std::function<double(const BoundaryFrame&)>& f,
                                 int cells = -1) {
    const Chart::EdgeFrame ef = srf.chart.edge_frame(edge);
    const int n = detail::cell_count(ef.length, cells);
    const double h = ef.length / n;
    std::vector<double> cell_values(n, 0.0);
    parallel_for(n, [&](int i) {
        double acc = 0.0;
        for (int a = 0; a < GaussRule::n; ++a) {
            const double s = i * h + 0.5 * h * (1.0 + GaussRule::nodes[a]);
            const BoundaryFrame bf = boundary_frame(srf, edge, s);
            acc += GaussRule::weights[a] * f(bf) * bf.speed;
        }
        cell_values[i] = acc * 0.5 * h;
    });
    return std::accumulate(cell_values.begin(), cell_values.end(), 0.0);
}

inline double integrate_boundary_all(const ParametricSurface& srf,
                                     const std::function<double(const BoundaryFrame&)>& f,
                                     int cells = -1) {
    double total = 0.0;
    for (ChartEdge e : srf.chart.boundary_edges())
        total += integrate_boundary(srf, e, f, cells);
    return total;
}

inline double surface_area(const ParametricSurface& srf, int cells_u = -1, int cells_v = -1) {
    return integrate(srf, [](const CurvaturePack&) { return 1.0; }, cells_u, cells_v);
}

inline double boundary_length(const ParametricSurface& srf, int cells = -1) {
    return integrate_boundary_all(srf, [](const BoundaryFrame&) { return 1.0; }, cells);
}

// Value with a refinement-based error estimate: the coarse pass uses the
// default cell count, the fine pass doubles it; the difference bounds the
// fine-pass error for smooth integrands.
struct QuadratureEstimate {
    double value = 0.0;
    double error = 0.0;
};

inline QuadratureEstimate integrate_refined(const ParametricSurface& srf,
                                            const std::function<double(const CurvaturePack&)>& f) {
    const Chart& c = srf.chart;
    const int nu = detail::cell_count(c.u_span(), -1);
    const int nv = detail::cell_count(c.v_span(), -1);
    const double coarse = integrate(srf, f, nu, nv);
    const double fine = integrate(srf, f, 2 * nu, 2 * nv);
    return {fine, std::abs(fine - coarse)};
}

} // namespace capflow
