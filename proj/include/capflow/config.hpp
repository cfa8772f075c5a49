#pragma once

#include <cstdlib>
#include <stdexcept>
#include <string>

namespace capflow {

// Thrown when a computation loses numerical meaning (ill-conditioned frame
// solve, factorization failure, non-convergent iteration). The CLI maps this
// to its own exit code, distinct from usage errors and invariant violations.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when input data contradicts a precondition (point off the sphere,
// angle out of range, mis-specified chart).
class DomainError : public std::invalid_argument {
public:
    explicit DomainError(const std::string& what) : std::invalid_argument(what) {}
};

namespace defaults {

// Finite-difference step (relative) for chart jets without analytic derivatives.
inline constexpr double fd_step = 1e-5;

// Gauss-Legendre points per axis per quadrature cell.
inline constexpr int quad_points = 8;

// Target metric size of a quadrature cell.
inline constexpr double quad_cell = 0.25;

// Eigenvalue classification threshold: zero_tol = zero_tol_factor * h^2.
inline constexpr double zero_tol_factor = 5.0;

// Base slope tolerance for monotonicity traces (scaled by a quadrature
// error estimate at run time).
inline constexpr double slope_tol = 1e-7;

// Clamp for |Y| before artanh in flow parameter recovery.
inline constexpr double artanh_clamp = 1.0 - 1e-12;

// Conditioning limit for the normal-form frame solve.
inline constexpr double frame_condition_limit = 1e12;

// Dense eigensolver refuses problems above this size; inertia-only
// factorizations allow somewhat larger ones.
inline constexpr int max_eig_dofs = 4600;
inline constexpr int max_inertia_dofs = 9000;

// Damped-Newton defaults for the conformal balancing solve.
inline constexpr int newton_max_iter = 200;
inline constexpr double newton_tol = 1e-8;

} // namespace defaults

// Worker count for data-parallel loops; controlled by CAPFLOW_WORKERS.
inline int worker_count() {
    static const int n = [] {
        const char* env = std::getenv("CAPFLOW_WORKERS");
        if (!env) return 1;
        int v = std::atoi(env);
        return v >= 1 ? v : 1;
    }();
    return n;
}

} // namespace capflow
