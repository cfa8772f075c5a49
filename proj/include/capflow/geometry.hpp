#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "capflow/config.hpp"

namespace capflow {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

inline constexpr double pi = 3.14159265358979323846;

inline Vec4 axis(int i) { return Vec4::Unit(i); }

inline bool is_unit(const Vec4& x, double tol = 1e-10) {
    return std::abs(x.squaredNorm() - 1.0) <= tol;
}

inline Vec4 normalized_or_throw(const Vec4& v, const char* what) {
    const double n = v.norm();
    if (n < 1e-14) throw DomainError(std::string(what) + ": zero vector");
    return v / n;
}

// Geodesic distance on the unit 3-sphere.
inline double sphere_dist(const Vec4& x, const Vec4& y) {
    return std::atan2((x - y.dot(x) * y).norm(), y.dot(x));
}

// Generalized cross product: the unique vector v with <v,w> = det[w,a,b,c],
// so det[v,a,b,c] = |v|^2 > 0 for independent a,b,c.
inline Vec4 cross4(const Vec4& a, const Vec4& b, const Vec4& c) {
    Vec4 v;
    Eigen::Matrix3d m;
    for (int i = 0; i < 4; ++i) {
        int r = 0;
        for (int k = 0; k < 4; ++k) {
            if (k == i) continue;
            m(0, r) = a[k];
            m(1, r) = b[k];
            m(2, r) = c[k];
            ++r;
        }
        v[i] = ((i % 2) == 0 ? 1.0 : -1.0) * m.determinant();
    }
    return v;
}

// Two unit tangent vectors at o completing an orthonormal frame; chosen
// deterministically from the coordinate directions least aligned with o.
inline std::pair<Vec4, Vec4> tangent_pair(const Vec4& o) {
    int i0 = 0, i1 = 1;
    double best0 = 2.0, best1 = 2.0;
    for (int k = 0; k < 4; ++k) {
        const double a = std::abs(o[k]);
        if (a < best0) { best1 = best0; i1 = i0; best0 = a; i0 = k; }
        else if (a < best1) { best1 = a; i1 = k; }
    }
    Vec4 e1 = (axis(i0) - o[i0] * o).normalized();
    Vec4 e2 = axis(i1) - o[i1] * o;
    e2 = (e2 - e2.dot(e1) * e1).normalized();
    return {e1, e2};
}

// Geodesic ball in the 3-sphere: center on the sphere, radius in (0, pi).
struct Cap {
    Vec4 center = Vec4::Unit(0);
    double radius = pi / 2.0;

    bool contains(const Vec4& x, double tol = 0.0) const {
        return sphere_dist(x, center) <= radius + tol;
    }
    bool on_boundary(const Vec4& x, double tol = 1e-8) const {
        return std::abs(sphere_dist(x, center) - radius) <= tol;
    }
    // Outward unit normal of the boundary sphere at x (points out of the cap).
    Vec4 outward_normal(const Vec4& x) const {
        const double s = std::sin(radius);
        if (s < 1e-14) throw DomainError("cap: degenerate radius");
        return -(center - std::cos(radius) * x) / s;
    }
    double cot_radius() const { return std::cos(radius) / std::sin(radius); }
};

// Recovers a cap from >= 3 boundary samples plus one interior point.
// The boundary sphere has two complementary caps; the interior point picks
// the side. Throws NumericError when the samples do not determine a sphere.
inline Cap fit_cap(const std::vector<Vec4>& boundary, const Vec4& interior) {
    if (boundary.size() < 4)
        throw DomainError("fit_cap: need at least four boundary samples");
    Eigen::MatrixXd diffs(static_cast<int>(boundary.size()) - 1, 4);
    for (int i = 1; i < static_cast<int>(boundary.size()); ++i)
        diffs.row(i - 1) = (boundary[static_cast<size_t>(i)] - boundary[0]).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(diffs, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv[2] < 1e-10 * sv[0])
        throw NumericError("fit_cap: boundary samples nearly coplanar, sphere undetermined");
    Vec4 c = svd.matrixV().col(3);
    double r = std::acos(std::clamp(c.dot(boundary[0]), -1.0, 1.0));
    if (sphere_dist(interior, c) > r) {
        c = -c;
        r = pi - r;
    }
    for (const auto& p : boundary) {
        if (std::abs(sphere_dist(p, c) - r) > 1e-8)
            throw NumericError("fit_cap: inconsistent boundary samples");
    }
    return Cap{c, r};
}

// Uniform point on the unit 3-sphere (tests and sampling suites).
template <class Rng>
Vec4 random_sphere_point(Rng& rng) {
    std::normal_distribution<double> g;
    Vec4 v;
    do {
        for (int i = 0; i < 4; ++i) v[i] = g(rng);
    } while (v.norm() < 1e-8);
    return v.normalized();
}

// Uniform direction tangent to the slice structure: unit vector orthogonal
// to e0 when perp_e0 is set.
template <class Rng>
Vec4 random_direction(Rng& rng, bool perp_e0 = false) {
    Vec4 v = random_sphere_point(rng);
    if (perp_e0) {
        v[0] = 0.0;
        while (v.norm() < 1e-8) {
            v = random_sphere_point(rng);
            v[0] = 0.0;
        }
        v.normalize();
    }
    return v;
}

} // namespace capflow
