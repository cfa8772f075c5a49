#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "capflow/config.hpp"
#include "capflow/geometry.hpp"

namespace capflow {

// Conformal automorphism of the closed unit 4-ball in normal form
// x |-> rotation * translate_y(x), where translate_y is the standard
// ball automorphism sending 0 to y. Restricting to the boundary 3-sphere
// gives the sphere's Moebius group.
struct MoebiusMap {
    Mat4 rotation = Mat4::Identity();
    Vec4 y = Vec4::Zero();

    static MoebiusMap identity() { return {}; }

    static MoebiusMap pure_translation(const Vec4& y) {
        if (y.norm() >= 1.0) throw DomainError("MoebiusMap: |y| must be < 1");
        return {Mat4::Identity(), y};
    }

    static MoebiusMap pure_rotation(const Mat4& r) {
        if ((r.transpose() * r - Mat4::Identity()).norm() > 1e-10)
            throw DomainError("MoebiusMap: rotation is not orthogonal");
        return {r, Vec4::Zero()};
    }

    // Ball automorphism part, before the rotation.
    Vec4 translate(const Vec4& x) const {
        const double y2 = y.squaredNorm();
        const double x2 = x.squaredNorm();
        const double xy = x.dot(y);
        const double den = 1.0 + 2.0 * xy + x2 * y2;
        if (den < 1e-15) throw NumericError("MoebiusMap: degenerate denominator");
        return ((1.0 - y2) * x + (1.0 + 2.0 * xy + x2) * y) / den;
    }

    Vec4 operator()(const Vec4& x) const { return rotation * translate(x); }

    // Conformal scale factor at x (valid in the ball and on the sphere).
    double factor(const Vec4& x) const {
        const double y2 = y.squaredNorm();
        return (1.0 - y2) / (1.0 + 2.0 * x.dot(y) + x.squaredNorm() * y2);
    }

    double log_factor(const Vec4& x) const { return std::log(factor(x)); }

    // Differential (ambient 4x4 Jacobian action on a vector at x).
    Vec4 differential(const Vec4& x, const Vec4& v) const {
        const double y2 = y.squaredNorm();
        const double x2 = x.squaredNorm();
        const double xy = x.dot(y);
        const double den = 1.0 + 2.0 * xy + x2 * y2;
        const Vec4 num = (1.0 - y2) * x + (1.0 + 2.0 * xy + x2) * y;
        const double dden = 2.0 * v.dot(y) + 2.0 * x.dot(v) * y2;
        const Vec4 dnum = (1.0 - y2) * v + (2.0 * v.dot(y) + 2.0 * x.dot(v)) * y;
        return rotation * (dnum / den - num * (dden / (den * den)));
    }

    // Intrinsic gradient of the log factor on the 3-sphere at unit x.
    Vec4 sphere_log_factor_gradient(const Vec4& x) const {
        const double den = 1.0 + 2.0 * x.dot(y) + y.squaredNorm();
        return -2.0 * (y - y.dot(x) * x) / den;
    }

    // Closed-form inverse: (R, y)^{-1} = (R^T, -R y).
    MoebiusMap inverse() const {
        return {rotation.transpose(), Vec4(-(rotation * y))};
    }

    bool near_identity(double tol = 1e-12) const {
        return y.norm() <= tol && (rotation - Mat4::Identity()).norm() <= tol;
    }
};

// Composition f o g, recovered in normal form by fitting a frame of six
// points: the preimage of the origin fixes the translation part, and the
// images of the four coordinate directions fix the rotation columns.
inline MoebiusMap compose(const MoebiusMap& f, const MoebiusMap& g) {
    const Vec4 yc = -g.inverse()(f.inverse()(Vec4::Zero()));
    if (yc.norm() >= 1.0 - 1e-14)
        throw NumericError("compose: translation part reached the boundary");
    const MoebiusMap undo = MoebiusMap::pure_translation(-yc);
    Mat4 r;
    for (int i = 0; i < 4; ++i) r.col(i) = f(g(undo(axis(i))));
    Eigen::JacobiSVD<Mat4> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    if (sv[0] > defaults::frame_condition_limit * sv[3] || sv[3] < 1e-14)
        throw NumericError("compose: frame solve is ill-conditioned");
    Mat4 rot = svd.matrixU() * svd.matrixV().transpose();
    if (rot.determinant() < 0.0)
        throw NumericError("compose: frame solve produced a reflection");
    MoebiusMap out{rot, yc};
    // Pointwise verification on the fitting frame plus the origin image.
    for (int i = 0; i < 4; ++i) {
        if ((out(axis(i)) - f(g(axis(i)))).norm() > 1e-9)
            throw NumericError("compose: normal form does not reproduce the composition");
    }
    return out;
}

// Image of a cap under a Moebius map, reconstructed from three orthogonal
// diameters of its boundary sphere and the image of the center.
inline Cap cap_image(const MoebiusMap& m, const Cap& cap) {
    const auto [e1, e2] = tangent_pair(cap.center);
    const Vec4 e3 = cross4(cap.center, e1, e2);
    const double c = std::cos(cap.radius), s = std::sin(cap.radius);
    const std::vector<Vec4> pts = {
        m(c * cap.center + s * e1), m(c * cap.center - s * e1),
        m(c * cap.center + s * e2), m(c * cap.center - s * e2),
        m(c * cap.center + s * e3), m(c * cap.center - s * e3)};
    return fit_cap(pts, m(cap.center));
}

// Membership in the slice {x : <x, e0> = c |x|^2} of the closed ball.
inline bool on_slice(const Vec4& x, double c, double tol = 1e-10) {
    return std::abs(x.dot(axis(0)) - c * x.squaredNorm()) <= tol;
}

// Ball-model parameter of a cap of radius R about e0: the translation
// s_R e0 carries the R-cap to the half-space model and back.
inline double cap_translation_parameter(double radius) {
    if (radius <= 0.0 || radius >= pi)
        throw DomainError("cap_translation_parameter: radius must be in (0, pi)");
    return std::tan((pi / 2.0 - radius) / 2.0);
}

// Conformal automorphism of the cap of radius R about e0:
// rotation (fixing e0) conjugated with the cap-to-hemisphere translation
// around an equatorial translation y (y orthogonal to e0, |y| < 1).
inline MoebiusMap cap_automorphism(double radius, const Mat4& rotation, const Vec4& y) {
    if (std::abs(y.dot(axis(0))) > 1e-12)
        throw DomainError("cap_automorphism: y must be orthogonal to e0");
    if (y.norm() >= 1.0)
        throw DomainError("cap_automorphism: |y| must be < 1");
    if (std::abs((rotation * axis(0) - axis(0)).norm()) > 1e-10)
        throw DomainError("cap_automorphism: rotation must fix e0");
    const double s = cap_translation_parameter(radius);
    MoebiusMap m = MoebiusMap::pure_translation(-s * axis(0));
    m = compose(MoebiusMap::pure_translation(y), m);
    m = compose(MoebiusMap::pure_translation(s * axis(0)), m);
    m = compose(MoebiusMap::pure_rotation(rotation), m);
    return m;
}

// Image of the origin under cap_automorphism(R, I, y) in closed form; lands
// on the slice with parameter cos R.
inline Vec4 cap_automorphism_origin(double radius, const Vec4& y) {
    const double sr = std::sin(radius), cr = std::cos(radius);
    const double y2 = y.squaredNorm();
    const double den = sr * sr + y2 * cr * cr;
    if (den < 1e-15) throw NumericError("cap_automorphism_origin: degenerate parameters");
    return (y2 * cr * axis(0) + sr * y) / den;
}

} // namespace capflow
