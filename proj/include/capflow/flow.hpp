#pragma once

#include <cmath>
#include <optional>

#include "capflow/geometry.hpp"
#include "capflow/moebius.hpp"

namespace capflow {

// One-parameter conformal flow toward the unit direction a: the gradient
// flow of the linear height <x, a>, whose time-t map is the ball
// translation by tanh(t/2) a.
struct ConformalFlow {
    Vec4 a;

    explicit ConformalFlow(const Vec4& direction)
        : a(normalized_or_throw(direction, "ConformalFlow")) {
        if (!is_unit(a)) throw DomainError("ConformalFlow: direction must be unit");
    }

    double height(const Vec4& x) const { return x.dot(a); }

    // Velocity field: tangential part of the constant field a.
    Vec4 velocity(const Vec4& x) const { return a - x.dot(a) * x; }

    MoebiusMap map_at(double t) const {
        return MoebiusMap::pure_translation(std::tanh(t / 2.0) * a);
    }

    Vec4 at(double t, const Vec4& x) const { return map_at(t)(x); }

    // Height along trajectories in closed form.
    double height_at(double t, double h0) const {
        const double s = std::tanh(t / 2.0);
        return (2.0 * s + (1.0 + s * s) * h0) / (1.0 + s * s + 2.0 * s * h0);
    }
};

// Cap transported by the flow, with the closed-form radius evolution
// cot R_t = cot R cosh t - cos(alpha) csc R sinh t, cos(alpha) = -<o, a>.
struct CapEvolution {
    Cap cap;
    double cot_radius = 0.0;
    double cot_radius_rate = 0.0;
    double cos_alpha = 0.0;
};

inline CapEvolution evolve_cap(const ConformalFlow& flow, double t, const Cap& base) {
    CapEvolution ev;
    ev.cap = cap_image(flow.map_at(t), base);
    ev.cos_alpha = -base.center.dot(flow.a);
    const double cot0 = base.cot_radius();
    const double csc0 = 1.0 / std::sin(base.radius);
    ev.cot_radius = cot0 * std::cosh(t) - ev.cos_alpha * csc0 * std::sinh(t);
    ev.cot_radius_rate = cot0 * std::sinh(t) - ev.cos_alpha * csc0 * std::cosh(t);
    const double tracked = ev.cap.cot_radius();
    const double scale = 1.0 + ev.cot_radius * ev.cot_radius;
    if (std::abs(tracked - ev.cot_radius) > 1e-9 * scale)
        throw NumericError("evolve_cap: tracked radius disagrees with closed form");
    return ev;
}

// Pairing <outward boundary normal of the moving cap, flow velocity> at a
// point of the moving boundary sphere; analytic in t.
inline double conormal_flow_pairing(const ConformalFlow& flow, double t,
                                    const Cap& base, const Vec4& x) {
    const CapEvolution ev = evolve_cap(flow, t, base);
    if (!ev.cap.on_boundary(x, 1e-8))
        throw DomainError("conormal_flow_pairing: point is not on the moving boundary");
    return -ev.cot_radius_rate + flow.height(x) * ev.cot_radius;
}

// Independent geometric evaluation of the same pairing (needs sin R_t != 0):
// the outward normal is -csc R_t V_{o_t}(x).
inline double conormal_flow_pairing_geometric(const ConformalFlow& flow, double t,
                                              const Cap& base, const Vec4& x) {
    const CapEvolution ev = evolve_cap(flow, t, base);
    const Vec4 n = ev.cap.outward_normal(x);
    return n.dot(flow.velocity(x));
}

// Decomposition of a cap-preserving conformal element through a flow: for a
// point Y on the slice {<x,e0> = |x|^2 cos R}, produces direction a, time t
// and an in-plane rotation such that rotation o translate(tanh(t/2) a)
// preserves the cap of radius R about e0 and sends the origin to Y.
struct FlowRealization {
    Vec4 a = Vec4::Unit(1);
    double t = 0.0;
    Mat4 rotation = Mat4::Identity();
    MoebiusMap map;       // rotation o translation, in normal form
    bool clamped = false; // |Y| hit the artanh clamp
};

inline FlowRealization realize_by_flow(const Vec4& point, double radius,
                                       double slice_tol = 1e-8) {
    FlowRealization out;
    const double r = point.norm();
    if (r <= 1e-13) return out; // identity decomposition
    if (!on_slice(point, std::cos(radius), slice_tol))
        throw DomainError("realize_by_flow: point is not on the slice of the cap");
    double s = r;
    if (s > defaults::artanh_clamp) {
        s = defaults::artanh_clamp;
        out.clamped = true;
    }
    const double cos_alpha = s * std::cos(radius);
    const double sin_alpha = std::sqrt(std::max(0.0, 1.0 - cos_alpha * cos_alpha));
    Vec4 e1 = point - point.dot(axis(0)) * axis(0);
    if (e1.norm() < 1e-13)
        throw NumericError("realize_by_flow: point is aligned with the cap axis");
    e1.normalize();
    out.a = -cos_alpha * axis(0) + sin_alpha * e1;
    out.t = 2.0 * std::atanh(s);
    const double beta = -(pi - 2.0 * std::acos(std::clamp(cos_alpha, -1.0, 1.0)));
    const Vec4 e0 = axis(0);
    out.rotation = Mat4::Identity()
        + (std::cos(beta) - 1.0) * (e0 * e0.transpose() + e1 * e1.transpose())
        + std::sin(beta) * (e1 * e0.transpose() - e0 * e1.transpose());
    out.map = compose(MoebiusMap::pure_rotation(out.rotation),
                      MoebiusMap::pure_translation(std::tanh(out.t / 2.0) * out.a));
    return out;
}

// Round chart of the sphere over the unit 3-ball (inverse stereographic
// projection from -e0); the origin maps to e0.
inline Vec4 ball_to_sphere(const Eigen::Vector3d& z) {
    const double z2 = z.squaredNorm();
    // Small slack: finite-difference jets of charts built on this map probe
    // just past the closed ball, where the formula is still smooth.
    if (z2 > 1.0 + 1e-2) throw DomainError("ball_to_sphere: |z| must be <= 1");
    Vec4 x;
    x[0] = 1.0 - z2;
    x[1] = 2.0 * z[0];
    x[2] = 2.0 * z[1];
    x[3] = 2.0 * z[2];
    return x / (1.0 + z2);
}

inline Eigen::Vector3d sphere_to_ball(const Vec4& x) {
    if (!is_unit(x)) throw DomainError("sphere_to_ball: point must be unit");
    if (x[0] < -1.0 + 1e-12) throw DomainError("sphere_to_ball: pole -e0 excluded");
    return Eigen::Vector3d(x[1], x[2], x[3]) / (1.0 + x[0]);
}

// Chart of the radius-R cap about e0 over the unit ball: ball_to_sphere
// followed by the hemisphere-to-cap translation.
inline Vec4 cap_chart(double radius, const Eigen::Vector3d& z) {
    const double s = cap_translation_parameter(radius);
    return MoebiusMap::pure_translation(s * axis(0))(ball_to_sphere(z));
}

// Conformal scale of cap_chart relative to the flat metric on the ball.
inline double cap_chart_scale(double radius, const Eigen::Vector3d& z) {
    const double z2 = z.squaredNorm();
    return 2.0 * std::sin(radius) / (1.0 + z2 + (1.0 - z2) * std::cos(radius));
}

} // namespace capflow
