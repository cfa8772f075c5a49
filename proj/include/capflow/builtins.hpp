#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "capflow/flow.hpp"
#include "capflow/surface.hpp"

namespace capflow {

// Spherical cap region on the barrier sphere of a Cap, described in the
// unit-sphere coordinates sigma of the barrier: x = cos(R) o + sin(R) sigma.
// The region is { <sigma, sigma_dir> >= c0 }; probe is an interior point of
// the region on the barrier, used to keep track of the side under maps.
struct WetCap {
    Vec4 sigma_dir = Vec4::Unit(3);
    double c0 = 0.0;
    Vec4 probe = Vec4::Zero();
    ChartEdge edge = ChartEdge::VMax;  // chart edge tracing the wet circle

    double area(double barrier_radius) const {
        const double s = std::sin(barrier_radius);
        return 2.0 * pi * s * s * (1.0 - c0);
    }
};

struct BuiltinSurface {
    std::string name;
    ParametricSurface surface;
    double contact_angle = pi / 2.0;
    bool closed = false;
    int euler_characteristic = 1;
    double area_exact = 0.0;
    double boundary_length_exact = 0.0;
    std::vector<WetCap> wet;

    double wet_area_exact() const {
        double a = 0.0;
        for (const auto& w : wet) a += w.area(surface.barrier.radius);
        return a;
    }
};

namespace detail {

// Side of the boundary circle the wet region lies on: -nu_bar points into
// the wet region (nu_bar is its outer conormal).  Flips (dir, c0) so the
// wet region is always { <sigma, dir> >= c0 }.
inline void orient_wet_cap(const ParametricSurface& srf, ChartEdge edge, double s,
                           WetCap& cap) {
    const BoundaryFrame f = boundary_frame(srf, edge, s);
    const Cap& b = srf.barrier;
    const Vec4 into_wet = -f.nu_bar;
    const double d = into_wet.dot(cap.sigma_dir);
    if (std::abs(d) < 1e-10)
        throw NumericError("orient_wet_cap: probe direction is tangent to the wet circle");
    if (d < 0.0) {
        cap.sigma_dir = -cap.sigma_dir;
        cap.c0 = -cap.c0;
    }
    cap.probe = std::cos(b.radius) * b.center + std::sin(b.radius) * cap.sigma_dir;
}

} // namespace detail

// Totally geodesic disc in the cap of radius R about e0, meeting the barrier
// at constant angle gamma: the intersection of a great 2-sphere with the cap.
// Chart: u is the polar angle around the disc center (periodic), v is the
// geodesic distance from the center (collapsed at v = 0).
inline BuiltinSurface half_equator(double cap_radius, double gamma) {
    if (!(cap_radius > 0.0 && cap_radius < pi))
        throw DomainError("half_equator: cap radius must lie in (0, pi)");
    if (!(gamma > 0.0 && gamma <= pi / 2.0 + 1e-12))
        throw DomainError("half_equator: contact angle must lie in (0, pi/2]");

    const double cos_theta = -std::sin(cap_radius) * std::cos(gamma);
    const double sin_theta = std::sqrt(1.0 - cos_theta * cos_theta);
    const double rho1 = std::acos(std::clamp(std::cos(cap_radius) / sin_theta, -1.0, 1.0));
    const Vec4 cstar = sin_theta * axis(0) - cos_theta * axis(3);

    BuiltinSurface b;
    b.name = "half_equator";
    b.contact_angle = gamma;
    b.euler_characteristic = 1;
    b.area_exact = 2.0 * pi * (1.0 - std::cos(rho1));
    b.boundary_length_exact = 2.0 * pi * std::sin(rho1);
    b.surface.barrier = Cap{axis(0), cap_radius};

    Chart c;
    c.u0 = 0.0;
    c.u1 = 2.0 * pi;
    c.v0 = 0.0;
    c.v1 = rho1;
    c.periodic_u = true;
    c.collapse_v0 = true;
    c.position = [cstar](double u, double v) -> Vec4 {
        return std::cos(v) * cstar
               + std::sin(v) * (std::cos(u) * axis(1) + std::sin(u) * axis(2));
    };
    c.analytic_jet = [cstar](double u, double v) {
        const Vec4 e_r = std::cos(u) * axis(1) + std::sin(u) * axis(2);
        const Vec4 e_t = -std::sin(u) * axis(1) + std::cos(u) * axis(2);
        ChartJet j;
        j.x = std::cos(v) * cstar + std::sin(v) * e_r;
        j.xu = std::sin(v) * e_t;
        j.xv = -std::sin(v) * cstar + std::cos(v) * e_r;
        j.xuu = -std::sin(v) * e_r;
        j.xuv = std::cos(v) * e_t;
        j.xvv = -j.x;
        return j;
    };
    b.surface.chart = c;

    // Fix the orientation so the measured contact angle equals gamma.
    const BoundaryFrame probe = boundary_frame(b.surface, ChartEdge::VMax, 0.7);
    if (probe.cos_gamma * std::cos(gamma) < -1e-12) b.surface.orientation = -1.0;

    WetCap w;
    w.sigma_dir = axis(3);
    w.c0 = std::cos(cap_radius) * std::cos(gamma) / sin_theta;
    detail::orient_wet_cap(b.surface, ChartEdge::VMax, 0.7, w);
    b.wet.push_back(w);
    return b;
}

// Half of the minimal torus of S^3 inside the hemisphere about e0, a free
// boundary surface (gamma = pi/2) with two boundary loops.  Chart: u runs
// along the closed direction (periodic), v across, boundaries at both
// v-edges.
inline BuiltinSurface half_clifford_torus() {
    const double r = 1.0 / std::sqrt(2.0);
    BuiltinSurface b;
    b.name = "half_clifford";
    b.contact_angle = pi / 2.0;
    b.euler_characteristic = 0;
    b.area_exact = pi * pi;
    b.boundary_length_exact = 2.0 * std::sqrt(2.0) * pi;
    b.surface.barrier = Cap{axis(0), pi / 2.0};

    Chart c;
    c.u0 = 0.0;
    c.u1 = 2.0 * pi;
    c.v0 = -pi / 2.0;
    c.v1 = pi / 2.0;
    c.periodic_u = true;
    c.position = [r](double u, double v) -> Vec4 {
        return Vec4(r * std::cos(v), r * std::sin(v), r * std::cos(u), r * std::sin(u));
    };
    c.analytic_jet = [r](double u, double v) {
        ChartJet j;
        j.x = Vec4(r * std::cos(v), r * std::sin(v), r * std::cos(u), r * std::sin(u));
        j.xu = Vec4(0.0, 0.0, -r * std::sin(u), r * std::cos(u));
        j.xv = Vec4(-r * std::sin(v), r * std::cos(v), 0.0, 0.0);
        j.xuu = Vec4(0.0, 0.0, -r * std::cos(u), -r * std::sin(u));
        j.xuv = Vec4::Zero();
        j.xvv = Vec4(-r * std::cos(v), -r * std::sin(v), 0.0, 0.0);
        return j;
    };
    b.surface.chart = c;

    // Match the reference normal (-cos v, -sin v, cos u, sin u)/sqrt(2).
    {
        const double u = 0.3, v = 0.2;
        const Vec4 nu_ref(-r * std::cos(v), -r * std::sin(v), r * std::cos(u), r * std::sin(u));
        const CurvaturePack p = fundamental_forms(b.surface, u, v);
        if (p.nu.dot(nu_ref) < 0.0) b.surface.orientation = -1.0;
    }

    for (ChartEdge e : {ChartEdge::VMin, ChartEdge::VMax}) {
        WetCap w;
        w.sigma_dir = (e == ChartEdge::VMin) ? Vec4(-axis(1)) : axis(1);
        w.c0 = r;
        w.edge = e;
        detail::orient_wet_cap(b.surface, e, 0.7, w);
        b.wet.push_back(w);
    }
    return b;
}

// The closed minimal torus of S^3.
inline BuiltinSurface clifford_torus() {
    BuiltinSurface b = half_clifford_torus();
    b.name = "clifford_torus";
    b.closed = true;
    b.euler_characteristic = 0;
    b.area_exact = 2.0 * pi * pi;
    b.boundary_length_exact = 0.0;
    b.wet.clear();
    Chart& c = b.surface.chart;
    c.v0 = 0.0;
    c.v1 = 2.0 * pi;
    c.periodic_v = true;
    return b;
}

// Image of the flat unit disc { z3 = 0, |z| <= 1 } under the conformal cap
// chart of radius R; geometrically a totally geodesic free boundary disc,
// parametrized so that areas admit a Euclidean limit as R -> 0.
inline BuiltinSurface disc_in_ball(double cap_radius) {
    if (!(cap_radius > 0.0 && cap_radius < pi))
        throw DomainError("disc_in_ball: cap radius must lie in (0, pi)");
    BuiltinSurface b;
    b.name = "disc_in_ball";
    b.contact_angle = pi / 2.0;
    b.euler_characteristic = 1;
    b.area_exact = 2.0 * pi * (1.0 - std::cos(cap_radius));
    b.boundary_length_exact = 2.0 * pi * std::sin(cap_radius);
    b.surface.barrier = Cap{axis(0), cap_radius};

    const double s = cap_translation_parameter(cap_radius);
    const MoebiusMap shift = MoebiusMap::pure_translation(s * axis(0));
    auto zmap = [](double u, double v) {
        return Eigen::Vector3d(v * std::cos(u), v * std::sin(u), 0.0);
    };
    Chart c;
    c.u0 = 0.0;
    c.u1 = 2.0 * pi;
    c.v0 = 0.0;
    c.v1 = 1.0;
    c.periodic_u = true;
    c.collapse_v0 = true;
    c.position = [shift, zmap](double u, double v) { return shift(ball_to_sphere(zmap(u, v))); };
    c.first_derivatives = [shift, zmap](double u, double v) {
        const Eigen::Vector3d z = zmap(u, v);
        const Eigen::Vector3d zu(-v * std::sin(u), v * std::cos(u), 0.0);
        const Eigen::Vector3d zv(std::cos(u), std::sin(u), 0.0);
        const Vec4 x = ball_to_sphere(z);
        const double z2 = z.squaredNorm();
        auto dmap = [&](const Eigen::Vector3d& h) -> Vec4 {
            Vec4 d;
            d[0] = -2.0 * z.dot(h);
            d[1] = 2.0 * h[0];
            d[2] = 2.0 * h[1];
            d[3] = 2.0 * h[2];
            return (d - 2.0 * z.dot(h) * x) / (1.0 + z2);
        };
        return std::make_pair(shift.differential(x, dmap(zu)), shift.differential(x, dmap(zv)));
    };
    b.surface.chart = c;

    const BoundaryFrame probe = boundary_frame(b.surface, ChartEdge::VMax, 0.7);
    (void)probe; // gamma = pi/2; either orientation measures the same angle
    WetCap w;
    w.sigma_dir = axis(3);
    w.c0 = 0.0;
    detail::orient_wet_cap(b.surface, ChartEdge::VMax, 0.7, w);
    b.wet.push_back(w);
    return b;
}

inline BuiltinSurface builtin_surface(const std::string& name, double cap_radius = pi / 2.0,
                                      double gamma = pi / 2.0) {
    if (name == "half_equator") return half_equator(cap_radius, gamma);
    if (name == "half_clifford") return half_clifford_torus();
    if (name == "clifford_torus") return clifford_torus();
    if (name == "disc_in_ball") return disc_in_ball(cap_radius);
    throw DomainError("builtin_surface: unknown surface '" + name + "'");
}

} // namespace capflow
