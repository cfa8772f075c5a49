#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "capflow/builtins.hpp"
#include "capflow/flow.hpp"
#include "capflow/quadrature.hpp"

namespace capflow {

// A surface with its contact angle, wet regions, and topology: everything
// the cap energies need.
struct CapillaryScene {
    ParametricSurface surface;
    double gamma = pi / 2.0;
    std::vector<WetCap> wet;
    int euler_characteristic = 1;
};

inline CapillaryScene make_scene(const BuiltinSurface& b) {
    if (b.closed) throw DomainError("make_scene: closed surfaces carry no cap energy data");
    return {b.surface, b.contact_angle, b.wet, b.euler_characteristic};
}

// Image of a wet cap under a conformal map: the image circle is refit on the
// image barrier and the side is resolved by the transported interior probe.
inline WetCap transport_wet_cap(const WetCap& w, const ParametricSurface& image_srf,
                                const MoebiusMap& map) {
    const Cap& bar = image_srf.barrier;
    const double cr = std::cos(bar.radius), sr = std::sin(bar.radius);

    // Orthonormal basis of the barrier's sigma space (center^perp).
    std::array<Vec4, 3> basis;
    {
        const auto [t0, t1] = tangent_pair(bar.center);
        basis[0] = t0;
        basis[1] = t1;
        basis[2] = cross4(bar.center, t0, t1).normalized();
    }
    auto sigma_coords = [&](const Vec4& x) {
        const Vec4 s = (x - cr * bar.center) / sr;
        return Eigen::Vector3d(s.dot(basis[0]), s.dot(basis[1]), s.dot(basis[2]));
    };

    const Chart::EdgeFrame ef = image_srf.chart.edge_frame(w.edge);
    const int samples = 24;
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    std::vector<Eigen::Vector3d> pts(samples);
    for (int k = 0; k < samples; ++k) {
        const auto [u, v] = ef.point(ef.length * (k + 0.5) / samples);
        pts[k] = sigma_coords(image_srf.chart.position(u, v));
        mean += pts[k];
    }
    mean /= samples;
    for (const auto& y : pts) cov += (y - mean) * (y - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
    Eigen::Vector3d d = es.eigenvectors().col(0);
    double c0 = d.dot(mean);
    for (const auto& y : pts)
        if (std::abs(d.dot(y) - c0) > 1e-6)
            throw NumericError("transport_wet_cap: image boundary is not a circle");

    const Vec4 probe = map(w.probe);
    const double side = d.dot(sigma_coords(probe)) - c0;
    if (std::abs(side) < 1e-12)
        throw NumericError("transport_wet_cap: probe landed on the wet circle");
    if (side < 0.0) {
        d = -d;
        c0 = -c0;
    }

    WetCap out;
    out.sigma_dir = d[0] * basis[0] + d[1] * basis[1] + d[2] * basis[2];
    out.c0 = c0;
    out.probe = probe;
    out.edge = w.edge;
    return out;
}

inline CapillaryScene transform_scene(const CapillaryScene& s, const MoebiusMap& map) {
    CapillaryScene out;
    out.surface = pushforward_surface(s.surface, map);
    out.gamma = s.gamma;
    out.euler_characteristic = s.euler_characteristic;
    out.wet.reserve(s.wet.size());
    for (const auto& w : s.wet) out.wet.push_back(transport_wet_cap(w, out.surface, map));
    return out;
}

// Measured ingredients and the two cap energies:
//   value    = |S| + cos(g) csc^2(R) |wet| + sin(g) cot(R) |dS|
//   value_fb = |S| + cot(R) |dS|
struct EnergyValue {
    double area = 0.0;
    double boundary = 0.0;
    double wet_area = 0.0;
    double cap_radius = 0.0;
    double gamma = 0.0;
    double value = 0.0;
    double value_fb = 0.0;
    double quad_error = 0.0;  // refinement estimate; 0 unless requested
};

inline EnergyValue evaluate_energy(const CapillaryScene& s, bool refined = false) {
    EnergyValue e;
    e.cap_radius = s.surface.barrier.radius;
    e.gamma = s.gamma;
    if (refined) {
        const QuadratureEstimate a =
            integrate_refined(s.surface, [](const CurvaturePack&) { return 1.0; });
        e.area = a.value;
        e.quad_error = a.error;
    } else {
        e.area = surface_area(s.surface);
    }
    e.boundary = boundary_length(s.surface);
    for (const auto& w : s.wet) e.wet_area += w.area(e.cap_radius);
    const double cot = 1.0 / std::tan(e.cap_radius);
    const double csc2 = 1.0 / (std::sin(e.cap_radius) * std::sin(e.cap_radius));
    e.value = e.area + std::cos(e.gamma) * csc2 * e.wet_area
              + std::sin(e.gamma) * cot * e.boundary;
    e.value_fb = e.area + cot * e.boundary;
    return e;
}

inline double measured_mean_curvature_sup(const ParametricSurface& srf, int samples = 24) {
    double sup = 0.0;
    const Chart& c = srf.chart;
    for (int i = 0; i < samples; ++i)
        for (int j = 1; j < samples; ++j) {
            const double u = c.u0 + c.u_span() * (i + 0.5) / samples;
            const double v = c.v0 + c.v_span() * j / samples;
            sup = std::max(sup, std::abs(fundamental_forms(srf, u, v).mean_curvature));
        }
    return sup;
}

enum class MonotoneFlavor { Auto, FreeBoundary, Capillary, Hemisphere };

struct MonotoneStep {
    double t = 0.0;
    double cap_radius = 0.0;
    double area = 0.0;
    double wet_area = 0.0;
    double boundary = 0.0;
    double energy = 0.0;             // flavor energy at time t
    double monotone_quantity = 0.0;  // the quantity the theorems control
    bool slope_ok = true;            // forward slope into this step within tol
};

struct MonotoneTrace {
    MonotoneFlavor flavor = MonotoneFlavor::FreeBoundary;
    std::vector<MonotoneStep> steps;
    double slope_tol = 0.0;
    double max_slope = 0.0;   // worst upward slope; 0 when every slope is nonpositive
    bool monotone = true;
    double damping = 0.0;     // C_H used by the free-boundary flavor
};

// Evolution of the declared monotone quantity along the conformal flow
// toward a.  Flavors:
//  - FreeBoundary: exp(-C_H t) (|S_t| + cot R_t |dS_t|), C_H from sup |H|;
//  - Capillary:    |S_t| + cos(g) csc^2 R_t |wet_t| + sin(g) cot R_t |dS_t|;
//  - Hemisphere:   |S_t| + cos(g) W(t) with W the swept boundary area,
//                  needs R = pi/2 and a perpendicular to the cap center.
inline MonotoneTrace monotonicity_trace(const CapillaryScene& base, const Vec4& a,
                                        double t_max, int n_steps,
                                        MonotoneFlavor flavor = MonotoneFlavor::Auto) {
    if (n_steps < 2) throw DomainError("monotonicity_trace: need at least 2 steps");
    if (flavor == MonotoneFlavor::Auto)
        flavor = (std::abs(base.gamma - pi / 2.0) < 1e-12) ? MonotoneFlavor::FreeBoundary
                                                           : MonotoneFlavor::Capillary;
    const ConformalFlow flow(a);
    const Cap base_cap = base.surface.barrier;
    if (flavor == MonotoneFlavor::Hemisphere) {
        if (std::abs(base_cap.radius - pi / 2.0) > 1e-12)
            throw DomainError("monotonicity_trace: hemisphere flavor needs R = pi/2");
        if (std::abs(flow.a.dot(base_cap.center)) > 1e-12)
            throw DomainError("monotonicity_trace: hemisphere flavor needs a perpendicular "
                              "to the cap center");
    }

    MonotoneTrace tr;
    tr.flavor = flavor;
    if (flavor == MonotoneFlavor::FreeBoundary)
        tr.damping = 1.1 * measured_mean_curvature_sup(base.surface);

    const double dt = t_max / n_steps;
    std::vector<double> flux(n_steps + 1, 0.0);
    double quad_err = 0.0, max_q = 0.0, wetting = 0.0, max_flux_dd = 0.0;

    for (int k = 0; k <= n_steps; ++k) {
        const double t = k * dt;
        const MoebiusMap map = flow.map_at(t);
        const CapillaryScene scene = transform_scene(base, map);
        const bool refined = (k == 0 || k == n_steps);
        EnergyValue e = evaluate_energy(scene, refined);
        quad_err = std::max(quad_err, e.quad_error);

        MonotoneStep step;
        step.t = t;
        step.cap_radius = e.cap_radius;
        step.area = e.area;
        step.wet_area = e.wet_area;
        step.boundary = e.boundary;
        switch (flavor) {
            case MonotoneFlavor::FreeBoundary:
                step.energy = e.value_fb;
                step.monotone_quantity = std::exp(-tr.damping * t) * e.value_fb;
                break;
            case MonotoneFlavor::Capillary:
                step.energy = e.value;
                step.monotone_quantity = e.value;
                break;
            case MonotoneFlavor::Hemisphere: {
                flux[k] = integrate_boundary_all(scene.surface, [&](const BoundaryFrame& bf) {
                    return bf.nu_bar.dot(flow.velocity(bf.x));
                });
                if (k > 0) wetting += 0.5 * (flux[k - 1] + flux[k]) * dt;
                if (k > 1)
                    max_flux_dd = std::max(max_flux_dd,
                                           std::abs(flux[k] - 2.0 * flux[k - 1] + flux[k - 2]));
                step.energy = e.area + std::cos(base.gamma) * wetting;
                step.monotone_quantity = step.energy;
                break;
            }
            case MonotoneFlavor::Auto: break; // resolved above
        }
        max_q = std::max(max_q, std::abs(step.monotone_quantity));
        tr.steps.push_back(step);
    }

    tr.slope_tol = std::max(defaults::slope_tol * (1.0 + max_q), 5.0 * quad_err / dt);
    if (flavor == MonotoneFlavor::Hemisphere)
        tr.slope_tol = std::max(tr.slope_tol,
                                std::abs(std::cos(base.gamma)) * max_flux_dd / 12.0);
    for (size_t k = 1; k < tr.steps.size(); ++k) {
        const double slope =
            (tr.steps[k].monotone_quantity - tr.steps[k - 1].monotone_quantity) / dt;
        tr.max_slope = std::max(tr.max_slope, slope);
        tr.steps[k].slope_ok = (slope <= tr.slope_tol);
        if (!tr.steps[k].slope_ok) tr.monotone = false;
    }
    return tr;
}

// Conformal-invariance route to the energy drop: for a minimal base surface
// both residuals vanish up to quadrature error.
struct WillmoreReport {
    double radius_base = 0.0, radius_image = 0.0;
    double area_base = 0.0, area_image = 0.0;
    double boundary_base = 0.0, boundary_image = 0.0;
    double wet_base = 0.0, wet_image = 0.0;
    double willmore_image = 0.0;       // int |H|^2 over the image
    double fb_residual = 0.0;          // free boundary identity
    double capillary_residual = 0.0;   // contact-angle identity
};

inline WillmoreReport willmore_report(const CapillaryScene& base, const MoebiusMap& map) {
    WillmoreReport r;
    const CapillaryScene image = transform_scene(base, map);
    const EnergyValue eb = evaluate_energy(base);
    const EnergyValue ei = evaluate_energy(image);
    r.radius_base = eb.cap_radius;
    r.radius_image = ei.cap_radius;
    r.area_base = eb.area;
    r.area_image = ei.area;
    r.boundary_base = eb.boundary;
    r.boundary_image = ei.boundary;
    r.wet_base = eb.wet_area;
    r.wet_image = ei.wet_area;
    r.willmore_image = integrate(image.surface, [](const CurvaturePack& p) {
        return p.mean_curvature * p.mean_curvature;
    });

    const double cot_b = 1.0 / std::tan(r.radius_base);
    const double cot_i = 1.0 / std::tan(r.radius_image);
    r.fb_residual = r.area_base - r.area_image - 0.25 * r.willmore_image
                    + cot_b * r.boundary_base - cot_i * r.boundary_image;

    const double cg = std::cos(base.gamma), sg = std::sin(base.gamma);
    const double csc2_b = 1.0 / (std::sin(r.radius_base) * std::sin(r.radius_base));
    const double csc2_i = 1.0 / (std::sin(r.radius_image) * std::sin(r.radius_image));
    r.capillary_residual = r.area_base - r.area_image - 0.25 * r.willmore_image
                           + cg * (csc2_b * r.wet_base - csc2_i * r.wet_image)
                           + sg * (cot_b * r.boundary_base - cot_i * r.boundary_image);
    return r;
}

// Gauss-Bonnet bookkeeping for a scene; each wet cap is a disc.
inline double gauss_bonnet_residual(const CapillaryScene& s) {
    const EnergyValue e = evaluate_energy(s);
    const double curvature_integral = integrate(s.surface, [](const CurvaturePack& p) {
        return 1.0 + 0.25 * p.mean_curvature * p.mean_curvature - 0.5 * p.traceless_norm2();
    });
    const double cg = std::cos(s.gamma), sg = std::sin(s.gamma);
    const double csc2 = 1.0 / (std::sin(e.cap_radius) * std::sin(e.cap_radius));
    const double cot = 1.0 / std::tan(e.cap_radius);
    const double lhs = 2.0 * pi * (s.euler_characteristic
                                   + cg * static_cast<double>(s.wet.size()));
    return lhs - (curvature_integral + cg * csc2 * e.wet_area + sg * cot * e.boundary);
}

// Sharp lower bound of the hemisphere capillary energy, tested at its
// equality surface.
struct BlowupCheck {
    double energy = 0.0;
    double bound = 0.0;
    double margin = 0.0;
    bool ok = false;
};

inline BlowupCheck blowup_check(double gamma) {
    const CapillaryScene s = make_scene(half_equator(pi / 2.0, gamma));
    BlowupCheck c;
    c.energy = evaluate_energy(s).value;
    c.bound = 2.0 * pi * (1.0 + std::cos(gamma));
    c.margin = c.energy - c.bound;
    c.ok = (c.margin > -1e-8);
    return c;
}

// Scaled area and boundary length of the conformally flattened disc as the
// cap shrinks; the limits are the flat values pi and 2 pi.
struct LimitRow {
    double cap_radius = 0.0;
    double scaled_area = 0.0;
    double scaled_boundary = 0.0;
};

struct LimitTrace {
    std::vector<LimitRow> rows;
    double area_order = 0.0;      // smallest observed convergence order
    double boundary_order = 0.0;
};

inline LimitTrace euclidean_limit_trace(const std::vector<double>& radii) {
    if (radii.size() < 2) throw DomainError("euclidean_limit_trace: need at least two radii");
    LimitTrace tr;
    for (double r : radii) {
        const BuiltinSurface d = disc_in_ball(r);
        LimitRow row;
        row.cap_radius = r;
        const double s = std::sin(r);
        row.scaled_area = surface_area(d.surface) / (s * s);
        row.scaled_boundary = boundary_length(d.surface) / s;
        tr.rows.push_back(row);
    }
    // Errors at rounding level cannot support an order estimate; pairs below
    // the floor count as converged (the boundary scaling is exact for the
    // geodesic disc).
    const double floor = 1e-12;
    tr.area_order = 99.0;
    tr.boundary_order = 99.0;
    for (size_t i = 0; i + 1 < tr.rows.size(); ++i) {
        const double h = std::log(radii[i] / radii[i + 1]);
        const double ea0 = std::abs(tr.rows[i].scaled_area - pi);
        const double ea1 = std::abs(tr.rows[i + 1].scaled_area - pi);
        const double eb0 = std::abs(tr.rows[i].scaled_boundary - 2.0 * pi);
        const double eb1 = std::abs(tr.rows[i + 1].scaled_boundary - 2.0 * pi);
        if (ea1 > floor) tr.area_order = std::min(tr.area_order, std::log(ea0 / ea1) / h);
        if (eb1 > floor) tr.boundary_order = std::min(tr.boundary_order, std::log(eb0 / eb1) / h);
    }
    return tr;
}

} // namespace capflow
