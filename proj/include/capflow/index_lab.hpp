#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "capflow/builtins.hpp"
#include "capflow/energy.hpp"
#include "capflow/mesh.hpp"
#include "capflow/parallel.hpp"
#include "capflow/spectra.hpp"

namespace capflow {

// The three stability forms Q_{p,q}(u) = int(|grad u|^2 - p u^2) - bdry(q u^2):
//   Spectral: p = 2,         q = cot R        (free-boundary index)
//   Morse:    p = |A|^2 + 2, q = -cot(g) A(eta,eta)   (capillary index, hemisphere)
//   Modified: p = |A|^2,     q as Morse
enum class FormFlavor { Spectral, Morse, Modified };

inline const char* flavor_name(FormFlavor f) {
    switch (f) {
        case FormFlavor::Spectral: return "spectral";
        case FormFlavor::Morse: return "morse";
        case FormFlavor::Modified: return "modified";
    }
    return "?";
}

inline FormFlavor flavor_from_name(const std::string& s) {
    if (s == "spectral") return FormFlavor::Spectral;
    if (s == "morse") return FormFlavor::Morse;
    if (s == "modified") return FormFlavor::Modified;
    throw DomainError("unknown form flavor: " + s);
}

// Curvature at a parameter point, nudged off collapsed (polar) chart edges
// where the metric degenerates.
inline CurvaturePack vertex_curvature(const ParametricSurface& srf, double u, double v) {
    const Chart& c = srf.chart;
    const double nudge = 1e-7 * c.v_span();
    if (c.collapse_v0 && v - c.v0 < nudge) v = c.v0 + nudge;
    if (c.collapse_v1 && c.v1 - v < nudge) v = c.v1 - nudge;
    return fundamental_forms(srf, u, v);
}

// Boundary frame at a parameter point lying on one of the chart's boundary
// edges.
inline BoundaryFrame boundary_frame_at(const ParametricSurface& srf, double u, double v) {
    const Chart& c = srf.chart;
    const double tu = 1e-9 * (1.0 + std::abs(c.u_span()));
    const double tv = 1e-9 * (1.0 + std::abs(c.v_span()));
    if (!c.periodic_v) {
        if (!c.collapse_v1 && std::abs(v - c.v1) < tv)
            return boundary_frame(srf, ChartEdge::VMax, u - c.u0);
        if (!c.collapse_v0 && std::abs(v - c.v0) < tv)
            return boundary_frame(srf, ChartEdge::VMin, u - c.u0);
    }
    if (!c.periodic_u) {
        if (std::abs(u - c.u0) < tu) return boundary_frame(srf, ChartEdge::UMin, v - c.v0);
        if (std::abs(u - c.u1) < tu) return boundary_frame(srf, ChartEdge::UMax, v - c.v0);
    }
    throw DomainError("boundary_frame_at: point is not on a chart boundary edge");
}

inline Eigen::VectorXd flavor_interior_coefficient(const ParametricSurface& srf,
                                                   FormFlavor flavor, const TriMesh& mesh) {
    const int n = mesh.n_vertices();
    Eigen::VectorXd p(n);
    if (flavor == FormFlavor::Spectral) {
        p.setConstant(2.0);
        return p;
    }
    const double shift = (flavor == FormFlavor::Morse) ? 2.0 : 0.0;
    parallel_for(n, [&](int i) {
        const auto& vx = mesh.vertices[i];
        p[i] = vertex_curvature(srf, vx.u, vx.v).second_form_norm2 + shift;
    });
    return p;
}

inline Eigen::VectorXd flavor_boundary_coefficient(const ParametricSurface& srf, double gamma,
                                                   FormFlavor flavor, const TriMesh& mesh) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(mesh.n_vertices());
    const std::vector<int> bverts = mesh.boundary_vertices();
    if (bverts.empty()) return q;
    const double cot_r = 1.0 / std::tan(srf.barrier.radius);
    if (flavor == FormFlavor::Spectral) {
        for (int i : bverts) q[i] = cot_r;
        return q;
    }
    const double cot_g = std::cos(gamma) / std::sin(gamma);
    for (int i : bverts) {
        const auto& vx = mesh.vertices[i];
        const BoundaryFrame bf = boundary_frame_at(srf, vx.u, vx.v);
        q[i] = -cot_g * bf.A_eta_eta;
    }
    return q;
}

struct IndexProblem {
    ParametricSurface surface;
    FormFlavor flavor = FormFlavor::Spectral;
    double gamma = pi / 2.0;
    bool closed = false;
    TriMesh mesh;
    Eigen::VectorXd p, q;
    AssembledForm form;
    double zero_tol = 0.0;
};

inline IndexProblem build_index_problem(const ParametricSurface& srf, double gamma,
                                        FormFlavor flavor, double h) {
    IndexProblem ip;
    ip.surface = srf;
    ip.flavor = flavor;
    ip.gamma = gamma;
    ip.mesh = mesh_parametric(srf, h);
    ip.closed = ip.mesh.boundary_edges.empty();
    ip.p = flavor_interior_coefficient(srf, flavor, ip.mesh);
    ip.q = flavor_boundary_coefficient(srf, gamma, flavor, ip.mesh);
    ip.form = assemble(ip.mesh, ip.p, ip.q);
    ip.zero_tol = default_zero_tol(ip.mesh);
    return ip;
}

inline IndexProblem build_index_problem(const BuiltinSurface& b, FormFlavor flavor, double h) {
    return build_index_problem(b.surface, b.contact_angle, flavor, h);
}

inline IndexReport index_report(const IndexProblem& ip) {
    return index_count(ip.form, ip.zero_tol);
}

inline double measured_second_form_sup(const ParametricSurface& srf, const TriMesh& mesh) {
    const int n = mesh.n_vertices();
    std::vector<double> vals(n, 0.0);
    parallel_for(n, [&](int i) {
        const auto& vx = mesh.vertices[i];
        vals[i] = std::sqrt(vertex_curvature(srf, vx.u, vx.v).second_form_norm2);
    });
    return *std::max_element(vals.begin(), vals.end());
}

inline void require_minimal(const ParametricSurface& srf, const TriMesh& mesh,
                            double tol = 1e-6) {
    const int n = mesh.n_vertices();
    std::vector<double> vals(n, 0.0);
    parallel_for(n, [&](int i) {
        const auto& vx = mesh.vertices[i];
        vals[i] = std::abs(vertex_curvature(srf, vx.u, vx.v).mean_curvature);
    });
    const double sup = *std::max_element(vals.begin(), vals.end());
    if (sup > tol)
        throw DomainError("surface is not minimal: sup |H| = " + std::to_string(sup));
}

// Numerical rank of the L2 Gram matrix of the given vertex fields.
inline int gram_rank(const Eigen::MatrixXd& fields, const Eigen::SparseMatrix<double>& mass,
                     double threshold = 1e-8) {
    const Eigen::MatrixXd G = fields.transpose() * (mass * fields);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    int rank = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
        if (es.eigenvalues()[i] > threshold * top) ++rank;
    return rank;
}

inline int coordinate_span_rank(const ParametricSurface& srf, double h) {
    const TriMesh mesh = mesh_parametric(srf, h);
    if (mesh.n_vertices() < 20)
        throw DomainError("coordinate_span_rank: fewer than 20 sample nodes");
    const AssembledForm f = assemble(mesh);
    Eigen::MatrixXd X(mesh.n_vertices(), 4);
    for (int i = 0; i < mesh.n_vertices(); ++i) X.row(i) = mesh.vertices[i].x.transpose();
    return gram_rank(X, f.mass);
}

struct EigenfunctionCheck {
    std::string label;
    double energy_residual = 0.0;    // |Q(I f)| / ||I f||^2 with the matched Robin weight
    double boundary_residual = 0.0;  // flux or trace relation residual at boundary nodes
    bool dirichlet = false;          // the boundary relation is a vanishing trace
};

struct EigenfunctionReport {
    double h = 0.0;
    int span_rank = 0;
    double max_energy_residual = 0.0;
    std::vector<double> steklov_rayleigh;  // |Q(f)| / ||f||^2_bdry for tangential fields
    std::vector<EigenfunctionCheck> checks;
};

// The four ambient coordinates restricted to a minimal surface solve
// (Laplace + 2) f = 0 with Robin weight cot R (tangential coordinates) or
// -tan R (the cap-axis coordinate; a vanishing trace on a hemisphere).
inline EigenfunctionReport verify_coordinate_eigenfunctions(const ParametricSurface& srf,
                                                            double h) {
    const TriMesh mesh = mesh_parametric(srf, h);
    require_minimal(srf, mesh);
    const double R = srf.barrier.radius;
    const bool hemi = std::abs(R - pi / 2.0) < 1e-12;
    const int n = mesh.n_vertices();

    Eigen::VectorXd p2 = Eigen::VectorXd::Constant(n, 2.0);
    const AssembledForm base = assemble(mesh, p2, Eigen::VectorXd::Zero(n));

    Eigen::MatrixXd X(n, 4);
    for (int i = 0; i < n; ++i) X.row(i) = mesh.vertices[i].x.transpose();

    EigenfunctionReport rep;
    rep.h = mesh.max_edge_length();
    rep.span_rank = gram_rank(X, base.mass);

    const bool has_boundary = !base.boundary.empty();
    const double area = mass_norm2(base, Eigen::VectorXd::Ones(n));
    for (int a = 0; a < 4; ++a) {
        const Eigen::VectorXd f = X.col(a);
        EigenfunctionCheck c;
        c.label = "x" + std::to_string(a);
        const double m2 = mass_norm2(base, f);
        if (m2 <= 1e-24 * area) {
            // Identically zero coordinate (axis-aligned surface): nothing to verify.
            c.label += " (vanishes)";
            rep.checks.push_back(c);
            continue;
        }
        double energy = form_value(base, f);  // f' (K - 2M) f
        if (a == 0 && hemi) {
            c.dirichlet = true;
            for (int i : base.boundary)
                c.boundary_residual = std::max(c.boundary_residual, std::abs(f[i]));
        } else if (has_boundary) {
            const double qa = (a == 0) ? -std::tan(R) : 1.0 / std::tan(R);
            energy -= qa * f.dot(base.boundary_mass * f);
            const Eigen::VectorXd t = normal_trace(base, f);
            for (size_t k = 0; k < base.boundary.size(); ++k)
                c.boundary_residual =
                    std::max(c.boundary_residual, std::abs(t[k] - qa * f[base.boundary[k]]));
        }
        c.energy_residual = std::abs(energy) / m2;
        rep.max_energy_residual = std::max(rep.max_energy_residual, c.energy_residual);
        rep.checks.push_back(c);
    }
    return rep;
}

// The normal components of a minimal surface solve (Laplace + |A|^2) f = 0.
// The cap-axis component has constant trace -sin(R) cos(g); the tangential
// components satisfy cos(g) f + sin(g) <eta, e_i> = 0 on the boundary and are
// zero-modes of the Robin weight cot(g) A(eta,eta).
inline EigenfunctionReport verify_gauss_eigenfunctions(const ParametricSurface& srf,
                                                       double gamma, double h) {
    const TriMesh mesh = mesh_parametric(srf, h);
    require_minimal(srf, mesh);
    const double R = srf.barrier.radius;
    const int n = mesh.n_vertices();

    const Eigen::VectorXd pA = flavor_interior_coefficient(srf, FormFlavor::Modified, mesh);
    Eigen::MatrixXd N(n, 4);
    std::vector<Vec4> etas(n, Vec4::Zero());
    parallel_for(n, [&](int i) {
        const auto& vx = mesh.vertices[i];
        N.row(i) = vertex_curvature(srf, vx.u, vx.v).nu.transpose();
    });

    const AssembledForm base = assemble(mesh, pA, Eigen::VectorXd::Zero(n));
    const bool has_boundary = !base.boundary.empty();
    const double cg = std::cos(gamma), sg = std::sin(gamma);
    const bool dirich0 = std::abs(cg) < 1e-12;

    Eigen::VectorXd a_eta = Eigen::VectorXd::Zero(n);
    if (has_boundary) {
        for (int i : base.boundary) {
            const auto& vx = mesh.vertices[i];
            const BoundaryFrame bf = boundary_frame_at(srf, vx.u, vx.v);
            a_eta[i] = bf.A_eta_eta;
            etas[i] = bf.eta;
        }
    }

    EigenfunctionReport rep;
    rep.h = mesh.max_edge_length();
    rep.span_rank = gram_rank(N, base.mass);

    // Boundary weight of the modified index form, for the trace Rayleigh
    // quotients of the tangential components.
    AssembledForm modified;
    if (has_boundary) {
        const Eigen::VectorXd qA =
            flavor_boundary_coefficient(srf, gamma, FormFlavor::Modified, mesh);
        modified = assemble(mesh, pA, qA);
    }

    const double area = mass_norm2(base, Eigen::VectorXd::Ones(n));
    const double blen =
        has_boundary ? Eigen::VectorXd::Ones(n).dot(base.boundary_mass * Eigen::VectorXd::Ones(n))
                     : 0.0;
    for (int a = 0; a < 4; ++a) {
        const Eigen::VectorXd f = N.col(a);
        EigenfunctionCheck c;
        c.label = "nu" + std::to_string(a);
        const double m2 = mass_norm2(base, f);
        if (m2 <= 1e-24 * area) {
            // Identically zero normal component (axis-aligned surface): vacuous.
            c.label += " (vanishes)";
            rep.checks.push_back(c);
            continue;
        }
        double energy = form_value(base, f);  // f' (K - M_p) f
        if (has_boundary) {
            if (a == 0) {
                const double trace = -std::sin(R) * cg;
                for (int i : base.boundary)
                    c.boundary_residual = std::max(c.boundary_residual, std::abs(f[i] - trace));
                if (dirich0) {
                    c.dirichlet = true;
                } else {
                    Eigen::VectorXd q0 = Eigen::VectorXd::Zero(n);
                    for (int i : base.boundary) q0[i] = -a_eta[i] * sg / cg;
                    energy -= f.dot(assemble(mesh, pA, q0).boundary_mass_q * f);
                }
            } else {
                Eigen::VectorXd qi = Eigen::VectorXd::Zero(n);
                for (int i : base.boundary) qi[i] = a_eta[i] * cg / sg;
                energy -= f.dot(assemble(mesh, pA, qi).boundary_mass_q * f);
                for (int i : base.boundary)
                    c.boundary_residual = std::max(
                        c.boundary_residual, std::abs(cg * f[i] + sg * etas[i][a]));
                const double b2 = f.dot(modified.boundary_mass * f);
                if (b2 > 1e-24 * blen)
                    rep.steklov_rayleigh.push_back(std::abs(form_value(modified, f)) / b2);
            }
        }
        c.energy_residual = std::abs(energy) / m2;
        rep.max_energy_residual = std::max(rep.max_energy_residual, c.energy_residual);
        rep.checks.push_back(c);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Dual annuli via the unit normal map.

struct DualParams {
    double r_tilde = 0.0;
    double gamma_tilde = 0.0;
};

// Cap parameters of the dual surface:
//   cos(R~) = -eps sin(R) cos(g),   sin(R~) sin(g~) = sin(R) sin(g),
// with g~ in (0, pi/2].
inline DualParams dual_params(double cap_radius, double gamma, int epsilon) {
    if (epsilon != 1 && epsilon != -1) throw DomainError("dual_params: epsilon must be +-1");
    DualParams d;
    const double c = -epsilon * std::sin(cap_radius) * std::cos(gamma);
    d.r_tilde = std::acos(std::clamp(c, -1.0, 1.0));
    const double sr = std::sin(d.r_tilde);
    if (sr < 1e-13) throw NumericError("dual_params: degenerate dual cap");
    d.gamma_tilde = std::asin(std::clamp(std::sin(cap_radius) * std::sin(gamma) / sr, -1.0, 1.0));
    return d;
}

struct DualSurface {
    ParametricSurface base;
    ParametricSurface dual;
    double base_gamma = 0.0;
    int epsilon = 1;
    double r_tilde = 0.0, gamma_tilde = 0.0;            // parameter relations
    double r_tilde_measured = 0.0, gamma_tilde_measured = 0.0;
    double metric_residual = 0.0;   // max rel |g_dual - psi^2 g|, psi = |A|/sqrt(2)
    double slice_residual = 0.0;    // dual boundary distance from the fitted slice
    double min_second_form = 0.0;   // min |A| over interior samples
};

inline DualSurface dual_annulus(const ParametricSurface& base, double gamma, int epsilon = 0,
                                int samples = 48) {
    const Chart& bc = base.chart;
    if (!bc.periodic_u || bc.periodic_v || bc.collapse_v0 || bc.collapse_v1)
        throw DomainError("dual_annulus: chart is not an annulus");

    DualSurface d;
    d.base = base;
    d.base_gamma = gamma;

    // Nowhere-vanishing second form on the interior.
    double min_a = 1e30;
    for (int i = 0; i < samples; ++i)
        for (int j = 1; j < samples; ++j) {
            const double u = bc.u0 + bc.u_span() * i / samples;
            const double v = bc.v0 + bc.v_span() * j / samples;
            min_a = std::min(min_a,
                             std::sqrt(fundamental_forms(base, u, v).second_form_norm2));
        }
    d.min_second_form = min_a;
    if (min_a <= 1e-6)
        throw DomainError("dual_annulus: second fundamental form vanishes somewhere");

    // Constant-sign A(eta,eta) on the boundary fixes the sign choice.
    double lo = 1e30, hi = -1e30, avg = 0.0;
    int count = 0;
    for (ChartEdge e : bc.boundary_edges()) {
        const Chart::EdgeFrame ef = bc.edge_frame(e);
        for (int k = 0; k < 24; ++k) {
            const double s = ef.length * (k + 0.5) / 24;
            const double val = boundary_frame(base, e, s).A_eta_eta;
            lo = std::min(lo, val);
            hi = std::max(hi, val);
            avg += val;
            ++count;
        }
    }
    avg /= count;
    if (lo < -1e-10 && hi > 1e-10)
        throw DomainError("dual_annulus: A(eta,eta) changes sign on the boundary");
    const int eps_auto = (avg > 0.0) ? 1 : -1;
    if (epsilon == 0) epsilon = eps_auto;
    if (epsilon != eps_auto)
        throw DomainError("dual_annulus: requested sign leaves eps*A(eta,eta) negative");
    d.epsilon = epsilon;

    const DualParams dp = dual_params(base.barrier.radius, gamma, epsilon);
    d.r_tilde = dp.r_tilde;
    d.gamma_tilde = dp.gamma_tilde;

    // Dual chart: the (signed) unit normal over the same parameters.
    Chart dc;
    dc.u0 = bc.u0;
    dc.u1 = bc.u1;
    dc.v0 = bc.v0;
    dc.v1 = bc.v1;
    dc.periodic_u = bc.periodic_u;
    const ParametricSurface bcopy = base;
    const double eps = epsilon;
    dc.position = [bcopy, eps](double u, double v) {
        return Vec4(eps * fundamental_forms(bcopy, u, v).nu);
    };
    dc.first_derivatives = [bcopy, eps](double u, double v) {
        const CurvaturePack p = fundamental_forms(bcopy, u, v);
        const Eigen::Matrix2d W = p.shape_operator();
        const Vec4 nu_u = W(0, 0) * p.jet.xu + W(1, 0) * p.jet.xv;
        const Vec4 nu_v = W(0, 1) * p.jet.xu + W(1, 1) * p.jet.xv;
        return std::make_pair(Vec4(eps * nu_u), Vec4(eps * nu_v));
    };
    d.dual.chart = dc;
    d.dual.orientation = 1.0;

    // Fit the dual barrier: both dual boundary loops lie on one slice
    // <x, c> = cos(R~), with the surface interior on the cap side.
    std::vector<Vec4> pts;
    for (ChartEdge e : dc.boundary_edges()) {
        const Chart::EdgeFrame ef = dc.edge_frame(e);
        for (int k = 0; k < 24; ++k) {
            const auto [u, v] = ef.point(ef.length * (k + 0.5) / 24);
            pts.push_back(dc.position(u, v));
        }
    }
    Vec4 mean = Vec4::Zero();
    for (const auto& x : pts) mean += x;
    mean /= static_cast<double>(pts.size());
    Mat4 cov = Mat4::Zero();
    for (const auto& x : pts) cov += (x - mean) * (x - mean).transpose();
    Eigen::SelfAdjointEigenSolver<Mat4> es(cov);
    Vec4 c = es.eigenvectors().col(0);
    double offset = c.dot(mean);
    for (const auto& x : pts)
        d.slice_residual = std::max(d.slice_residual, std::abs(c.dot(x) - offset));
    if (d.slice_residual > 1e-6)
        throw NumericError("dual_annulus: dual boundary does not lie on a single slice");

    double side = 0.0;
    for (int i = 0; i < 8; ++i) {
        const double u = bc.u0 + bc.u_span() * i / 8;
        side += c.dot(dc.position(u, 0.5 * (bc.v0 + bc.v1))) - offset;
    }
    if (side < 0.0) {
        c = -c;
        offset = -offset;
    }
    d.r_tilde_measured = std::acos(std::clamp(offset, -1.0, 1.0));
    d.dual.barrier = Cap{c.normalized(), d.r_tilde_measured};

    // Orient the dual so its measured contact angle matches the parameter
    // relation.
    const ChartEdge e0 = dc.boundary_edges().front();
    const double mid = 0.5 * dc.edge_frame(e0).length;
    double cos_meas = boundary_frame(d.dual, e0, mid).cos_gamma;
    const double target = std::cos(d.gamma_tilde);
    if (std::abs(cos_meas - target) > std::abs(-cos_meas - target)) d.dual.orientation = -1.0;

    // Measured contact angle, averaged over both loops.
    double angle = 0.0;
    int acount = 0;
    for (ChartEdge e : dc.boundary_edges()) {
        const Chart::EdgeFrame ef = dc.edge_frame(e);
        for (int k = 0; k < 16; ++k) {
            angle += boundary_frame(d.dual, e, ef.length * (k + 0.5) / 16).contact_angle();
            ++acount;
        }
    }
    d.gamma_tilde_measured = angle / acount;

    // Conformal relation between the metrics.
    for (int i = 0; i < samples; ++i)
        for (int j = 1; j < samples; ++j) {
            const double u = bc.u0 + bc.u_span() * i / samples;
            const double v = bc.v0 + bc.v_span() * j / samples;
            const CurvaturePack pb = fundamental_forms(base, u, v);
            const CurvaturePack pd = fundamental_forms(d.dual, u, v);
            const double psi2 = 0.5 * pb.second_form_norm2;
            const double rel =
                (pd.g - psi2 * pb.g).norm() / std::max(1e-300, (psi2 * pb.g).norm());
            d.metric_residual = std::max(d.metric_residual, rel);
        }
    return d;
}

inline DualSurface dual_annulus(const BuiltinSurface& b, int epsilon = 0, int samples = 48) {
    if (b.closed || b.euler_characteristic != 0)
        throw DomainError("dual_annulus: builtin surface is not an annulus");
    return dual_annulus(b.surface, b.contact_angle, epsilon, samples);
}

// Same connectivity and parameters, positions re-evaluated through another
// chart; this is how base and dual share trial functions.
inline TriMesh remap_mesh(const TriMesh& mesh, const Chart& chart) {
    TriMesh out = mesh;
    for (auto& v : out.vertices) v.x = chart.position(v.u, v.v);
    return out;
}

struct DualIdentityReport {
    int trials = 0;
    double max_index_residual = 0.0;   // Morse form, base vs dual
    double max_energy_residual = 0.0;  // modified base form vs dual spectral form
    double constant_base = 0.0;        // modified form on the constant field
    double constant_dual = 0.0;        // dual spectral form on the constant field
    DualSurface dual;
};

// The Morse form of an annulus and of its normal-map dual agree on shared
// parameter-space trial fields, as do the modified form and the dual's
// spectral form.
inline DualIdentityReport dual_form_identity_check(const BuiltinSurface& b, int trials,
                                                   double h, unsigned seed = 77) {
    DualIdentityReport rep;
    rep.trials = trials;
    rep.dual = dual_annulus(b);
    const ParametricSurface& base = rep.dual.base;
    const ParametricSurface& dual = rep.dual.dual;

    const TriMesh bm = mesh_parametric(base, h);
    const TriMesh dm = remap_mesh(bm, dual.chart);
    const int n = bm.n_vertices();

    const Eigen::VectorXd p_morse_b = flavor_interior_coefficient(base, FormFlavor::Morse, bm);
    const Eigen::VectorXd q_morse_b =
        flavor_boundary_coefficient(base, rep.dual.base_gamma, FormFlavor::Morse, bm);
    const AssembledForm QA = assemble(bm, p_morse_b, q_morse_b);
    const AssembledForm QAmod =
        assemble(bm, Eigen::VectorXd(p_morse_b.array() - 2.0), q_morse_b);

    const Eigen::VectorXd p_morse_d = flavor_interior_coefficient(dual, FormFlavor::Morse, dm);
    const Eigen::VectorXd q_morse_d =
        flavor_boundary_coefficient(dual, rep.dual.gamma_tilde, FormFlavor::Morse, dm);
    const AssembledForm QAd = assemble(dm, p_morse_d, q_morse_d);
    const AssembledForm QSd =
        assemble(dm, flavor_interior_coefficient(dual, FormFlavor::Spectral, dm),
                 flavor_boundary_coefficient(dual, rep.dual.gamma_tilde, FormFlavor::Spectral, dm));

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    auto relative = [](double x, double y) {
        const double denom = std::max(std::abs(x), std::abs(y));
        return denom < 1e-12 ? std::abs(x - y) : std::abs(x - y) / denom;
    };

    for (int trial = 0; trial < trials; ++trial) {
        Eigen::VectorXd f(n);
        if (trial == 0) {
            f.setOnes();
        } else {
            double c[9];
            for (double& x : c) x = uni(rng);
            const Chart& bc = base.chart;
            for (int i = 0; i < n; ++i) {
                const double u = bm.vertices[i].u;
                const double t = 2.0 * (bm.vertices[i].v - bc.v0) / bc.v_span() - 1.0;
                f[i] = c[0] + c[1] * std::cos(u) + c[2] * std::sin(u) + c[3] * t
                       + c[4] * t * t + c[5] * t * std::cos(u) + c[6] * t * std::sin(u)
                       + c[7] * std::cos(2.0 * u) + c[8] * std::sin(2.0 * u);
            }
        }
        const double qa = form_value(QA, f), qad = form_value(QAd, f);
        const double qm = form_value(QAmod, f), qsd = form_value(QSd, f);
        rep.max_index_residual = std::max(rep.max_index_residual, relative(qa, qad));
        rep.max_energy_residual = std::max(rep.max_energy_residual, relative(qm, qsd));
        if (trial == 0) {
            rep.constant_base = qm;
            rep.constant_dual = qsd;
        }
    }
    return rep;
}

// Dual of the dual against the base: the induced metrics at shared
// parameters must coincide (positions may differ by a global isometry).
inline double double_dual_metric_residual(const BuiltinSurface& b, int samples = 16) {
    const DualSurface d1 = dual_annulus(b);
    const DualSurface d2 = dual_annulus(d1.dual, d1.gamma_tilde, 0, samples);
    const Chart& bc = b.surface.chart;
    double worst = 0.0;
    for (int i = 0; i < samples; ++i)
        for (int j = 1; j < samples; ++j) {
            const double u = bc.u0 + bc.u_span() * i / samples;
            const double v = bc.v0 + bc.v_span() * j / samples;
            const Eigen::Matrix2d g0 = fundamental_forms(b.surface, u, v).g;
            const Eigen::Matrix2d g2 = fundamental_forms(d2.dual, u, v).g;
            worst = std::max(worst, (g2 - g0).norm() / g0.norm());
        }
    return worst;
}

// ---------------------------------------------------------------------------
// Conformal balancing of boundary moments.

struct BalanceResult {
    MoebiusMap map;
    Vec4 y = Vec4::Zero();
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline Eigen::Vector3d boundary_moments(const TriMesh& mesh, const Eigen::VectorXd& w,
                                        const MoebiusMap& map) {
    Eigen::Vector3d m = Eigen::Vector3d::Zero();
    for (const auto& e : mesh.boundary_edges) {
        const auto& a = mesh.vertices[e.a];
        const auto& b = mesh.vertices[e.b];
        const double len = (a.x - b.x).norm();
        const Vec4 pa = map(a.x), pb = map(b.x);
        const double wa = w[e.a], wb = w[e.b];
        for (int i = 0; i < 3; ++i)
            m[i] += len / 6.0
                    * (wa * (2.0 * pa[i + 1] + pb[i + 1]) + wb * (pa[i + 1] + 2.0 * pb[i + 1]));
    }
    return m;
}

// Damped Newton search for the hemisphere automorphism that zeroes the
// weighted boundary moments of the three equatorial coordinates.
inline BalanceResult conformal_balance(const TriMesh& mesh, const Eigen::VectorXd& weight,
                                       double tol = defaults::newton_tol,
                                       int max_iter = defaults::newton_max_iter) {
    if (mesh.boundary_edges.empty())
        throw DomainError("conformal_balance: mesh has no boundary");
    if (weight.size() != mesh.n_vertices())
        throw DomainError("conformal_balance: weight size mismatch");
    double wmax = 0.0, wmin = 0.0;
    for (int i : mesh.boundary_vertices()) {
        wmax = std::max(wmax, weight[i]);
        wmin = std::min(wmin, weight[i]);
    }
    if (wmax <= 0.0 || wmin < -1e-6 * wmax)
        throw DomainError("conformal_balance: weight must be nonnegative and nontrivial");

    auto map_of = [](const Eigen::Vector3d& y) {
        Vec4 y4;
        y4 << 0.0, y[0], y[1], y[2];
        return cap_automorphism(pi / 2.0, Mat4::Identity(), y4);
    };
    auto m_of = [&](const Eigen::Vector3d& y) {
        return boundary_moments(mesh, weight, map_of(y));
    };

    Eigen::Vector3d y = Eigen::Vector3d::Zero();
    Eigen::Vector3d m = m_of(y);
    if (m.norm() > tol) y = -0.1 * m.normalized();
    m = m_of(y);

    BalanceResult out;
    const double fd = 1e-6;
    while (m.norm() > tol && out.iterations < max_iter) {
        Eigen::Matrix3d J;
        for (int j = 0; j < 3; ++j) {
            Eigen::Vector3d yp = y, ym = y;
            yp[j] += fd;
            ym[j] -= fd;
            J.col(j) = (m_of(yp) - m_of(ym)) / (2.0 * fd);
        }
        const Eigen::Vector3d step = J.fullPivLu().solve(-m);
        double lam = 1.0;
        Eigen::Vector3d ynext, mnext;
        for (;;) {
            ynext = y + lam * step;
            if (ynext.norm() > 0.98) ynext *= 0.98 / ynext.norm();
            mnext = m_of(ynext);
            if (mnext.norm() < m.norm() || lam < 1e-4) break;
            lam *= 0.5;
        }
        y = ynext;
        m = mnext;
        ++out.iterations;
    }
    out.residual = m.norm();
    out.converged = out.residual <= tol;
    out.y << 0.0, y[0], y[1], y[2];
    out.map = map_of(y);
    if (!out.converged)
        throw NumericError("conformal_balance: no balance found, residual "
                           + std::to_string(out.residual));
    return out;
}

// ---------------------------------------------------------------------------
// Structured index report.

struct UrbanoReport {
    std::string surface_name;
    double gamma = pi / 2.0;
    bool closed = false;
    bool totally_geodesic = false;
    bool rotationally_symmetric = false;
    double symmetry_variation = 0.0;
    IndexReport spectral;
    IndexReport morse;
    IndexReport modified;
    int ind_morse = 0;
    int ind0_modified = 0;
    double lambda_d0 = 0.0;        // bottom Dirichlet eigenvalue, modified form
    std::string dichotomy;         // sign class of lambda_d0
    double boundary_q_integral = 0.0;
    std::string hypothesis_class;
    std::vector<std::pair<std::string, bool>> checks;
    bool consistent = true;
};

// Variation of curvature invariants along the u direction; rotationally
// symmetric builtins are u-invariant.
inline double symmetry_variation(const ParametricSurface& srf, int samples = 24) {
    const Chart& c = srf.chart;
    double worst = 0.0;
    for (int j = 1; j < 6; ++j) {
        const double v = c.v0 + c.v_span() * j / 6.0;
        double mean_a = 0.0, mean_h = 0.0;
        std::vector<double> a2(samples), hh(samples);
        for (int i = 0; i < samples; ++i) {
            const double u = c.u0 + c.u_span() * i / samples;
            const CurvaturePack p = vertex_curvature(srf, u, v);
            a2[i] = p.second_form_norm2;
            hh[i] = p.mean_curvature;
            mean_a += a2[i];
            mean_h += hh[i];
        }
        mean_a /= samples;
        mean_h /= samples;
        for (int i = 0; i < samples; ++i) {
            worst = std::max(worst, std::abs(a2[i] - mean_a) / (1.0 + std::abs(mean_a)));
            worst = std::max(worst, std::abs(hh[i] - mean_h) / (1.0 + std::abs(mean_h)));
        }
    }
    return worst;
}

inline UrbanoReport urbano_report(const BuiltinSurface& b, double h) {
    UrbanoReport r;
    r.surface_name = b.name;
    r.gamma = b.contact_angle;
    r.closed = b.closed;

    const IndexProblem ps = build_index_problem(b, FormFlavor::Spectral, h);
    const IndexProblem pm = build_index_problem(b, FormFlavor::Morse, h);
    const IndexProblem pmod = build_index_problem(b, FormFlavor::Modified, h);
    r.spectral = index_report(ps);
    r.morse = index_report(pm);
    r.modified = index_report(pmod);
    r.ind_morse = r.morse.ind;
    r.ind0_modified = r.modified.ind + r.modified.nullity;

    r.totally_geodesic =
        std::sqrt(std::max(0.0, pm.p.maxCoeff() - 2.0)) < 1e-6;
    r.symmetry_variation = symmetry_variation(b.surface);
    r.rotationally_symmetric = r.symmetry_variation < 1e-8;

    if (!r.closed) {
        const Eigen::VectorXd ones = Eigen::VectorXd::Ones(pmod.form.n);
        r.boundary_q_integral = ones.dot(pmod.form.boundary_mass_q * ones);
        const SpectrumReport d = dirichlet_spectrum(pmod.form, pmod.zero_tol, 1);
        r.lambda_d0 = d.values[0];
        if (r.lambda_d0 > pmod.zero_tol)
            r.dichotomy = "positive";
        else if (r.lambda_d0 >= -pmod.zero_tol)
            r.dichotomy = "zero";
        else
            r.dichotomy = "negative";
    } else {
        r.dichotomy = "none";
    }

    const double cg = std::cos(r.gamma);
    if (r.closed)
        r.hypothesis_class = "not applicable (closed surface)";
    else if (std::abs(cg) < 1e-12)
        r.hypothesis_class = "cos(gamma) = 0";
    else if (cg < 2.0 / 9.0)
        r.hypothesis_class = "cos(gamma) < 2/9 with embedded boundary";
    else if (cg < 2.0 / 5.0)
        r.hypothesis_class = "cos(gamma) < 2/5 with embedded wet surface";
    else
        r.hypothesis_class = "outside the verified angle ranges";

    r.checks.emplace_back("ind0(modified) <= ind(morse)", r.ind0_modified <= r.ind_morse);
    if (r.totally_geodesic)
        r.checks.emplace_back("totally geodesic index is 1", r.ind_morse == 1);
    else
        r.checks.emplace_back("non-geodesic index is at least 4", r.ind_morse >= 4);
    if (!r.totally_geodesic)
        r.checks.emplace_back("non-geodesic spectral index is at least 1", r.spectral.ind >= 1);
    if (!r.closed && r.ind_morse == 4 && r.boundary_q_integral > -1e-8
        && r.hypothesis_class != "outside the verified angle ranges")
        r.checks.emplace_back("index 4 only for rotationally symmetric annuli",
                              r.rotationally_symmetric);
    for (const auto& [label, ok] : r.checks)
        if (!ok) r.consistent = false;
    return r;
}

// Margin of the index-topology inequality
//   cos(g) (-2 pi chi(wet) - |wet| + 2 |image wet|) <= 4 pi chi(surface)
// under a conformal pushforward; nonpositive when the energy drop theorems
// apply.
inline double urbano_topology_margin(const CapillaryScene& s, const MoebiusMap& map) {
    const EnergyValue base = evaluate_energy(s);
    const CapillaryScene moved = transform_scene(s, map);
    const EnergyValue img = evaluate_energy(moved);
    const double lhs = std::cos(s.gamma)
                       * (-2.0 * pi * static_cast<double>(s.wet.size()) - base.wet_area
                          + 2.0 * img.wet_area);
    return lhs - 4.0 * pi * s.euler_characteristic;
}

} // namespace capflow
