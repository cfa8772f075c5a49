#pragma once

#include <cmath>

#include "capflow/chart.hpp"
#include "capflow/geometry.hpp"
#include "capflow/moebius.hpp"

namespace capflow {

// An immersed surface patch in the sphere together with the cap it is
// anchored to.  The orientation sign fixes the unit normal as
// orientation * normalize(cross4(x, xu, xv)).
struct ParametricSurface {
    Chart chart;
    Cap barrier{axis(0), pi / 2.0};
    double orientation = 1.0;
};

// Pointwise first and second fundamental data.  Shape operator convention:
// A_ij = -<nu, x_ij>, so a geodesic sphere of radius r about its inward
// center has A = cot(r) g.
struct CurvaturePack {
    ChartJet jet;
    Vec4 nu = Vec4::Zero();
    Eigen::Matrix2d g = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    double det_g = 0.0;
    double mean_curvature = 0.0;       // trace of the shape operator
    double gauss_curvature = 0.0;      // intrinsic, includes the ambient +1
    double second_form_norm2 = 0.0;    // |A|^2 in the induced metric
    double k1 = 0.0, k2 = 0.0;         // principal curvatures

    Eigen::Matrix2d shape_operator() const { return g.inverse() * A; }
    double traceless_norm2() const {
        const double h = mean_curvature;
        return second_form_norm2 - 0.5 * h * h;
    }
};

inline CurvaturePack fundamental_forms(const ParametricSurface& srf, double u, double v) {
    CurvaturePack p;
    p.jet = srf.chart.jet(u, v);
    const ChartJet& j = p.jet;
    p.g(0, 0) = j.xu.dot(j.xu);
    p.g(0, 1) = p.g(1, 0) = j.xu.dot(j.xv);
    p.g(1, 1) = j.xv.dot(j.xv);
    p.det_g = p.g.determinant();
    if (p.det_g <= 0.0)
        throw NumericError("fundamental_forms: degenerate metric");
    p.nu = srf.orientation * cross4(j.x, j.xu, j.xv).normalized();
    p.A(0, 0) = -p.nu.dot(j.xuu);
    p.A(0, 1) = p.A(1, 0) = -p.nu.dot(j.xuv);
    p.A(1, 1) = -p.nu.dot(j.xvv);
    const Eigen::Matrix2d S = p.g.inverse() * p.A;
    p.mean_curvature = S.trace();
    p.gauss_curvature = 1.0 + p.A.determinant() / p.det_g;
    p.second_form_norm2 = (S * S).trace();
    const double disc = std::sqrt(std::max(0.0, 0.25 * S.trace() * S.trace() - S.determinant()));
    p.k1 = 0.5 * S.trace() + disc;
    p.k2 = 0.5 * S.trace() - disc;
    return p;
}

// Frame along a boundary edge: unit tangent T, outward conormal eta in the
// surface, surface normal nu, barrier outward normal eta_bar, and the
// barrier-tangential normal nu_bar of the boundary curve.
struct BoundaryFrame {
    Vec4 x, T, eta, nu, eta_bar, nu_bar;
    double cos_gamma = 0.0, sin_gamma = 0.0;   // measured contact angle
    double eta_u = 0.0, eta_v = 0.0;           // eta in the (xu, xv) basis
    double T_u = 0.0, T_v = 0.0;               // T in the (xu, xv) basis
    double speed = 0.0;                        // |dx/ds| in edge arclength s
    double geodesic_curvature = 0.0;           // h^eta(T,T) = <d_T eta, T>
    double A_eta_eta = 0.0;                    // second fundamental form on eta

    double contact_angle() const { return std::atan2(sin_gamma, cos_gamma); }
};

inline BoundaryFrame boundary_frame(const ParametricSurface& srf, ChartEdge edge, double s) {
    const Chart::EdgeFrame ef = srf.chart.edge_frame(edge);
    const auto [u, v] = ef.point(s);
    const CurvaturePack p = fundamental_forms(srf, u, v);
    const ChartJet& j = p.jet;

    BoundaryFrame f;
    f.x = j.x;
    f.nu = p.nu;

    const Vec4 c1 = ef.du * j.xu + ef.dv * j.xv;
    f.speed = c1.norm();
    if (f.speed < 1e-13) throw NumericError("boundary_frame: degenerate boundary tangent");
    f.T = c1 / f.speed;
    const double tu = ef.du / f.speed, tv = ef.dv / f.speed;
    f.T_u = tu;
    f.T_v = tv;

    Vec4 w = ef.out_du * j.xu + ef.out_dv * j.xv;
    double wu = ef.out_du, wv = ef.out_dv;
    const double along = w.dot(f.T);
    w -= along * f.T;
    wu -= along * tu;
    wv -= along * tv;
    const double wn = w.norm();
    if (wn < 1e-13) throw NumericError("boundary_frame: degenerate conormal");
    f.eta = w / wn;
    f.eta_u = wu / wn;
    f.eta_v = wv / wn;

    f.eta_bar = srf.barrier.outward_normal(f.x);
    f.cos_gamma = f.nu.dot(f.eta_bar);
    f.sin_gamma = f.eta.dot(f.eta_bar);
    if (f.sin_gamma < 1e-10)
        throw NumericError("boundary_frame: boundary does not meet the barrier transversally");
    f.nu_bar = (f.nu - f.cos_gamma * f.eta_bar) / f.sin_gamma;

    // Second derivative of the curve along the edge and the boundary form.
    const Vec4 c2 = ef.du * ef.du * j.xuu + 2.0 * ef.du * ef.dv * j.xuv + ef.dv * ef.dv * j.xvv;
    f.geodesic_curvature = -c2.dot(f.eta) / (f.speed * f.speed);
    f.A_eta_eta = f.eta_u * f.eta_u * p.A(0, 0) + 2.0 * f.eta_u * f.eta_v * p.A(0, 1)
                  + f.eta_v * f.eta_v * p.A(1, 1);
    return f;
}

// Image surface under a conformal transformation.  First derivatives use
// the exact differential; second derivatives difference those.
inline ParametricSurface pushforward_surface(const ParametricSurface& srf, const MoebiusMap& map) {
    ParametricSurface out;
    out.orientation = srf.orientation;
    out.barrier = cap_image(map, srf.barrier);
    Chart c = srf.chart;           // copy domain flags
    const Chart base = srf.chart;  // captured by value below
    c.analytic_jet = nullptr;
    c.position = [base, map](double u, double v) { return map(base.position(u, v)); };
    c.first_derivatives = [base, map](double u, double v) {
        const ChartJet j = base.jet(u, v);
        return std::make_pair(map.differential(j.x, j.xu), map.differential(j.x, j.xv));
    };
    out.chart = c;
    return out;
}

} // namespace capflow
