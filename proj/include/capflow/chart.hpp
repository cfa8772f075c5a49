#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "capflow/config.hpp"
#include "capflow/geometry.hpp"

namespace capflow {

// Second-order jet of an immersion at a parameter point.
struct ChartJet {
    Vec4 x = Vec4::Zero();
    Vec4 xu = Vec4::Zero();
    Vec4 xv = Vec4::Zero();
    Vec4 xuu = Vec4::Zero();
    Vec4 xuv = Vec4::Zero();
    Vec4 xvv = Vec4::Zero();
};

enum class ChartEdge { UMin, UMax, VMin, VMax };

// Rectangular parameter chart of a surface patch in the sphere.  The
// position map must remain evaluable slightly outside the rectangle so
// finite differences work on the closed domain.  A collapsed v-edge means
// the whole edge maps to one point (a polar chart).
struct Chart {
    double u0 = 0.0, u1 = 1.0;
    double v0 = 0.0, v1 = 1.0;
    bool periodic_u = false;
    bool periodic_v = false;
    bool collapse_v0 = false;
    bool collapse_v1 = false;

    std::function<Vec4(double, double)> position;
    // Optional exact jet; preferred when present.
    std::function<ChartJet(double, double)> analytic_jet;
    // Optional exact first derivatives (xu, xv); second derivatives are then
    // centered differences of these, which is far more accurate than
    // differencing positions twice.
    std::function<std::pair<Vec4, Vec4>(double, double)> first_derivatives;

    double u_span() const { return u1 - u0; }
    double v_span() const { return v1 - v0; }

    ChartJet jet(double u, double v) const {
        if (analytic_jet) return analytic_jet(u, v);
        const double h = defaults::fd_step;
        ChartJet j;
        j.x = position(u, v);
        if (first_derivatives) {
            const auto [xu, xv] = first_derivatives(u, v);
            j.xu = xu;
            j.xv = xv;
            const auto [xu_up, xv_up] = first_derivatives(u + h, v);
            const auto [xu_um, xv_um] = first_derivatives(u - h, v);
            const auto [xu_vp, xv_vp] = first_derivatives(u, v + h);
            const auto [xu_vm, xv_vm] = first_derivatives(u, v - h);
            j.xuu = (xu_up - xu_um) / (2.0 * h);
            j.xvv = (xv_vp - xv_vm) / (2.0 * h);
            j.xuv = 0.5 * ((xu_vp - xu_vm) / (2.0 * h) + (xv_up - xv_um) / (2.0 * h));
            return j;
        }
        const Vec4 xup = position(u + h, v);
        const Vec4 xum = position(u - h, v);
        const Vec4 xvp = position(u, v + h);
        const Vec4 xvm = position(u, v - h);
        j.xu = (xup - xum) / (2.0 * h);
        j.xv = (xvp - xvm) / (2.0 * h);
        j.xuu = (xup - 2.0 * j.x + xum) / (h * h);
        j.xvv = (xvp - 2.0 * j.x + xvm) / (h * h);
        j.xuv = (position(u + h, v + h) - position(u + h, v - h)
                 - position(u - h, v + h) + position(u - h, v - h)) / (4.0 * h * h);
        return j;
    }

    std::vector<ChartEdge> boundary_edges() const {
        std::vector<ChartEdge> out;
        if (!periodic_u) {
            out.push_back(ChartEdge::UMin);
            out.push_back(ChartEdge::UMax);
        }
        if (!periodic_v) {
            if (!collapse_v0) out.push_back(ChartEdge::VMin);
            if (!collapse_v1) out.push_back(ChartEdge::VMax);
        }
        return out;
    }

    // Parameter-space description of one rectangle edge: point at arclength
    // coordinate s in [0, length], the in-edge direction, and the outward
    // cross-edge direction.
    struct EdgeFrame {
        std::function<std::pair<double, double>(double)> point;
        double length = 0.0;
        double du = 0.0, dv = 0.0;           // unit tangent in parameters
        double out_du = 0.0, out_dv = 0.0;   // outward in parameters
    };

    EdgeFrame edge_frame(ChartEdge e) const {
        EdgeFrame f;
        switch (e) {
            case ChartEdge::UMin:
                f.length = v_span();
                f.point = [this](double s) { return std::make_pair(u0, v0 + s); };
                f.dv = 1.0;
                f.out_du = -1.0;
                break;
            case ChartEdge::UMax:
                f.length = v_span();
                f.point = [this](double s) { return std::make_pair(u1, v0 + s); };
                f.dv = 1.0;
                f.out_du = 1.0;
                break;
            case ChartEdge::VMin:
                f.length = u_span();
                f.point = [this](double s) { return std::make_pair(u0 + s, v0); };
                f.du = 1.0;
                f.out_dv = -1.0;
                break;
            case ChartEdge::VMax:
                f.length = u_span();
                f.point = [this](double s) { return std::make_pair(u0 + s, v1); };
                f.du = 1.0;
                f.out_dv = 1.0;
                break;
        }
        return f;
    }
};

} // namespace capflow
