#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "capflow/energy.hpp"

using namespace capflow;

namespace {
std::mt19937_64 rng_for(int salt) { return std::mt19937_64(7700 + salt); }
} // namespace

TEST_CASE("energies of the equality surfaces match closed forms", "[energy]") {
    // Oracle: totally geodesic disc in the hemisphere, any contact angle.
    for (double gamma : {pi / 6.0, pi / 3.0, pi / 2.0}) {
        const CapillaryScene s = make_scene(half_equator(pi / 2.0, gamma));
        const EnergyValue e = evaluate_energy(s);
        CHECK(std::abs(e.area - 2.0 * pi) < 1e-9);
        CHECK(std::abs(e.wet_area - 2.0 * pi) < 1e-12);
        CHECK(std::abs(e.boundary - 2.0 * pi) < 1e-9);
        CHECK(std::abs(e.value - 2.0 * pi * (1.0 + std::cos(gamma))) < 1e-8);
        CHECK(std::abs(e.value_fb - 2.0 * pi) < 1e-9);
    }

    const CapillaryScene hc = make_scene(half_clifford_torus());
    const EnergyValue e = evaluate_energy(hc);
    CHECK(std::abs(e.area - pi * pi) < 1e-9);
    CHECK(std::abs(e.boundary - 2.0 * std::sqrt(2.0) * pi) < 1e-9);
    CHECK(std::abs(e.wet_area - 2.0 * pi * (2.0 - std::sqrt(2.0))) < 1e-12);
    // Hemisphere barrier: both cot R and cos gamma terms vanish.
    CHECK(std::abs(e.value - pi * pi) < 1e-9);
    CHECK(std::abs(e.value_fb - pi * pi) < 1e-9);
}

TEST_CASE("transformed scenes keep wet caps on the moved barrier", "[energy]") {
    auto rng = rng_for(1);
    const CapillaryScene base = make_scene(half_clifford_torus());
    for (int k = 0; k < 5; ++k) {
        const MoebiusMap m = MoebiusMap::pure_translation(0.4 * random_direction(rng));
        const CapillaryScene img = transform_scene(base, m);
        CHECK(img.gamma == base.gamma);
        CHECK(img.euler_characteristic == base.euler_characteristic);
        REQUIRE(img.wet.size() == base.wet.size());
        const Cap& b = img.surface.barrier;
        for (const WetCap& w : img.wet) {
            CHECK(std::abs(w.probe.dot(b.center) - std::cos(b.radius)) < 1e-9);
            CHECK(w.c0 > -1.0);
            CHECK(w.c0 < 1.0);
        }
        // Wet boundary circle stays glued to the surface boundary.
        const Chart::EdgeFrame ef = img.surface.chart.edge_frame(img.wet[0].edge);
        const BoundaryFrame f = boundary_frame(img.surface, img.wet[0].edge,
                                               0.37 * ef.length);
        const Vec4 sigma = (f.x - std::cos(b.radius) * b.center) / std::sin(b.radius);
        CHECK(std::abs(sigma.dot(img.wet[0].sigma_dir) - img.wet[0].c0) < 1e-9);
    }
}

TEST_CASE("free boundary flavor decreases along generic flows", "[energy]") {
    auto rng = rng_for(2);
    const CapillaryScene hc = make_scene(half_clifford_torus());
    for (int k = 0; k < 3; ++k) {
        const Vec4 a = random_direction(rng);
        const MonotoneTrace tr = monotonicity_trace(hc, a, 0.8, 12);
        REQUIRE(tr.steps.size() == 13);
        CHECK(tr.flavor == MonotoneFlavor::FreeBoundary);
        CHECK(tr.monotone);
        CHECK(tr.max_slope <= tr.slope_tol);
        // Minimal surface: the damping constant degenerates to zero.
        CHECK(tr.damping < 1e-10);
        CHECK(tr.steps.front().t == 0.0);
        CHECK(std::abs(tr.steps.back().t - 0.8) < 1e-12);
    }
}

TEST_CASE("capillary flavor decreases strictly for tilted directions", "[energy]") {
    const CapillaryScene he = make_scene(half_equator(pi / 2.0, pi / 3.0));
    Vec4 a;
    a << 0.6, 0.5, -0.4, 0.2;
    a.normalize();
    const MonotoneTrace tr = monotonicity_trace(he, a, 0.8, 10);
    CHECK(tr.flavor == MonotoneFlavor::Capillary);
    CHECK(tr.monotone);
    CHECK(tr.steps.back().monotone_quantity < tr.steps.front().monotone_quantity - 1e-3);
    // Radius evolution recorded in the trace follows the closed form.
    const ConformalFlow flow{a};
    for (const MonotoneStep& st : tr.steps) {
        const CapEvolution ev = evolve_cap(flow, st.t, Cap{axis(0), pi / 2.0});
        CHECK(std::abs(st.cap_radius - ev.cap.radius) < 1e-9);
    }
}

TEST_CASE("hemisphere flavor needs its hypotheses and stays monotone", "[energy]") {
    const CapillaryScene he = make_scene(half_equator(pi / 2.0, pi / 3.0));
    Vec4 a;
    a << 0.0, 0.8, -0.6, 0.0;
    a.normalize();
    const MonotoneTrace tr = monotonicity_trace(he, a, 0.6, 8, MonotoneFlavor::Hemisphere);
    CHECK(tr.monotone);
    for (const MonotoneStep& st : tr.steps)
        CHECK(std::abs(st.cap_radius - pi / 2.0) < 1e-10);

    // Tilted direction or non-hemisphere barrier: rejected.
    Vec4 tilted;
    tilted << 0.5, 0.5, -0.5, 0.5;
    CHECK_THROWS_AS(monotonicity_trace(he, tilted, 0.5, 6, MonotoneFlavor::Hemisphere),
                    DomainError);
    const CapillaryScene small = make_scene(half_equator(1.0, pi / 2.0));
    CHECK_THROWS_AS(monotonicity_trace(small, a, 0.5, 6, MonotoneFlavor::Hemisphere),
                    DomainError);
    CHECK_THROWS_AS(monotonicity_trace(he, a, 0.5, 1), DomainError);
}

TEST_CASE("conformal images never beat the equality surface", "[energy]") {
    auto rng = rng_for(3);
    std::uniform_real_distribution<double> mag(0.0, 0.8);
    for (double gamma : {pi / 3.0, pi / 2.0}) {
        const CapillaryScene base = make_scene(half_equator(pi / 2.0, gamma));
        const double e0 = evaluate_energy(base).value;
        for (int k = 0; k < 10; ++k) {
            const Vec4 y = mag(rng) * random_direction(rng, true);
            const MoebiusMap m = cap_automorphism(pi / 2.0, Mat4::Identity(), y);
            const double e1 = evaluate_energy(transform_scene(base, m)).value;
            CHECK(e1 <= e0 + 1e-6);
        }
    }
}

TEST_CASE("area identities hold for minimal surfaces under random maps", "[energy]") {
    auto rng = rng_for(4);
    std::uniform_real_distribution<double> mag(0.1, 0.5);
    const CapillaryScene hc = make_scene(half_clifford_torus());
    const CapillaryScene he = make_scene(half_equator(pi / 2.0, pi / 2.0));
    const CapillaryScene hea = make_scene(half_equator(pi / 2.0, pi / 3.0));
    for (int k = 0; k < 4; ++k) {
        const MoebiusMap m = MoebiusMap::pure_translation(mag(rng) * random_direction(rng));
        CHECK(std::abs(willmore_report(hc, m).fb_residual) < 1e-4);
        CHECK(std::abs(willmore_report(hc, m).capillary_residual) < 1e-4);
        CHECK(std::abs(willmore_report(he, m).fb_residual) < 1e-4);
        CHECK(std::abs(willmore_report(hea, m).capillary_residual) < 1e-4);
    }
}

TEST_CASE("curvature bookkeeping closes for every builtin scene", "[energy]") {
    for (const char* name : {"half_equator", "half_clifford", "disc_in_ball"}) {
        const CapillaryScene s = make_scene(builtin_surface(name, pi / 2.0, pi / 3.0));
        CHECK(std::abs(gauss_bonnet_residual(s)) < 1e-6);
    }
    const CapillaryScene tilted = make_scene(half_equator(1.1, pi / 2.0));
    CHECK(std::abs(gauss_bonnet_residual(tilted)) < 1e-6);
}

TEST_CASE("hemisphere energy bound is sharp on the equality family", "[energy]") {
    for (double gamma : {pi / 6.0, pi / 3.0, pi / 2.0}) {
        const BlowupCheck c = blowup_check(gamma);
        CHECK(c.ok);
        CHECK(std::abs(c.margin) < 1e-8);
        CHECK(std::abs(c.bound - 2.0 * pi * (1.0 + std::cos(gamma))) < 1e-12);
    }
}

TEST_CASE("shrinking caps flatten to euclidean disc measures", "[energy]") {
    const LimitTrace tr = euclidean_limit_trace({0.4, 0.2, 0.1, 0.05});
    REQUIRE(tr.rows.size() == 4);
    CHECK(std::abs(tr.rows.back().scaled_area - pi) < 0.01);
    CHECK(std::abs(tr.rows.back().scaled_boundary - 2.0 * pi) < 1e-9);
    CHECK(tr.area_order >= 1.9);
    CHECK(tr.boundary_order >= 1.9);
    CHECK_THROWS_AS(euclidean_limit_trace({0.4}), DomainError);
}
