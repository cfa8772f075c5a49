#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <set>

#include "capflow/builtins.hpp"
#include "capflow/mesh.hpp"
#include "capflow/quadrature.hpp"

using namespace capflow;

TEST_CASE("surface quadrature reproduces closed-form areas", "[quadrature]") {
    // Oracles: geodesic-cap and torus areas known in closed form.
    const BuiltinSurface he = half_equator(pi / 2.0, pi / 2.0);
    CHECK(std::abs(surface_area(he.surface) - 2.0 * pi) < 1e-10);

    const BuiltinSurface hc = half_clifford_torus();
    CHECK(std::abs(surface_area(hc.surface) - pi * pi) < 1e-10);

    const BuiltinSurface t = clifford_torus();
    CHECK(std::abs(surface_area(t.surface) - 2.0 * pi * pi) < 1e-10);

    for (double R : {0.4, 1.0, 2.0}) {
        const BuiltinSurface d = disc_in_ball(R);
        CHECK(std::abs(surface_area(d.surface) - d.area_exact) < 1e-8);
        CHECK(std::abs(boundary_length(d.surface) - 2.0 * pi * std::sin(R)) < 1e-10);
    }
}

TEST_CASE("boundary quadrature reproduces closed-form lengths", "[quadrature]") {
    const BuiltinSurface hc = half_clifford_torus();
    CHECK(std::abs(boundary_length(hc.surface) - 2.0 * std::sqrt(2.0) * pi) < 1e-10);

    for (double gamma : {pi / 6.0, pi / 2.0}) {
        const BuiltinSurface he = half_equator(pi / 2.0, gamma);
        CHECK(std::abs(boundary_length(he.surface) - he.boundary_length_exact) < 1e-10);
    }
}

TEST_CASE("quadrature integrates smooth non-constant integrands", "[quadrature]") {
    // Oracle: int over the full Clifford torus of cos^2 along the periodic
    // angle is half the area; heights integrate to zero by symmetry.
    const BuiltinSurface t = clifford_torus();
    const double c2 = integrate(t.surface, [](const CurvaturePack& p) {
        const double c = std::sqrt(2.0) * p.jet.x[2];
        return c * c;
    });
    CHECK(std::abs(c2 - pi * pi) < 1e-10);
    for (int i = 0; i < 4; ++i) {
        const double m1 = integrate(t.surface,
                                    [i](const CurvaturePack& p) { return p.jet.x[i]; });
        CHECK(std::abs(m1) < 1e-12);
    }
}

TEST_CASE("refined quadrature reports a trustworthy error estimate", "[quadrature]") {
    const BuiltinSurface he = half_equator(pi / 2.0, pi / 3.0);
    const QuadratureEstimate est =
        integrate_refined(he.surface, [](const CurvaturePack&) { return 1.0; });
    CHECK(std::abs(est.value - he.area_exact) <= std::max(est.error, 1e-9) + 1e-12);
    CHECK(est.error >= 0.0);
}

TEST_CASE("parametric meshes converge to smooth measures", "[mesh]") {
    const BuiltinSurface hc = half_clifford_torus();
    const TriMesh coarse = mesh_parametric(hc.surface, 0.2);
    const TriMesh fine = mesh_parametric(hc.surface, 0.1);
    const double err_c = std::abs(coarse.total_area() - pi * pi);
    const double err_f = std::abs(fine.total_area() - pi * pi);
    CHECK(err_f < err_c);
    // P1 area deficit drops at second order; allow a wide margin.
    CHECK(err_f < 0.35 * err_c);
    CHECK(std::abs(fine.boundary_length() - 2.0 * std::sqrt(2.0) * pi) < 0.01);
}

TEST_CASE("mesh vertices lie on the surface with sane elements", "[mesh]") {
    for (const char* name : {"half_equator", "half_clifford", "clifford_torus"}) {
        const BuiltinSurface b = builtin_surface(name, pi / 2.0, pi / 3.0);
        const TriMesh mesh = mesh_parametric(b.surface, 0.15);
        REQUIRE(mesh.n_vertices() > 20);
        for (const auto& v : mesh.vertices) {
            CHECK(std::abs(v.x.norm() - 1.0) < 1e-12);
            CHECK((b.surface.chart.position(v.u, v.v) - v.x).norm() < 1e-12);
        }
        for (int t = 0; t < mesh.n_triangles(); ++t) CHECK(mesh.triangle_area(t) > 0.0);
        CHECK(b.closed == mesh.boundary_edges.empty());
    }
}

TEST_CASE("boundary edges form closed directed loops", "[mesh]") {
    const BuiltinSurface hc = half_clifford_torus();
    const TriMesh mesh = mesh_parametric(hc.surface, 0.15);
    REQUIRE_FALSE(mesh.boundary_edges.empty());

    std::map<int, int> out_degree, in_degree;
    std::set<int> loops;
    for (const auto& e : mesh.boundary_edges) {
        ++out_degree[e.a];
        ++in_degree[e.b];
        loops.insert(e.loop);
    }
    CHECK(loops.size() == 2);  // two boundary circles
    for (const auto& [v, d] : out_degree) {
        CHECK(d == 1);
        CHECK(in_degree[v] == 1);
    }

    // Directed so the surface lies to the left: each boundary edge must
    // appear in exactly one triangle, traversed in the same order.
    std::set<std::pair<int, int>> tri_edges;
    for (const auto& tri : mesh.triangles)
        for (int i = 0; i < 3; ++i)
            tri_edges.insert({tri[i], tri[(i + 1) % 3]});
    for (const auto& e : mesh.boundary_edges)
        CHECK(tri_edges.count({e.a, e.b}) == 1);
}

TEST_CASE("collapsed pole charts mesh into discs", "[mesh]") {
    const BuiltinSurface he = half_equator(pi / 2.0, pi / 2.0);
    const TriMesh mesh = mesh_parametric(he.surface, 0.12);
    std::set<int> loops;
    for (const auto& e : mesh.boundary_edges) loops.insert(e.loop);
    CHECK(loops.size() == 1);
    // Euler characteristic of a disc from the mesh combinatorics.
    std::set<std::pair<int, int>> undirected;
    for (const auto& tri : mesh.triangles)
        for (int i = 0; i < 3; ++i) {
            const int a = tri[i], b = tri[(i + 1) % 3];
            undirected.insert({std::min(a, b), std::max(a, b)});
        }
    const int euler = mesh.n_vertices() - static_cast<int>(undirected.size())
                      + mesh.n_triangles();
    CHECK(euler == 1);
    CHECK(std::abs(mesh.total_area() - 2.0 * pi) < 0.05);
}

TEST_CASE("flat disc mesh has the euclidean measures", "[mesh]") {
    const TriMesh disc = flat_disc_mesh(1.0, 16, 80);
    CHECK(std::abs(disc.total_area() - pi) < 0.01);
    CHECK(std::abs(disc.boundary_length() - 2.0 * pi) < 0.01);
    for (int t = 0; t < disc.n_triangles(); ++t) CHECK(disc.triangle_area(t) > 0.0);
}

TEST_CASE("mesh rejects nonsense sizes", "[mesh]") {
    const BuiltinSurface he = half_equator(pi / 2.0, pi / 2.0);
    CHECK_THROWS_AS(mesh_parametric(he.surface, 0.0), DomainError);
    CHECK_THROWS_AS(mesh_parametric(he.surface, -1.0), DomainError);
}
