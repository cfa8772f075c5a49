#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "capflow/builtins.hpp"
#include "capflow/fem.hpp"
#include "capflow/quadrature.hpp"

using namespace capflow;

namespace {

// Structured mesh of the unit square embedded in the first two coordinates;
// every closed form below is an exact integral the P1 rules must reproduce.
TriMesh unit_square_mesh(int m) {
    TriMesh mesh;
    auto id = [m](int i, int j) { return i * (m + 1) + j; };
    for (int i = 0; i <= m; ++i)
        for (int j = 0; j <= m; ++j) {
            TriMesh::Vertex v;
            v.u = static_cast<double>(i) / m;
            v.v = static_cast<double>(j) / m;
            v.x = Vec4(v.u, v.v, 0.0, 0.0);
            mesh.vertices.push_back(v);
        }
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
            mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    for (int i = 0; i < m; ++i) {
        mesh.boundary_edges.push_back({id(i, 0), id(i + 1, 0), 0});        // bottom
        mesh.boundary_edges.push_back({id(m, i), id(m, i + 1), 0});        // right
        mesh.boundary_edges.push_back({id(m - i, m), id(m - i - 1, m), 0}); // top
        mesh.boundary_edges.push_back({id(0, m - i), id(0, m - i - 1), 0}); // left
    }
    return mesh;
}

Eigen::VectorXd sample(const TriMesh& mesh, double (*fn)(double, double)) {
    Eigen::VectorXd f(mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i)
        f[i] = fn(mesh.vertices[i].x[0], mesh.vertices[i].x[1]);
    return f;
}

double lin1(double x, double y) { return 2.0 + 3.0 * x - y; }
double linx(double x, double) { return x; }
double one(double, double) { return 1.0; }

} // namespace

TEST_CASE("P1 matrices are exact on linear data over the unit square", "[fem]") {
    const TriMesh mesh = unit_square_mesh(7);
    const Eigen::VectorXd p = sample(mesh, linx);
    const Eigen::VectorXd q = sample(mesh, linx);
    const AssembledForm f = assemble(mesh, p, q);
    REQUIRE(f.n == 64);

    const Eigen::VectorXd ones = sample(mesh, one);
    const Eigen::VectorXd fl = sample(mesh, lin1);
    const Eigen::VectorXd fx = sample(mesh, linx);

    // Stiffness: int |grad(2 + 3x - y)|^2 = 10, constants are flat.
    CHECK(std::abs(fl.dot(f.stiffness * fl) - 10.0) < 1e-12);
    CHECK(std::abs(ones.dot(f.stiffness * ones)) < 1e-12);

    // Mass: int (2 + 3x - y)^2 = 4 + 9/3 + 1/3 + 2*3 - 2 - 3/2*... spelled out:
    // a^2 + b^2/3 + c^2/3 + ab + ac + bc/2 with (a,b,c) = (2,3,-1).
    const double m_exact = 4.0 + 3.0 + 1.0 / 3.0 + 6.0 - 2.0 - 1.5;
    CHECK(std::abs(fl.dot(f.mass * fl) - m_exact) < 1e-12);
    CHECK(std::abs(ones.dot(f.mass * ones) - 1.0) < 1e-12);

    // Weighted mass with p = x: int x = 1/2 and int x * x^2 = 1/4.
    CHECK(std::abs(ones.dot(f.mass_p * ones) - 0.5) < 1e-12);
    CHECK(std::abs(fx.dot(f.mass_p * fx) - 0.25) < 1e-12);

    // Boundary mass: perimeter, and bdry int x^2 = 1/3 + 1/3 + 1 + 0.
    CHECK(std::abs(ones.dot(f.boundary_mass * ones) - 4.0) < 1e-12);
    CHECK(std::abs(fx.dot(f.boundary_mass * fx) - 5.0 / 3.0) < 1e-12);

    // Weighted boundary mass with q = x: bdry int x = 2.
    CHECK(std::abs(ones.dot(f.boundary_mass_q * ones) - 2.0) < 1e-12);

    // Robin combination on a linear trial.
    const double robin = fl.dot(f.robin() * fl);
    const double expect = fl.dot(f.stiffness * fl) - fl.dot(f.mass_p * fl)
                          - fl.dot(f.boundary_mass_q * fl);
    CHECK(std::abs(robin - expect) < 1e-12);
    CHECK(std::abs(form_value(f, fl) - robin) < 1e-12);
}

TEST_CASE("assembled matrices are symmetric with a clean vertex split", "[fem]") {
    const TriMesh mesh = unit_square_mesh(6);
    const Eigen::VectorXd p = sample(mesh, lin1);
    const AssembledForm f = assemble(mesh, p, p);
    auto asym = [](const Eigen::SparseMatrix<double>& s) {
        return (Eigen::MatrixXd(s) - Eigen::MatrixXd(s).transpose()).norm();
    };
    CHECK(asym(f.stiffness) < 1e-14);
    CHECK(asym(f.mass) < 1e-15);
    CHECK(asym(f.mass_p) < 1e-15);
    CHECK(asym(f.boundary_mass) < 1e-15);
    CHECK(asym(f.boundary_mass_q) < 1e-15);

    CHECK(f.boundary.size() == 24);                       // 4*6 boundary vertices
    CHECK(f.interior.size() == 25);                       // (6-1)^2 interior
    CHECK(f.boundary.size() + f.interior.size() == static_cast<size_t>(f.n));
    CHECK(std::is_sorted(f.boundary.begin(), f.boundary.end()));
}

TEST_CASE("assembly validates coefficient sizes", "[fem]") {
    const TriMesh mesh = unit_square_mesh(3);
    CHECK_THROWS_AS(assemble(mesh, Eigen::VectorXd::Zero(3),
                             Eigen::VectorXd::Zero(mesh.n_vertices())),
                    DomainError);
    CHECK_THROWS_AS(assemble(mesh, Eigen::VectorXd::Zero(mesh.n_vertices()),
                             Eigen::VectorXd::Zero(2)),
                    DomainError);
}

TEST_CASE("curved meshes reproduce smooth measures through the mass matrices", "[fem]") {
    const BuiltinSurface hc = half_clifford_torus();
    const TriMesh mesh = mesh_parametric(hc.surface, 0.1);
    const AssembledForm f = assemble(mesh);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(mesh.n_vertices());
    CHECK(std::abs(ones.dot(f.mass * ones) - pi * pi) < 0.02);
    CHECK(std::abs(ones.dot(f.boundary_mass * ones) - 2.0 * std::sqrt(2.0) * pi) < 0.01);
    CHECK(std::abs(ones.dot(f.stiffness * ones)) < 1e-12);

    // Dirichlet energy oracle: f = x2 + x3 restricted to the torus satisfies
    // int |grad f|^2 = int (1 - ... ) computed by smooth quadrature.
    const double smooth = integrate(hc.surface, [](const CurvaturePack& p) {
        // Tangential gradient of a coordinate: |grad x_i|^2 = 1 - <nu,e_i>^2
        // - <x,e_i>^2 on a surface in the unit sphere.
        const Vec4 e = axis(2);
        const double xn = p.nu.dot(e), xp = p.jet.x.dot(e);
        return 1.0 - xn * xn - xp * xp;
    });
    Eigen::VectorXd fx(mesh.n_vertices());
    for (int i = 0; i < mesh.n_vertices(); ++i) fx[i] = mesh.vertices[i].x[2];
    CHECK(std::abs(fx.dot(f.stiffness * fx) - smooth) < 0.02 * std::abs(smooth));
}
