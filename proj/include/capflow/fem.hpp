#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "capflow/mesh.hpp"

namespace capflow {

// P1 discretization of the quadratic form
//   Q_{p,q}(f) = int_S |grad f|^2 - p f^2  -  int_dS q f^2,
// split into its constituent matrices.  The metric per triangle is the
// constant one induced by the embedded edge vectors; p and q are vertex
// samples integrated exactly against products of hat functions.
struct AssembledForm {
    Eigen::SparseMatrix<double> stiffness;        // int <grad_i, grad_j>
    Eigen::SparseMatrix<double> mass;             // int phi_i phi_j
    Eigen::SparseMatrix<double> mass_p;           // int p phi_i phi_j
    Eigen::SparseMatrix<double> boundary_mass;    // bdry int phi_i phi_j
    Eigen::SparseMatrix<double> boundary_mass_q;  // bdry int q phi_i phi_j
    std::vector<int> boundary;                    // sorted boundary vertices
    std::vector<int> interior;
    int n = 0;

    // The interior bilinear part of Q.
    Eigen::SparseMatrix<double> bilinear() const { return stiffness - mass_p; }
    // Full Robin form matrix: Q(f, f) = f^T robin() f.
    Eigen::SparseMatrix<double> robin() const {
        return stiffness - mass_p - boundary_mass_q;
    }
};

inline AssembledForm assemble(const TriMesh& mesh, const Eigen::VectorXd& p,
                              const Eigen::VectorXd& q) {
    const int n = mesh.n_vertices();
    if (p.size() != n || q.size() != n)
        throw DomainError("assemble: coefficient vectors must have one entry per vertex");

    using T = Eigen::Triplet<double>;
    std::vector<T> tk, tm, tmp;
    tk.reserve(mesh.n_triangles() * 9);
    tm.reserve(mesh.n_triangles() * 9);
    tmp.reserve(mesh.n_triangles() * 9);

    // Reference gradients of the barycentric functions on the unit triangle.
    const Eigen::Matrix<double, 2, 3> gref = (Eigen::Matrix<double, 2, 3>() <<
        -1.0, 1.0, 0.0,
        -1.0, 0.0, 1.0).finished();

    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const auto& tri = mesh.triangles[t];
        const Eigen::Matrix2d G = mesh.triangle_gram(t);
        const double det = G.determinant();
        if (det <= 0.0) throw NumericError("assemble: degenerate triangle");
        const double area = 0.5 * std::sqrt(det);
        const Eigen::Matrix2d Ginv = G.inverse();
        const Eigen::Matrix3d Kt = area * gref.transpose() * Ginv * gref;

        for (int a = 0; a < 3; ++a)
            for (int b = 0; b < 3; ++b) {
                tk.emplace_back(tri[a], tri[b], Kt(a, b));
                tm.emplace_back(tri[a], tri[b], (a == b ? area / 6.0 : area / 12.0));
                // Exact integral of p phi_a phi_b with p interpolated:
                // weights A/10, A/30, A/60 by coincidence pattern.
                double val = 0.0;
                for (int c = 0; c < 3; ++c) {
                    double w;
                    if (a == b && b == c) w = area / 10.0;
                    else if (a == b || b == c || a == c) w = area / 30.0;
                    else w = area / 60.0;
                    val += p[tri[c]] * w;
                }
                tmp.emplace_back(tri[a], tri[b], val);
            }
    }

    std::vector<T> tb, tbq;
    tb.reserve(mesh.boundary_edges.size() * 4);
    tbq.reserve(mesh.boundary_edges.size() * 4);
    for (const auto& e : mesh.boundary_edges) {
        const double len = mesh.edge_length(e.a, e.b);
        const double qa = q[e.a], qb = q[e.b];
        tb.emplace_back(e.a, e.a, len / 3.0);
        tb.emplace_back(e.b, e.b, len / 3.0);
        tb.emplace_back(e.a, e.b, len / 6.0);
        tb.emplace_back(e.b, e.a, len / 6.0);
        tbq.emplace_back(e.a, e.a, len * (3.0 * qa + qb) / 12.0);
        tbq.emplace_back(e.b, e.b, len * (qa + 3.0 * qb) / 12.0);
        tbq.emplace_back(e.a, e.b, len * (qa + qb) / 12.0);
        tbq.emplace_back(e.b, e.a, len * (qa + qb) / 12.0);
    }

    AssembledForm f;
    f.n = n;
    auto build = [n](std::vector<T>& trip) {
        Eigen::SparseMatrix<double> s(n, n);
        s.setFromTriplets(trip.begin(), trip.end());
        return s;
    };
    f.stiffness = build(tk);
    f.mass = build(tm);
    f.mass_p = build(tmp);
    f.boundary_mass = build(tb);
    f.boundary_mass_q = build(tbq);

    f.boundary = mesh.boundary_vertices();
    std::vector<char> is_b(n, 0);
    for (int i : f.boundary) is_b[i] = 1;
    for (int i = 0; i < n; ++i)
        if (!is_b[i]) f.interior.push_back(i);
    return f;
}

inline AssembledForm assemble(const TriMesh& mesh) {
    return assemble(mesh, Eigen::VectorXd::Zero(mesh.n_vertices()),
                    Eigen::VectorXd::Zero(mesh.n_vertices()));
}

// Evaluate the quadratic form on a vertex vector.
inline double form_value(const AssembledForm& f, const Eigen::VectorXd& x) {
    return x.dot(f.robin() * x);
}

inline double mass_norm2(const AssembledForm& f, const Eigen::VectorXd& x) {
    return x.dot(f.mass * x);
}

} // namespace capflow
