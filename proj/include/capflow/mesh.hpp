#pragma once

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "capflow/surface.hpp"

namespace capflow {

// Piecewise linear surface mesh.  Vertices remember their chart parameters
// so smooth data can be resampled; all metric quantities used downstream
// come from the embedded edge vectors, which keeps meshes self-contained
// under serialization.
struct TriMesh {
    struct Vertex {
        double u = 0.0, v = 0.0;
        Vec4 x = Vec4::Zero();
    };
    struct BoundaryEdge {
        int a = 0, b = 0;  // directed: surface lies to the left
        int loop = 0;
    };

    std::vector<Vertex> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary_edges;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }

    // Gram matrix of the embedded edge basis (x1 - x0, x2 - x0).
    Eigen::Matrix2d triangle_gram(int t) const {
        const auto& tri = triangles[t];
        const Vec4 e1 = vertices[tri[1]].x - vertices[tri[0]].x;
        const Vec4 e2 = vertices[tri[2]].x - vertices[tri[0]].x;
        Eigen::Matrix2d G;
        G << e1.dot(e1), e1.dot(e2), e1.dot(e2), e2.dot(e2);
        return G;
    }

    double triangle_area(int t) const {
        const double d = triangle_gram(t).determinant();
        if (d <= 0.0) throw NumericError("TriMesh: degenerate triangle");
        return 0.5 * std::sqrt(d);
    }

    double edge_length(int a, int b) const { return (vertices[a].x - vertices[b].x).norm(); }

    double total_area() const {
        double s = 0.0;
        for (int t = 0; t < n_triangles(); ++t) s += triangle_area(t);
        return s;
    }

    double boundary_length() const {
        double s = 0.0;
        for (const auto& e : boundary_edges) s += edge_length(e.a, e.b);
        return s;
    }

    double max_edge_length() const {
        double m = 0.0;
        for (const auto& tri : triangles)
            for (int k = 0; k < 3; ++k)
                m = std::max(m, edge_length(tri[k], tri[(k + 1) % 3]));
        return m;
    }

    int euler_characteristic() const {
        std::set<std::pair<int, int>> edges;
        for (const auto& tri : triangles)
            for (int k = 0; k < 3; ++k) {
                const int a = tri[k], b = tri[(k + 1) % 3];
                edges.insert({std::min(a, b), std::max(a, b)});
            }
        return n_vertices() - static_cast<int>(edges.size()) + n_triangles();
    }

    std::vector<int> boundary_vertices() const {
        std::set<int> s;
        for (const auto& e : boundary_edges) {
            s.insert(e.a);
            s.insert(e.b);
        }
        return {s.begin(), s.end()};
    }

    int n_boundary_loops() const {
        int m = -1;
        for (const auto& e : boundary_edges) m = std::max(m, e.loop);
        return m + 1;
    }

    // Extracts directed boundary edges (those with no opposite) and groups
    // them into loops.
    void rebuild_boundary() {
        std::set<std::pair<int, int>> directed;
        for (const auto& tri : triangles)
            for (int k = 0; k < 3; ++k)
                directed.insert({tri[k], tri[(k + 1) % 3]});
        std::map<int, int> next;
        for (const auto& [a, b] : directed)
            if (!directed.count({b, a})) {
                if (next.count(a)) throw NumericError("TriMesh: non-manifold boundary");
                next[a] = b;
            }
        boundary_edges.clear();
        std::set<int> seen;
        int loop = 0;
        for (const auto& [start, first] : next) {
            if (seen.count(start)) continue;
            int a = start;
            do {
                seen.insert(a);
                const auto it = next.find(a);
                if (it == next.end()) throw NumericError("TriMesh: open boundary chain");
                boundary_edges.push_back({a, it->second, loop});
                a = it->second;
            } while (a != start);
            ++loop;
        }
    }
};

// Structured mesh of a chart rectangle honoring periodic and collapsed
// edges.  Resolution is chosen so embedded edge lengths stay below h.
inline TriMesh mesh_parametric(const ParametricSurface& srf, double h) {
    if (h <= 0.0) throw DomainError("mesh_parametric: h must be positive");
    const Chart& c = srf.chart;

    // Probe the metric to convert the length target into grid counts.
    double su = 0.0, sv = 0.0;
    const int probe = 33;
    for (int i = 0; i <= probe; ++i)
        for (int j = 0; j <= probe; ++j) {
            const double u = c.u0 + c.u_span() * i / probe;
            const double v = c.v0 + c.v_span() * j / probe;
            const ChartJet jet = c.jet(u, v);
            su = std::max(su, jet.xu.norm());
            sv = std::max(sv, jet.xv.norm());
        }
    const int nu = std::max(3, static_cast<int>(std::ceil(c.u_span() * su / h)));
    const int nv = std::max(3, static_cast<int>(std::ceil(c.v_span() * sv / h)));

    TriMesh m;
    std::vector<int> id(static_cast<size_t>(nu + 1) * (nv + 1), -1);
    auto idx = [&](int i, int j) -> int& { return id[static_cast<size_t>(j) * (nu + 1) + i]; };

    for (int j = 0; j <= nv; ++j) {
        const bool collapsed = (j == 0 && c.collapse_v0) || (j == nv && c.collapse_v1);
        for (int i = 0; i <= nu; ++i) {
            if (c.periodic_u && i == nu) {
                idx(i, j) = idx(0, j);
                continue;
            }
            if (c.periodic_v && j == nv) {
                idx(i, j) = idx(i, 0);
                continue;
            }
            if (collapsed && i > 0) {
                idx(i, j) = idx(0, j);
                continue;
            }
            TriMesh::Vertex vert;
            vert.u = c.u0 + c.u_span() * i / nu;
            vert.v = c.v0 + c.v_span() * j / nv;
            vert.x = c.position(vert.u, vert.v);
            m.vertices.push_back(vert);
            idx(i, j) = m.n_vertices() - 1;
        }
    }

    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) {
            const int p00 = idx(i, j), p10 = idx(i + 1, j);
            const int p11 = idx(i + 1, j + 1), p01 = idx(i, j + 1);
            if (p00 != p10 && p10 != p11 && p11 != p00)
                m.triangles.push_back({p00, p10, p11});
            if (p00 != p11 && p11 != p01 && p01 != p00)
                m.triangles.push_back({p00, p11, p01});
        }

    m.rebuild_boundary();
    return m;
}

// Flat rectangle [0, Lx] x [0, Ly] embedded in the (e1, e2) plane; exact
// reference domain for separable eigenvalue problems.
inline TriMesh flat_rectangle_mesh(double lx, double ly, int nx, int ny,
                                   bool periodic_x = false) {
    TriMesh m;
    std::vector<int> id(static_cast<size_t>(nx + 1) * (ny + 1), -1);
    auto idx = [&](int i, int j) -> int& { return id[static_cast<size_t>(j) * (nx + 1) + i]; };
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i) {
            if (periodic_x && i == nx) {
                idx(i, j) = idx(0, j);
                continue;
            }
            TriMesh::Vertex v;
            v.u = lx * i / nx;
            v.v = ly * j / ny;
            v.x = v.u * axis(1) + v.v * axis(2);
            m.vertices.push_back(v);
            idx(i, j) = m.n_vertices() - 1;
        }
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            m.triangles.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
            m.triangles.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
        }
    m.rebuild_boundary();
    return m;
}

// Flat unit-ish disc of the given radius in the (e1, e2) plane, polar grid.
inline TriMesh flat_disc_mesh(double radius, int n_rings, int n_angular) {
    TriMesh m;
    TriMesh::Vertex pole;
    pole.x = Vec4::Zero();
    m.vertices.push_back(pole);
    std::vector<std::vector<int>> ring(n_rings + 1);
    ring[0] = std::vector<int>(n_angular, 0);
    for (int j = 1; j <= n_rings; ++j) {
        ring[j].resize(n_angular);
        const double r = radius * j / n_rings;
        for (int i = 0; i < n_angular; ++i) {
            const double phi = 2.0 * pi * i / n_angular;
            TriMesh::Vertex v;
            v.u = phi;
            v.v = r;
            v.x = r * std::cos(phi) * axis(1) + r * std::sin(phi) * axis(2);
            m.vertices.push_back(v);
            ring[j][i] = m.n_vertices() - 1;
        }
    }
    for (int j = 0; j < n_rings; ++j)
        for (int i = 0; i < n_angular; ++i) {
            const int ip = (i + 1) % n_angular;
            const int p00 = ring[j][i], p10 = ring[j][ip];
            const int p11 = ring[j + 1][ip], p01 = ring[j + 1][i];
            if (p00 != p10) m.triangles.push_back({p00, p10, p11});
            m.triangles.push_back({p00, p11, p01});
        }
    m.rebuild_boundary();
    return m;
}

} // namespace capflow
