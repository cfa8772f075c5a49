#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "capflow/energy.hpp"
#include "capflow/index_lab.hpp"
#include "capflow/mesh.hpp"
#include "capflow/moebius.hpp"
#include "capflow/spectra.hpp"

namespace capflow {

using ordered_json = nlohmann::ordered_json;

// Shortest exact decimal form: 17 significant digits round-trip doubles.
inline std::string g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
}

inline std::ofstream open_output(const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DomainError("cannot open output file: " + path);
    return f;
}

// ---------------------------------------------------------------------------
// Flow trace CSV.

inline void write_trace(std::ostream& os, const MonotoneTrace& tr) {
    os << "t,R_t,area,wet,boundary,E,monotone_quantity,slope_flag\n";
    for (const auto& s : tr.steps)
        os << g17(s.t) << ',' << g17(s.cap_radius) << ',' << g17(s.area) << ','
           << g17(s.wet_area) << ',' << g17(s.boundary) << ',' << g17(s.energy) << ','
           << g17(s.monotone_quantity) << ',' << (s.slope_ok ? 0 : 1) << '\n';
}

inline void write_trace(const std::string& path, const MonotoneTrace& tr) {
    auto f = open_output(path);
    write_trace(f, tr);
}

struct TraceRow {
    double t = 0, cap_radius = 0, area = 0, wet_area = 0, boundary = 0, energy = 0,
           monotone_quantity = 0;
    int slope_flag = 0;
};

inline std::vector<TraceRow> read_trace(std::istream& is) {
    std::vector<TraceRow> rows;
    std::string line;
    if (!std::getline(is, line)) throw DomainError("trace: missing header");
    if (line != "t,R_t,area,wet,boundary,E,monotone_quantity,slope_flag")
        throw DomainError("trace: unexpected header: " + line);
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        for (char& c : line)
            if (c == ',') c = ' ';
        std::istringstream ss(line);
        TraceRow r;
        if (!(ss >> r.t >> r.cap_radius >> r.area >> r.wet_area >> r.boundary >> r.energy
              >> r.monotone_quantity >> r.slope_flag))
            throw DomainError("trace: malformed row: " + line);
        rows.push_back(r);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Mesh dump: "v u v x0 x1 x2 x3", "f i j k", "be i j loop".

inline void write_mesh(std::ostream& os, const TriMesh& mesh) {
    for (const auto& v : mesh.vertices)
        os << "v " << g17(v.u) << ' ' << g17(v.v) << ' ' << g17(v.x[0]) << ' ' << g17(v.x[1])
           << ' ' << g17(v.x[2]) << ' ' << g17(v.x[3]) << '\n';
    for (const auto& t : mesh.triangles)
        os << "f " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& e : mesh.boundary_edges)
        os << "be " << e.a << ' ' << e.b << ' ' << e.loop << '\n';
}

inline void write_mesh(const std::string& path, const TriMesh& mesh) {
    auto f = open_output(path);
    write_mesh(f, mesh);
}

inline TriMesh read_mesh(std::istream& is) {
    TriMesh mesh;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        if (tag == "v") {
            TriMesh::Vertex v;
            if (!(ss >> v.u >> v.v >> v.x[0] >> v.x[1] >> v.x[2] >> v.x[3]))
                throw DomainError("mesh: malformed vertex line: " + line);
            mesh.vertices.push_back(v);
        } else if (tag == "f") {
            std::array<int, 3> t{};
            if (!(ss >> t[0] >> t[1] >> t[2]))
                throw DomainError("mesh: malformed face line: " + line);
            mesh.triangles.push_back(t);
        } else if (tag == "be") {
            TriMesh::BoundaryEdge e;
            if (!(ss >> e.a >> e.b >> e.loop))
                throw DomainError("mesh: malformed boundary edge line: " + line);
            mesh.boundary_edges.push_back(e);
        } else {
            throw DomainError("mesh: unknown line tag: " + tag);
        }
    }
    return mesh;
}

inline TriMesh read_mesh_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DomainError("cannot open mesh file: " + path);
    return read_mesh(f);
}

// ---------------------------------------------------------------------------
// Moebius map JSON: {"rotation": 16 row-major entries, "y": 4 entries}.

inline ordered_json map_to_json(const MoebiusMap& m) {
    ordered_json j;
    std::vector<double> rot;
    rot.reserve(16);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) rot.push_back(m.rotation(r, c));
    j["rotation"] = rot;
    j["y"] = std::vector<double>{m.y[0], m.y[1], m.y[2], m.y[3]};
    return j;
}

inline MoebiusMap map_from_json(const ordered_json& j) {
    const auto rot = j.at("rotation").get<std::vector<double>>();
    const auto y = j.at("y").get<std::vector<double>>();
    if (rot.size() != 16 || y.size() != 4)
        throw DomainError("map json: need 16 rotation entries and 4 for y");
    MoebiusMap m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) m.rotation(r, c) = rot[4 * r + c];
    m.y << y[0], y[1], y[2], y[3];
    return m;
}

// ---------------------------------------------------------------------------
// Report JSON.

inline ordered_json spectrum_to_json(const std::string& kind, const SpectrumReport& rep) {
    ordered_json j;
    j["kind"] = kind;
    j["eigenvalues"] = std::vector<double>(rep.values.begin(), rep.values.end());
    j["zero_tol"] = rep.zero_tol;
    int neg = 0, zero = 0, pos = 0;
    for (double v : rep.values) {
        if (v < -rep.zero_tol)
            ++neg;
        else if (v <= rep.zero_tol)
            ++zero;
        else
            ++pos;
    }
    j["counts"] = {{"negative", neg}, {"zero", zero}, {"positive", pos}};
    j["dirichlet_kernel_dim"] = rep.dirichlet_kernel_dim;
    j["warnings"] = rep.warnings;
    return j;
}

inline ordered_json index_to_json(const UrbanoReport& r, FormFlavor flavor) {
    const IndexReport& chosen = (flavor == FormFlavor::Morse)      ? r.morse
                                : (flavor == FormFlavor::Spectral) ? r.spectral
                                                                   : r.modified;
    ordered_json j;
    j["surface"] = r.surface_name;
    j["flavor"] = flavor_name(flavor);
    ordered_json summary;
    summary["nullity"] = chosen.nullity;
    summary["ind0_robin"] = chosen.ind0_robin;
    summary["dirichlet_kernel_dim"] = chosen.dirichlet_kernel_dim;
    summary["zero_tol"] = chosen.zero_tol;
    summary["warnings"] = chosen.warnings;
    j["eigen_summary"] = summary;
    j["a"] = chosen.a;
    j["b"] = chosen.b;
    j["ind"] = chosen.ind;
    j["ind_robin"] = chosen.ind_robin;
    j["dichotomy_branch"] = r.dichotomy;
    j["boundary_integral_qA"] = r.boundary_q_integral;
    std::vector<bool> oks;
    for (const auto& [label, ok] : r.checks) oks.push_back(ok);
    j["consistent_with_theorems"] = oks;
    ordered_json labels;
    for (const auto& [label, ok] : r.checks) labels.push_back(label);
    j["check_labels"] = labels;
    return j;
}

inline ordered_json index_to_json(const UrbanoReport& r, const std::string& flavor) {
    return index_to_json(r, flavor_from_name(flavor));
}

} // namespace capflow
