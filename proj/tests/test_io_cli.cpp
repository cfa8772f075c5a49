#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "capflow/builtins.hpp"
#include "capflow/energy.hpp"
#include "capflow/index_lab.hpp"
#include "capflow/io.hpp"

using namespace capflow;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream f(path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Run the installed binary with the given arguments, capturing both streams.
CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const std::string base = (std::filesystem::temp_directory_path()
                              / ("capflow_cli_" + std::to_string(::getpid()) + "_"
                                 + std::to_string(counter++)))
                                 .string();
    const std::string out_path = base + ".out";
    const std::string err_path = base + ".err";
    const std::string cmd =
        std::string(CAPFLOW_CLI_PATH) + " " + args + " > " + out_path + " 2> " + err_path;
    const int rc = std::system(cmd.c_str());
    CliResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out_path);
    r.err = slurp(err_path);
    std::filesystem::remove(out_path);
    std::filesystem::remove(err_path);
    return r;
}

std::string temp_file(const std::string& suffix) {
    static int counter = 0;
    return (std::filesystem::temp_directory_path()
            / ("capflow_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++)
               + suffix))
        .string();
}

} // namespace

TEST_CASE("g17 prints doubles losslessly", "[io]") {
    for (double x : {0.1, 1.0 / 3.0, pi, 1e-17, -2.5e300, 0.0, 1.0, -1234.5678901234567}) {
        CAPTURE(x);
        CHECK(std::stod(g17(x)) == x);
    }
}

TEST_CASE("trace files roundtrip and validate their header", "[io]") {
    MonotoneTrace tr;
    tr.steps.resize(3);
    tr.steps[0] = {0.0, pi / 2.0, 2.0 * pi, 2.0 * pi, 2.0 * pi, 9.87, 9.87, true};
    tr.steps[1] = {0.1, 1.55, 6.1, 6.0, 6.2, 9.5, 9.5, true};
    tr.steps[2] = {0.2, 1.5, 5.9, 5.8, 6.0, 9.25, 9.25, false};

    std::stringstream ss;
    write_trace(ss, tr);
    const std::vector<TraceRow> rows = read_trace(ss);
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].t == 0.1);
    CHECK(rows[1].cap_radius == 1.55);
    CHECK(rows[0].area == 2.0 * pi);
    CHECK(rows[2].energy == 9.25);
    CHECK(rows[0].slope_flag == 0);
    CHECK(rows[2].slope_flag == 1);

    std::stringstream bad_header("time,R\n0,1\n");
    CHECK_THROWS_AS(read_trace(bad_header), DomainError);
    std::stringstream bad_row("t,R_t,area,wet,boundary,E,monotone_quantity,slope_flag\n0,1,x\n");
    CHECK_THROWS_AS(read_trace(bad_row), DomainError);
}

TEST_CASE("mesh files roundtrip", "[io]") {
    const TriMesh mesh = mesh_parametric(builtin_surface("half_clifford").surface, 0.25);
    std::stringstream ss;
    write_mesh(ss, mesh);
    const TriMesh back = read_mesh(ss);
    REQUIRE(back.n_vertices() == mesh.n_vertices());
    REQUIRE(back.triangles.size() == mesh.triangles.size());
    REQUIRE(back.boundary_edges.size() == mesh.boundary_edges.size());
    for (int i = 0; i < mesh.n_vertices(); ++i) {
        CHECK(back.vertices[i].u == mesh.vertices[i].u);
        CHECK((back.vertices[i].x - mesh.vertices[i].x).norm() == 0.0);
    }
    CHECK(back.triangles.back() == mesh.triangles.back());
    CHECK(back.boundary_edges.back().loop == mesh.boundary_edges.back().loop);
    CHECK(back.total_area() == Catch::Approx(mesh.total_area()).epsilon(1e-15));

    std::stringstream junk("v 0 0 1 0 0 0\nq 1 2 3\n");
    CHECK_THROWS_AS(read_mesh(junk), DomainError);
    CHECK_THROWS_AS(read_mesh_file("/nonexistent/mesh.txt"), DomainError);
}

TEST_CASE("moebius maps roundtrip through json", "[io]") {
    std::mt19937_64 rng(11);
    Vec4 y = 0.4 * random_direction(rng, true);
    const MoebiusMap m = cap_automorphism(pi / 2.0, Mat4::Identity(), y);
    const ordered_json j = map_to_json(m);
    REQUIRE(j.contains("rotation"));
    REQUIRE(j.contains("y"));
    CHECK(j["rotation"].size() == 16);
    CHECK(j["y"].size() == 4);
    const MoebiusMap back = map_from_json(j);
    CHECK((back.rotation - m.rotation).norm() == 0.0);
    CHECK((back.y - m.y).norm() == 0.0);
}

TEST_CASE("spectrum and index reports serialize with a fixed schema", "[io]") {
    const BuiltinSurface he = builtin_surface("half_equator");
    const IndexProblem ip = build_index_problem(he, FormFlavor::Spectral, 0.2);
    const SpectrumReport rep = robin_spectrum(ip.form, ip.zero_tol, 5);
    const ordered_json js = spectrum_to_json("robin", rep);
    CHECK(js["kind"] == "robin");
    CHECK(js["eigenvalues"].size() == 5);
    CHECK(js["zero_tol"].get<double>() == rep.zero_tol);
    const int total = js["counts"]["negative"].get<int>() + js["counts"]["zero"].get<int>()
                      + js["counts"]["positive"].get<int>();
    CHECK(total == 5);
    CHECK(js.contains("warnings"));

    const UrbanoReport ur = urbano_report(builtin_surface("half_clifford"), 0.15);
    const ordered_json ji = index_to_json(ur, FormFlavor::Morse);
    CHECK(ji["surface"] == "half_clifford");
    CHECK(ji["flavor"] == "morse");
    CHECK(ji["ind"].get<int>() == ur.morse.ind);
    CHECK(ji["a"].get<int>() + ji["b"].get<int>() == ji["ind"].get<int>());
    CHECK(ji["ind_robin"].get<int>() == ur.morse.ind_robin);
    CHECK(ji["dichotomy_branch"] == ur.dichotomy);
    CHECK(ji["eigen_summary"].contains("zero_tol"));
    CHECK(ji["consistent_with_theorems"].size() == ur.checks.size());
    CHECK(ji["check_labels"].size() == ur.checks.size());
    // the string overload picks the same report
    const ordered_json ji2 = index_to_json(ur, "morse");
    CHECK(ji2 == ji);
}

TEST_CASE("flow subcommand writes a monotone trace", "[cli]") {
    const std::string out = temp_file(".csv");
    const CliResult r =
        run_cli("flow --surface half-clifford --a 0,1,0,0 --tmax 1 --steps 50 --out " + out);
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    std::ifstream f(out);
    const std::vector<TraceRow> rows = read_trace(f);
    REQUIRE(rows.size() == 51);
    CHECK(rows.front().t == 0.0);
    CHECK(rows.back().t == Catch::Approx(1.0).margin(1e-12));
    CHECK(rows.front().energy == Catch::Approx(pi * pi).margin(1e-6));
    CHECK(rows.back().energy < rows.front().energy - 1.0);
    for (const auto& row : rows) CHECK(row.slope_flag == 0);
    std::filesystem::remove(out);
}

TEST_CASE("flow output is deterministic", "[cli]") {
    const std::string out1 = temp_file(".csv");
    const std::string out2 = temp_file(".csv");
    const std::string args = "flow --surface half-equator --gamma 1.2 --a 0,0,1,0 --tmax 0.4 "
                             "--steps 8 --out ";
    REQUIRE(run_cli(args + out1).exit_code == 0);
    REQUIRE(run_cli(args + out2).exit_code == 0);
    CHECK(slurp(out1) == slurp(out2));
    CHECK(!slurp(out1).empty());
    std::filesystem::remove(out1);
    std::filesystem::remove(out2);
}

TEST_CASE("energy subcommand reports the closed-form value", "[cli]") {
    const CliResult r = run_cli("energy --surface half-equator --gamma 1.0471975511965976");
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    const ordered_json j = ordered_json::parse(r.out);
    CHECK(j["area"].get<double>() == Catch::Approx(2.0 * pi).margin(1e-8));
    CHECK(j["value"].get<double>() == Catch::Approx(3.0 * pi).margin(1e-8));
    CHECK(j["gauss_bonnet_residual"].get<double>() < 1e-6);
}

TEST_CASE("config files fill options that flags leave unset", "[cli]") {
    const std::string cfg = temp_file(".json");
    {
        std::ofstream f(cfg);
        f << R"({"surface": "half_clifford", "a": "0,1,0,0", "tmax": 0.5, "steps": 8})";
    }
    const std::string out = temp_file(".csv");
    // --steps on the command line wins; surface/a/tmax come from the config
    const CliResult r = run_cli("flow --config " + cfg + " --steps 4 --out " + out);
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    std::ifstream f(out);
    const std::vector<TraceRow> rows = read_trace(f);
    CHECK(rows.size() == 5);
    CHECK(rows.back().t == Catch::Approx(0.5).margin(1e-12));
    std::filesystem::remove(cfg);
    std::filesystem::remove(out);
}

TEST_CASE("index subcommand emits the structured report", "[cli]") {
    const CliResult r = run_cli("index --surface half-clifford --flavor morse --h 0.12");
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    const ordered_json j = ordered_json::parse(r.out);
    CHECK(j["surface"] == "half_clifford");
    CHECK(j["ind"].get<int>() == 4);
    CHECK(j["ind"].get<int>() == j["ind_robin"].get<int>());
    CHECK(j["dichotomy_branch"] == "zero");
    for (const auto& ok : j["consistent_with_theorems"]) CHECK(ok.get<bool>());
}

TEST_CASE("spectrum subcommand lists ordered eigenvalues", "[cli]") {
    const CliResult r = run_cli("spectrum --surface half-equator --kind robin --h 0.2 --count 3");
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    const ordered_json j = ordered_json::parse(r.out);
    CHECK(j["kind"] == "robin");
    REQUIRE(j["eigenvalues"].size() == 3);
    CHECK(j["eigenvalues"][0].get<double>() < -1.5);
    CHECK(j["eigenvalues"][0].get<double>() <= j["eigenvalues"][1].get<double>());
}

TEST_CASE("dual subcommand checks the shared-form identities", "[cli]") {
    const CliResult r = run_cli("dual --surface half-clifford --h 0.15 --trials 4");
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    const ordered_json j = ordered_json::parse(r.out);
    CHECK(j["ok"].get<bool>());
    CHECK(j["epsilon"].get<int>() == -1);
}

TEST_CASE("limit subcommand prints scaled measures with observed orders", "[cli]") {
    const CliResult r = run_cli("limit --radii 0.4,0.2,0.1");
    CAPTURE(r.err);
    REQUIRE(r.exit_code == 0);
    int data_rows = 0;
    bool saw_order = false;
    std::istringstream ss(r.out);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.rfind("#", 0) == 0) {
            if (line.find("area_order") != std::string::npos) saw_order = true;
        } else if (!line.empty() && line.find("scaled_area") == std::string::npos) {
            ++data_rows;
        }
    }
    CHECK(data_rows == 3);
    CHECK(saw_order);
}

TEST_CASE("verify subcommand runs a property suite", "[cli]") {
    const CliResult r = run_cli("verify --suite conformal");
    CAPTURE(r.out, r.err);
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("ok ") != std::string::npos);
    CHECK(r.out.find("all checks passed") != std::string::npos);
    CHECK(r.out.find("FAIL") == std::string::npos);
}

TEST_CASE("invalid invocations exit with the usage code", "[cli]") {
    CHECK(run_cli("flow --surface clifford-torus --a 0,1,0,0").exit_code == 2);
    CHECK(run_cli("bogus").exit_code == 2);
    CHECK(run_cli("spectrum --surface half-equator --kind sideways").exit_code == 2);
    CHECK(run_cli("flow --surface half-clifford --a 0,0,0,0").exit_code == 2);
    CHECK(run_cli("flow --surface no-such-surface --a 0,1,0,0").exit_code == 2);
}
