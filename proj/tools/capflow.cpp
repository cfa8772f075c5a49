// capflow: batch driver for the cap-conformal laboratory.
//
// Subcommands: flow, energy, spectrum, index, dual, limit, verify.
// Exit codes: 0 ok, 1 invariant violation, 2 usage error, 3 numeric failure.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capflow/capflow.hpp"

namespace {

using namespace capflow;

constexpr int kExitOk = 0;
constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumeric = 3;

Vec4 parse_vec4(const std::string& s) {
    Vec4 v = Vec4::Zero();
    std::istringstream ss(s);
    std::string item;
    int i = 0;
    while (std::getline(ss, item, ',')) {
        if (i >= 4) throw DomainError("expected 4 comma-separated numbers, got more: " + s);
        v[i++] = std::stod(item);
    }
    if (i != 4) throw DomainError("expected 4 comma-separated numbers: " + s);
    return v;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::istringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::string normalize_surface_name(std::string name) {
    for (char& c : name)
        if (c == '-') c = '_';
    if (name == "half_clifford_torus") name = "half_clifford";
    if (name == "hemisphere_equator") name = "half_equator";
    return name;
}

// Flags override config-file values: a config key fills an option only when
// that option was not given on the command line.
void apply_config(const std::string& path, CLI::App* cmd,
                  const std::map<std::string, std::function<void(const nlohmann::json&)>>& setters) {
    if (path.empty()) return;
    std::ifstream f(path);
    if (!f) throw DomainError("cannot open config file: " + path);
    nlohmann::json j;
    f >> j;
    for (const auto& [key, set] : setters) {
        if (!j.contains(key)) continue;
        const CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt != nullptr && opt->count() > 0) continue;  // flag wins
        set(j.at(key));
    }
}

void write_text(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    auto f = open_output(out_path);
    f << text;
}

struct SurfaceArgs {
    std::string name = "half_clifford";
    double cap_radius = pi / 2.0;
    double gamma = pi / 2.0;
};

BuiltinSurface make_builtin(const SurfaceArgs& s) {
    return builtin_surface(normalize_surface_name(s.name), s.cap_radius, s.gamma);
}

// ---------------------------------------------------------------------------

int run_flow(const SurfaceArgs& sa, const std::string& a_str, double t_max, int steps,
             const std::string& flavor, const std::string& out, bool fatal) {
    const BuiltinSurface b = make_builtin(sa);
    if (b.closed) throw DomainError("flow: monotone traces need a surface with boundary");
    const CapillaryScene scene = make_scene(b);
    MonotoneFlavor mf = MonotoneFlavor::Auto;
    if (flavor == "free-boundary") mf = MonotoneFlavor::FreeBoundary;
    else if (flavor == "capillary") mf = MonotoneFlavor::Capillary;
    else if (flavor == "hemisphere") mf = MonotoneFlavor::Hemisphere;
    else if (flavor != "auto") throw DomainError("flow: unknown flavor " + flavor);
    const MonotoneTrace tr = monotonicity_trace(scene, parse_vec4(a_str), t_max, steps, mf);
    std::ostringstream os;
    write_trace(os, tr);
    write_text(out, os.str());
    if (!tr.monotone) {
        std::cerr << "flow: monotone quantity increased (max slope " << g17(tr.max_slope)
                  << ", tol " << g17(tr.slope_tol) << ")\n";
        if (fatal) return kExitViolation;
    }
    return kExitOk;
}

int run_energy(const SurfaceArgs& sa, const std::string& y_str, const std::string& map_path,
               bool refined, const std::string& out) {
    const BuiltinSurface b = make_builtin(sa);
    if (b.closed) throw DomainError("energy: capillary energies need a surface with boundary");
    CapillaryScene scene = make_scene(b);
    ordered_json j;
    j["surface"] = normalize_surface_name(sa.name);
    if (!map_path.empty() || !y_str.empty()) {
        MoebiusMap m;
        if (!map_path.empty()) {
            std::ifstream f(map_path);
            if (!f) throw DomainError("cannot open map file: " + map_path);
            ordered_json mj;
            f >> mj;
            m = map_from_json(mj);
        } else {
            m = cap_automorphism(scene.surface.barrier.radius, Mat4::Identity(),
                                 parse_vec4(y_str));
        }
        scene = transform_scene(scene, m);
        j["mapped"] = true;
    }
    const EnergyValue ev = evaluate_energy(scene, refined);
    j["cap_radius"] = ev.cap_radius;
    j["gamma"] = ev.gamma;
    j["area"] = ev.area;
    j["wet_area"] = ev.wet_area;
    j["boundary"] = ev.boundary;
    j["value"] = ev.value;
    j["value_fb"] = ev.value_fb;
    j["quad_error"] = ev.quad_error;
    j["gauss_bonnet_residual"] = gauss_bonnet_residual(scene);
    write_text(out, j.dump(2) + "\n");
    return kExitOk;
}

int run_spectrum(const SurfaceArgs& sa, const std::string& flavor, const std::string& kind,
                 double h, int count, const std::string& out) {
    const BuiltinSurface b = make_builtin(sa);
    const IndexProblem ip = build_index_problem(b, flavor_from_name(flavor), h);
    SpectrumReport rep;
    if (kind == "robin")
        rep = robin_spectrum(ip.form, ip.zero_tol, count);
    else if (kind == "dirichlet")
        rep = dirichlet_spectrum(ip.form, ip.zero_tol, count);
    else if (kind == "steklov")
        rep = steklov_spectrum(ip.form, ip.zero_tol, count);
    else
        throw DomainError("spectrum: unknown kind " + kind);
    ordered_json j = spectrum_to_json(kind, rep);
    j["surface"] = normalize_surface_name(sa.name);
    j["flavor"] = flavor;
    j["h"] = h;
    j["dofs"] = ip.form.n;
    write_text(out, j.dump(2) + "\n");
    return kExitOk;
}

int run_index(const SurfaceArgs& sa, const std::string& flavor, double h,
              const std::string& out, bool fatal) {
    const BuiltinSurface b = make_builtin(sa);
    const UrbanoReport rep = urbano_report(b, h);
    ordered_json j = index_to_json(rep, flavor);
    j["h"] = h;
    write_text(out, j.dump(2) + "\n");
    if (!rep.consistent) {
        std::cerr << "index: report inconsistent with the expected theorems\n";
        if (fatal) return kExitViolation;
    }
    return kExitOk;
}

int run_dual(const SurfaceArgs& sa, double h, int trials, const std::string& out, bool fatal) {
    const BuiltinSurface b = make_builtin(sa);
    const DualIdentityReport rep = dual_form_identity_check(b, trials, h);
    const DualSurface& d = rep.dual;
    ordered_json j;
    j["surface"] = normalize_surface_name(sa.name);
    j["epsilon"] = d.epsilon;
    j["r_tilde"] = d.r_tilde;
    j["gamma_tilde"] = d.gamma_tilde;
    j["r_tilde_measured"] = d.r_tilde_measured;
    j["gamma_tilde_measured"] = d.gamma_tilde_measured;
    j["metric_residual"] = d.metric_residual;
    j["slice_residual"] = d.slice_residual;
    j["trials"] = rep.trials;
    j["max_index_residual"] = rep.max_index_residual;
    j["max_energy_residual"] = rep.max_energy_residual;
    const bool ok = rep.max_index_residual < 1e-4 && rep.max_energy_residual < 1e-4
                    && d.metric_residual < 1e-5
                    && std::abs(d.gamma_tilde_measured - d.gamma_tilde) < 1e-5;
    j["ok"] = ok;
    write_text(out, j.dump(2) + "\n");
    if (!ok) {
        std::cerr << "dual: identity or parameter residuals out of tolerance\n";
        if (fatal) return kExitViolation;
    }
    return kExitOk;
}

int run_limit(const std::string& radii_str, const std::string& out) {
    std::vector<double> radii = parse_list(radii_str);
    const LimitTrace tr = euclidean_limit_trace(radii);
    std::ostringstream os;
    os << "R,scaled_area,scaled_boundary\n";
    for (const auto& row : tr.rows)
        os << g17(row.cap_radius) << ',' << g17(row.scaled_area) << ','
           << g17(row.scaled_boundary) << '\n';
    os << "# area_order " << g17(tr.area_order) << " boundary_order " << g17(tr.boundary_order)
       << '\n';
    write_text(out, os.str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify: quick property suites per module family.

struct SuiteRunner {
    int failures = 0;
    void check(const std::string& label, bool ok, const std::string& detail = "") {
        if (ok) {
            std::cout << "ok " << label << "\n";
        } else {
            ++failures;
            std::cout << "FAIL " << label << (detail.empty() ? "" : ": " + detail) << "\n";
        }
    }
};

void suite_conformal(SuiteRunner& s) {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> uy(0.0, 0.9);
    double worst_inv = 0.0, worst_unit = 0.0, worst_cap = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Vec4 y = uy(rng) * random_direction(rng);
        const Vec4 x = random_sphere_point(rng);
        const MoebiusMap fwd = MoebiusMap::pure_translation(y);
        const MoebiusMap bwd = MoebiusMap::pure_translation(-y);
        worst_inv = std::max(worst_inv, (bwd(fwd(x)) - x).norm());
        worst_unit = std::max(worst_unit, std::abs(fwd(x).norm() - 1.0));
        const double radius = 0.3 + 0.4 * uy(rng);
        const Vec4 yp = uy(rng) * random_direction(rng, true);
        const MoebiusMap aut = cap_automorphism(radius, Mat4::Identity(), yp);
        const auto [e1, e2] = tangent_pair(axis(0));
        const Vec4 bx = std::cos(radius) * axis(0) + std::sin(radius)
                        * (std::cos(2 * k) * e1 + std::sin(2 * k) * e2);
        worst_cap = std::max(worst_cap, std::abs(aut(bx).dot(axis(0)) - std::cos(radius)));
    }
    s.check("moebius inverse composition", worst_inv <= 1e-9, g17(worst_inv));
    s.check("sphere maps to sphere", worst_unit <= 1e-9, g17(worst_unit));
    s.check("cap automorphism preserves the cap", worst_cap <= 1e-9, g17(worst_cap));
}

void suite_flow(SuiteRunner& s) {
    std::mt19937_64 rng(202);
    double worst = 0.0;
    for (int k = 0; k < 5; ++k) {
        const Vec4 a = random_direction(rng);
        const ConformalFlow flow{a};
        Vec4 x = random_sphere_point(rng);
        const Vec4 x0 = x;
        const int n = 200;
        const double dt = 2.0 / n;
        for (int i = 0; i < n; ++i) {
            auto vel = [&](const Vec4& p) { return flow.velocity(p); };
            const Vec4 k1 = vel(x);
            const Vec4 k2 = vel((x + 0.5 * dt * k1).normalized());
            const Vec4 k3 = vel((x + 0.5 * dt * k2).normalized());
            const Vec4 k4 = vel((x + dt * k3).normalized());
            x = (x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).normalized();
        }
        worst = std::max(worst, (x - flow.at(2.0, x0)).norm());
    }
    s.check("rk4 matches the closed-form flow", worst <= 1e-8, g17(worst));

    double worst_u = 0.0;
    for (int k = 0; k < 20; ++k) {
        const ConformalFlow flow{random_direction(rng)};
        const Vec4 x = random_sphere_point(rng);
        const double t = 0.1 + 0.2 * k;
        worst_u = std::max(worst_u, std::abs(flow.height(flow.at(t, x))
                                             - flow.height_at(t, flow.height(x))));
    }
    s.check("height closed form", worst_u <= 1e-12, g17(worst_u));

    double worst_r = 0.0;
    for (int k = 0; k < 50; ++k) {
        const Vec4 w = random_direction(rng, true);
        const Vec4 p = (k % 2 == 0 ? 0.3 : 0.55) * w;  // hemisphere slice {<x,e0> = 0}
        const FlowRealization fr = realize_by_flow(p, pi / 2.0);
        const Vec4 origin = Vec4::Zero();
        worst_r = std::max(worst_r, (fr.map(origin) - p).norm());
    }
    s.check("flow realization hits the target point", worst_r <= 1e-9, g17(worst_r));
}

void suite_energy(SuiteRunner& s) {
    for (double g : {pi / 6.0, pi / 3.0, pi / 2.0}) {
        const BlowupCheck c = blowup_check(g);
        s.check("blowup bound at gamma " + std::to_string(g),
                c.ok && std::abs(c.margin) < 1e-8, g17(c.margin));
    }
    const BuiltinSurface he = half_equator(pi / 2.0, pi / 3.0);
    Vec4 a;
    a << 0.5, 0.4, -0.2, 0.1;
    a.normalize();
    const MonotoneTrace tr = monotonicity_trace(make_scene(he), a, 0.8, 12);
    s.check("capillary energy trace monotone", tr.monotone, g17(tr.max_slope));
    const BuiltinSurface hc = half_clifford_torus();
    std::mt19937_64 rng(303);
    const MoebiusMap m = MoebiusMap::pure_translation(0.3 * random_direction(rng));
    const WillmoreReport wr = willmore_report(make_scene(hc), m);
    s.check("free-boundary area identity", std::abs(wr.fb_residual) < 1e-4,
            g17(wr.fb_residual));
    s.check("curvature count matches topology",
            std::abs(gauss_bonnet_residual(make_scene(hc))) < 1e-6,
            g17(gauss_bonnet_residual(make_scene(hc))));
}

void suite_spectral(SuiteRunner& s) {
    const IndexProblem hemi =
        build_index_problem(half_equator(pi / 2.0, pi / 2.0), FormFlavor::Spectral, 0.08);
    const SpectrumReport rs = robin_spectrum(hemi.form, hemi.zero_tol, 6);
    const double expect[6] = {-2.0, 0.0, 0.0, 4.0, 4.0, 4.0};
    double worst = 0.0;
    for (int i = 0; i < 6; ++i)
        worst = std::max(worst,
                         std::abs(rs.values[i] - expect[i]) / std::max(1.0, std::abs(expect[i])));
    s.check("hemisphere lowest free-boundary spectrum", worst < 0.02, g17(worst));

    TriMesh disc = flat_disc_mesh(1.0, 14, 48);
    const SpectrumReport st = steklov_spectrum(assemble(disc), default_zero_tol(disc), 5);
    const double expect_d[5] = {0.0, 1.0, 1.0, 2.0, 2.0};
    worst = 0.0;
    for (int i = 0; i < 5; ++i)
        worst = std::max(
            worst, std::abs(st.values[i] - expect_d[i]) / std::max(1.0, std::abs(expect_d[i])));
    s.check("flat disc boundary spectrum", worst < 0.02, g17(worst));

    const IndexProblem hc =
        build_index_problem(half_clifford_torus(), FormFlavor::Spectral, 0.1);
    const IndexReport ir = index_count(hc.form, hc.zero_tol);
    s.check("index sum agrees with the direct count",
            ir.agreement && ir.ind == ir.ind_robin,
            "a+b=" + std::to_string(ir.ind) + " robin=" + std::to_string(ir.ind_robin));
}

void suite_index(SuiteRunner& s) {
    const UrbanoReport ur = urbano_report(half_clifford_torus(), 0.1);
    s.check("annulus index report consistent", ur.consistent,
            "ind=" + std::to_string(ur.ind_morse));
    const DualIdentityReport dr = dual_form_identity_check(half_clifford_torus(), 10, 0.1);
    s.check("dual form identities",
            dr.max_index_residual < 1e-6 && dr.max_energy_residual < 1e-6,
            g17(dr.max_index_residual));
    TriMesh mesh = mesh_parametric(half_clifford_torus().surface, 0.15);
    Vec4 y0;
    y0 << 0.0, 0.06, -0.03, 0.05;
    const MoebiusMap push = cap_automorphism(pi / 2.0, Mat4::Identity(), y0);
    for (auto& v : mesh.vertices) v.x = push(v.x);
    const BalanceResult br = conformal_balance(mesh, Eigen::VectorXd::Ones(mesh.n_vertices()));
    s.check("conformal balance convergence", br.converged && br.iterations <= 50,
            g17(br.residual));
}

int run_verify(const std::string& suite) {
    SuiteRunner s;
    const bool all = (suite == "all");
    if (all || suite == "conformal") suite_conformal(s);
    if (all || suite == "flow") suite_flow(s);
    if (all || suite == "energy") suite_energy(s);
    if (all || suite == "spectral") suite_spectral(s);
    if (all || suite == "index") suite_index(s);
    if (!all && suite != "conformal" && suite != "flow" && suite != "energy"
        && suite != "spectral" && suite != "index")
        throw DomainError("verify: unknown suite " + suite);
    std::cout << (s.failures == 0 ? "all checks passed" : "checks failed") << "\n";
    return s.failures == 0 ? kExitOk : kExitViolation;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"conformal caps, capillary energies, and index computations"};
    app.require_subcommand(1);

    std::string config_path;
    SurfaceArgs sa;
    std::string a_str = "0,1,0,0";
    double t_max = 1.0;
    int steps = 50;
    std::string flavor = "auto";
    std::string out;
    bool fatal = true;
    int workers = 0;
    std::string y_str, map_path;
    bool refined = false;
    std::string form_flavor = "spectral";
    std::string kind = "robin";
    double h = 0.1;
    int count = 8;
    int trials = 20;
    std::string radii_str = "0.4,0.2,0.1,0.05";
    std::string suite = "all";

    app.set_help_flag("--help", "print help");
    auto add_common = [&](CLI::App* cmd) {
        cmd->set_help_flag("--help", "print help");
        cmd->add_option("--config", config_path, "JSON config file; flags override its values");
        cmd->add_option("--workers", workers, "worker threads (also CAPFLOW_WORKERS)");
        cmd->add_option("--out", out, "output path (stdout when omitted)");
        cmd->add_flag("--fatal,!--no-fatal", fatal,
                      "exit nonzero on invariant violations (default on)");
    };
    auto add_surface = [&](CLI::App* cmd) {
        cmd->add_option("--surface", sa.name,
                        "half_equator | half_clifford | clifford_torus | disc_in_ball");
        cmd->add_option("--cap-radius", sa.cap_radius, "barrier cap radius (half_equator, disc)");
        cmd->add_option("--gamma", sa.gamma, "contact angle (half_equator)");
    };

    CLI::App* flow = app.add_subcommand("flow", "monotone energy trace along a conformal flow");
    add_common(flow);
    add_surface(flow);
    flow->add_option("--a", a_str, "flow direction, 4 comma-separated components");
    flow->add_option("--tmax", t_max, "final flow time");
    flow->add_option("--steps", steps, "number of steps (rows = steps + 1)")
        ->check(CLI::Range(2, 100000));
    flow->add_option("--flavor", flavor, "auto | free-boundary | capillary | hemisphere");

    CLI::App* energy = app.add_subcommand("energy", "capillary energy of a builtin surface");
    add_common(energy);
    add_surface(energy);
    energy->add_option("--y", y_str, "cap automorphism parameter (4 components, y0 = 0)");
    energy->add_option("--map", map_path, "JSON file with a Moebius map to apply first");
    energy->add_flag("--refined", refined, "error-estimated quadrature");

    CLI::App* spectrum = app.add_subcommand("spectrum", "Robin/Dirichlet/Steklov spectrum");
    add_common(spectrum);
    add_surface(spectrum);
    spectrum->add_option("--flavor", form_flavor, "spectral | morse | modified");
    spectrum->add_option("--kind", kind, "robin | dirichlet | steklov");
    spectrum->add_option("--h", h, "target mesh edge length")->check(CLI::PositiveNumber);
    spectrum->add_option("--count", count, "number of eigenvalues");

    CLI::App* index = app.add_subcommand("index", "index report for a builtin surface");
    add_common(index);
    add_surface(index);
    index->add_option("--flavor", form_flavor, "spectral | morse | modified");
    index->add_option("--h", h, "target mesh edge length")->check(CLI::PositiveNumber);

    CLI::App* dual = app.add_subcommand("dual", "normal-map dual of an annulus + identities");
    add_common(dual);
    add_surface(dual);
    dual->add_option("--h", h, "target mesh edge length")->check(CLI::PositiveNumber);
    dual->add_option("--trials", trials, "number of shared trial fields");

    CLI::App* limit = app.add_subcommand("limit", "shrinking-cap scaled area/boundary trace");
    add_common(limit);
    limit->add_option("--radii", radii_str, "comma-separated cap radii, decreasing");

    CLI::App* verify = app.add_subcommand("verify", "run a quick property suite");
    add_common(verify);
    verify->add_option("--suite", suite, "conformal | flow | energy | spectral | index | all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        CLI::App* cmd = app.get_subcommands().front();
        auto num = [](const nlohmann::json& v) { return v.get<double>(); };
        std::map<std::string, std::function<void(const nlohmann::json&)>> setters = {
            {"surface", [&](const nlohmann::json& v) { sa.name = v.get<std::string>(); }},
            {"cap-radius", [&](const nlohmann::json& v) { sa.cap_radius = num(v); }},
            {"gamma", [&](const nlohmann::json& v) { sa.gamma = num(v); }},
            {"a", [&](const nlohmann::json& v) { a_str = v.get<std::string>(); }},
            {"tmax", [&](const nlohmann::json& v) { t_max = num(v); }},
            {"steps", [&](const nlohmann::json& v) { steps = v.get<int>(); }},
            {"flavor", [&](const nlohmann::json& v) {
                 const auto sv = v.get<std::string>();
                 flavor = sv;
                 form_flavor = sv;
             }},
            {"kind", [&](const nlohmann::json& v) { kind = v.get<std::string>(); }},
            {"h", [&](const nlohmann::json& v) { h = num(v); }},
            {"count", [&](const nlohmann::json& v) { count = v.get<int>(); }},
            {"trials", [&](const nlohmann::json& v) { trials = v.get<int>(); }},
            {"radii", [&](const nlohmann::json& v) { radii_str = v.get<std::string>(); }},
            {"suite", [&](const nlohmann::json& v) { suite = v.get<std::string>(); }},
            {"out", [&](const nlohmann::json& v) { out = v.get<std::string>(); }},
            {"workers", [&](const nlohmann::json& v) { workers = v.get<int>(); }},
            {"y", [&](const nlohmann::json& v) { y_str = v.get<std::string>(); }},
            {"map", [&](const nlohmann::json& v) { map_path = v.get<std::string>(); }},
        };
        apply_config(config_path, cmd, setters);
        if (workers > 0) {
            setenv("CAPFLOW_WORKERS", std::to_string(workers).c_str(), 1);
        }

        if (cmd->get_name() == "flow")
            return run_flow(sa, a_str, t_max, steps, flavor, out, fatal);
        if (cmd->get_name() == "energy")
            return run_energy(sa, y_str, map_path, refined, out);
        if (cmd->get_name() == "spectrum")
            return run_spectrum(sa, form_flavor, kind, h, count, out);
        if (cmd->get_name() == "index")
            return run_index(sa, form_flavor, h, out, fatal);
        if (cmd->get_name() == "dual")
            return run_dual(sa, h, trials, out, fatal);
        if (cmd->get_name() == "limit")
            return run_limit(radii_str, out);
        if (cmd->get_name() == "verify")
            return run_verify(suite);
        throw DomainError("unknown command");
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return kExitNumeric;
    }
}
