#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bilayer/cli.hpp"
#include "bilayer/diagnostics.hpp"
#include "bilayer/fullplane.hpp"

namespace bilayer::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

std::string fmt17(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string field_csv(const ScalarField& f)
{
    const Grid& g = *f.grid;
    std::string s = "x,y,value\n";
    for (int j = 0; j < g.n2(); ++j)
        for (int i = 0; i < g.n1(); ++i)
            s += fmt17(g.x(i)) + "," + fmt17(g.y(j)) + "," + fmt17(f[g.index(i, j)]) + "\n";
    return s;
}

std::string profile_csv(const std::vector<std::pair<double, double>>& p)
{
    std::string s = "r,value\n";
    for (const auto& [r, v] : p)
        s += fmt17(r) + "," + fmt17(v) + "\n";
    return s;
}

json identity_json(const IdentityReport& r)
{
    return {{"name", r.name},           {"predicted", r.predicted}, {"measured", r.measured},
            {"rel_error", r.rel_error}, {"tolerance", r.tolerance}, {"pass", r.pass},
            {"tail", r.tail}};
}

json history_json(const SolveReport& rep)
{
    json h = json::array();
    for (const auto& it : rep.history)
        h.push_back({{"iteration", it.iteration},
                     {"I", it.I},
                     {"residual_inner", it.residual_inner},
                     {"residual_outer", it.residual_outer},
                     {"step", it.step},
                     {"linear_iterations", it.linear_iterations}});
    return h;
}

json solve_json(const SolveReport& rep)
{
    return {{"converged", rep.converged},
            {"status", rep.status},
            {"method", rep.method},
            {"iterations", rep.iterations},
            {"I", rep.final.I},
            {"J", rep.final.J},
            {"residual_inner", rep.final.residual_inner},
            {"residual_outer", rep.final.residual_outer},
            {"history", history_json(rep)}};
}

/// Collects output files, then writes them with report.json.
class Output {
public:
    Output(const RunConfig& cfg, std::string subcommand) : cfg_(cfg)
    {
        report_["subcommand"] = std::move(subcommand);
        report_["version"] = kVersion;
        report_["config"] = config_echo(cfg);
        report_["config_hash"] = sha256_hex(config_echo(cfg));
        report_["warnings"] = cfg.warnings;
        report_["identities"] = json::array();
    }

    void file(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
    json& report() { return report_; }
    void identity(const IdentityReport& r)
    {
        report_["identities"].push_back(identity_json(r));
        all_pass_ = all_pass_ && r.pass;
    }
    bool all_pass() const { return all_pass_; }

    void write(const std::string& report_name = "report.json")
    {
        fs::create_directories(cfg_.out_dir);
        std::string joined;
        for (const auto& [name, content] : files_) {
            std::ofstream(fs::path(cfg_.out_dir) / name, std::ios::binary) << content;
            joined += name + "\n" + content;
        }
        report_["files"] = json::array();
        for (const auto& f : files_)
            report_["files"].push_back(f.first);
        report_["content_hash"] = sha256_hex(joined);
        std::ofstream(fs::path(cfg_.out_dir) / report_name) << report_.dump(2) << "\n";
    }

private:
    const RunConfig& cfg_;
    json report_;
    std::vector<std::pair<std::string, std::string>> files_;
    bool all_pass_ = true;
};

int verdict(bool converged, bool pass)
{
    if (!converged)
        return SolverFailure;
    return pass ? Ok : IdentityFailure;
}

void log_identities(std::ostream& log, const json& ids)
{
    for (const auto& r : ids)
        log << "  " << (r["pass"].get<bool>() ? "pass" : "FAIL") << " " << r["name"].get<std::string>()
            << " predicted=" << r["predicted"].get<double>() << " measured=" << r["measured"].get<double>()
            << " err=" << r["rel_error"].get<double>() << " tol=" << r["tolerance"].get<double>() << "\n";
}

GridPtr bounded_grid(const RunConfig& cfg)
{
    if (cfg.domain.kind == DomainSpec::Kind::Disk)
        return Grid::disk(cfg.domain.a, cfg.n1);
    if (cfg.domain.kind == DomainSpec::Kind::Rectangle)
        return Grid::rectangle(cfg.domain.a, cfg.domain.b, cfg.n1, cfg.n2);
    throw ConfigError(0, "this subcommand needs a disk or rectangle domain");
}

int cmd_solve_torus(const RunConfig& cfg, std::ostream& log)
{
    if (cfg.domain.kind != DomainSpec::Kind::Torus)
        throw ConfigError(0, "solve-torus needs domain = torus");
    Output out(cfg, "solve-torus");
    TorusSolve ts =
        solve_torus(cfg.params, cfg.vortices, cfg.domain.a, cfg.domain.b, cfg.n1, cfg.n2, cfg.outer, cfg.epsilon);
    out.report()["solve"] = solve_json(ts.report);
    out.report()["alpha"] = ts.ab.alpha;
    out.report()["beta"] = ts.ab.beta;
    out.report()["xibar"] = ts.state.xibar;
    out.report()["zetabar"] = ts.state.zetabar;
    for (const auto& r : torus_identities(ts.u, ts.v, cfg.params, cfg.vortices))
        out.identity(r);
    out.file("fields_u.csv", field_csv(ts.u));
    out.file("fields_v.csv", field_csv(ts.v));
    out.write();
    log << "solve-torus: " << ts.report.status << " after " << ts.report.iterations << " iterations\n";
    log_identities(log, out.report()["identities"]);
    return verdict(ts.report.converged, out.all_pass());
}

int cmd_solve_disk(const RunConfig& cfg, std::ostream& log)
{
    const GridPtr grid = bounded_grid(cfg);
    const CouplingMatrix K = build_coupling(cfg.params);
    const double eps = cfg.epsilon > 0 ? cfg.epsilon : default_epsilon(*grid);
    BoundedProblem pb(K, regularized_background(cfg.vortices, eps, grid));
    SolveReport rep;
    VariationalState st = nested_minimize(pb, zero_state(pb), cfg.outer, rep);
    auto [u, v] = recover_uv(st, pb);
    Output out(cfg, "solve-disk");
    out.report()["solve"] = solve_json(rep);
    out.report()["epsilon"] = eps;
    out.report()["regime"] = to_string(classify_regime(K));
    if (classify_regime(K) == Regime::IndefiniteA)
        out.identity(max_principle_check(u, v));
    out.file("fields_u.csv", field_csv(u));
    out.file("fields_v.csv", field_csv(v));
    out.write();
    log << "solve-disk: " << rep.status << " after " << rep.iterations << " iterations\n";
    log_identities(log, out.report()["identities"]);
    return verdict(rep.converged, out.all_pass());
}

int cmd_solve_fullplane(const RunConfig& cfg, std::ostream& log)
{
    if (cfg.domain.kind != DomainSpec::Kind::Disk)
        throw ConfigError(0, "solve-fullplane needs domain = disk (the radius is ignored; see solver.radii)");
    const double Rmax = cfg.radii.back();
    ContinuationSettings cs;
    cs.h = 2.0 * Rmax / (cfg.n1 - 1);
    cs.outer = cfg.outer;
    cs.outer.method = outer_method_from_string(cfg.fullplane_method);
    ContinuationSchedule schedule = ContinuationSchedule::defaults(cs.h, cfg.eps_levels);
    schedule.radii = cfg.radii;

    json stages = json::array();
    IdentityReport worst_max;
    worst_max.measured = -INFINITY;
    bool all_converged = true;
    cs.observer = [&](const StageRecord& r, const ScalarField& u, const ScalarField& v, const BoundedProblem&) {
        IdentityReport mp = max_principle_check(u, v);
        if (mp.measured > worst_max.measured)
            worst_max = mp;
        all_converged = all_converged && r.converged;
        stages.push_back({{"R", r.R},
                          {"epsilon", r.epsilon},
                          {"nodes", r.nodes},
                          {"converged", r.converged},
                          {"iterations", r.iterations},
                          {"I", r.I},
                          {"residual", r.residual},
                          {"boundary_indicator", r.indicator},
                          {"max_shifted", r.max_shifted}});
        log << "  stage R=" << r.R << " eps=" << r.epsilon << " converged=" << r.converged
            << " indicator=" << r.indicator << "\n";
    };
    ContinuationResult res = domain_continuation(cfg.params, cfg.vortices, schedule, cs);
    const CouplingMatrix K = build_coupling(cfg.params);

    Output out(cfg, "solve-fullplane");
    out.report()["stages"] = stages;
    out.report()["solve"] = solve_json(res.report);
    for (const auto& r : fullplane_identities(res.u, res.v, cfg.params, cfg.vortices))
        out.identity(r);
    worst_max.name = "max_principle_all_stages";
    if (classify_regime(K) == Regime::IndefiniteA)
        out.identity(worst_max);

    try {
        SandwichReport sw = sandwich_check(res.u, res.v, *res.problem);
        IdentityReport r = make_identity("sandwich_upper", 0.0, std::max(0.0, sw.max_w_shifted), 0.0);
        r.pass = sw.max_w_shifted < 0;
        r.measured = sw.max_w_shifted;
        out.identity(r);
        IdentityReport g = make_identity("sandwich_lower", 0.0, std::min(0.0, sw.min_gap), 0.0);
        g.measured = sw.min_gap;
        g.pass = sw.min_gap >= 0;
        out.identity(g);
    } catch (const SolverError& e) {
        out.report()["sandwich_error"] = e.what();
        out.identity(make_identity("sandwich", 0.0, 1.0, 0.0));
    }

    const double R = Rmax;
    const double rmax = std::min(6.0, R - 2.0);
    const double rmin = std::max(vortex_radius(cfg.vortices) + 1.0, std::min(3.0, rmax - 1.0));
    if (rmax > rmin) {
        DecayFit fit = decay_fit(res.u, res.v, rmin, rmax);
        out.report()["decay_fit"] = {{"rate", fit.rate},
                                     {"C", fit.C},
                                     {"r2", fit.r2},
                                     {"rate_exponential", fit.rate_exponential},
                                     {"r2_exponential", fit.r2_exponential},
                                     {"free_rate", fit.free_rate},
                                     {"free_power", fit.free_power},
                                     {"gradient_rate", fit.gradient_rate},
                                     {"window", {fit.r_min, fit.r_max}}};
        out.identity(make_identity("decay_rate", 2.0, fit.rate, 0.1));
        out.identity(make_identity("gradient_decay_rate", 2.0, fit.gradient_rate, 0.1));

        std::vector<double> radii;
        for (double r = rmin; r <= R - 2.0 * cs.h + 1e-12; r += 0.05)
            radii.push_back(r);
        auto phi = phi_profile(res.u, res.v, K, radii);
        out.file("profile_phi.csv", profile_csv(phi));
        std::vector<std::pair<double, double>> decay, shiftphi;
        ScalarField su(res.u.grid), sv(res.u.grid);
        for (std::size_t k = 0; k < su.size(); ++k) {
            su[k] = res.u[k] + std::numbers::ln2;
            sv[k] = res.v[k] + std::numbers::ln2;
        }
        for (double r : radii)
            decay.emplace_back(r, std::max(circle_max_abs(su, r), circle_max_abs(sv, r)));
        out.file("profile_decay.csv", profile_csv(decay));
        for (const auto& [r, p] : phi)
            shiftphi.emplace_back(r, p - 4.0);
        const double alpha0 = decay.front().second;
        BellmanSolution b = bellman_ode_solve(shiftphi, rmin, R, alpha0);
        std::vector<std::pair<double, double>> bw;
        for (std::size_t i = 0; i < b.t.size(); i += 10)
            bw.emplace_back(b.t[i], b.w[i]);
        out.file("profile_bellman.csv", profile_csv(bw));
        out.report()["bellman"] = {{"ratio_min", b.ratio_min}, {"ratio_max", b.ratio_max}};
    }
    out.file("fields_u.csv", field_csv(res.u));
    out.file("fields_v.csv", field_csv(res.v));
    out.write();
    log << "solve-fullplane: " << res.stages.size() << " stages\n";
    log_identities(log, out.report()["identities"]);
    return verdict(all_converged, out.all_pass());
}

int cmd_solve_single(const RunConfig& cfg, std::ostream& log)
{
    if (cfg.domain.kind != DomainSpec::Kind::Disk)
        throw ConfigError(0, "solve-single needs domain = disk");
    const GridPtr grid = Grid::disk(cfg.domain.a, cfg.n1);
    std::vector<Point> merged = cfg.vortices.upper;
    merged.insert(merged.end(), cfg.vortices.lower.begin(), cfg.vortices.lower.end());
    const auto schedule = ContinuationSchedule::defaults(grid->h1(), cfg.eps_levels);
    std::vector<double> eps = schedule.epsilons;
    if (cfg.epsilon > 0)
        eps = {cfg.epsilon};
    ScalarField u = single_equation_solve(merged, grid, eps);
    const int np = static_cast<int>(merged.size());
    const double lambda = lambda_estimate(u, np);
    ScalarField mass(grid);
    for (std::size_t k = 0; k < u.size(); ++k)
        mass[k] = -8.0 * std::expm1(u[k]);
    Output out(cfg, "solve-single");
    out.report()["lambda"] = lambda;
    IdentityReport lr = make_identity("lambda", 0.0, lambda, 0.05);
    out.identity(lr);
    if (np > 0)
        out.identity(make_identity("mass", 4.0 * std::numbers::pi * np, quadrature(mass), 0.02));
    std::vector<std::pair<double, double>> prof;
    for (double r = 0.5; r <= cfg.domain.a - 2.0 * grid->h1(); r += 0.05)
        prof.emplace_back(r, circle_max_abs(u, r));
    out.file("profile_u.csv", profile_csv(prof));
    out.file("fields_u.csv", field_csv(u));
    out.write();
    log << "solve-single: lambda = " << lambda << "\n";
    log_identities(log, out.report()["identities"]);
    return verdict(true, out.all_pass());
}

int cmd_sweep(const RunConfig& cfg, std::ostream& log)
{
    if (cfg.domain.kind != DomainSpec::Kind::Torus)
        throw ConfigError(0, "sweep-threshold needs domain = torus");
    VortexConfiguration frac = cfg.vortices;
    for (auto* list : {&frac.upper, &frac.lower})
        for (Point& p : *list)
            p = {p.x / cfg.domain.a, p.y / cfg.domain.b};
    const double thr = threshold_area(cfg.params, cfg.vortices);
    std::vector<double> areas;
    for (double f : cfg.sweep_factors)
        areas.push_back(f * thr);
    SweepSettings ss;
    ss.n = cfg.sweep_n;
    ss.aspect = cfg.sweep_aspect;
    ss.outer = cfg.outer;
    auto rows = threshold_sweep(cfg.params, frac, areas, ss);

    Output out(cfg, "sweep-threshold");
    std::string csv = "factor,area,alpha,beta,feasible,converged,residual,constraint_error_u,constraint_error_v\n";
    bool flip_ok = true, conv_ok = true;
    json jr = json::array();
    for (const auto& r : rows) {
        csv += fmt17(r.factor) + "," + fmt17(r.area) + "," + fmt17(r.alpha) + "," + fmt17(r.beta) + "," +
               (r.feasible ? "1" : "0") + "," + (r.converged ? "1" : "0") + "," + fmt17(r.residual) + "," +
               fmt17(r.constraint_error_u) + "," + fmt17(r.constraint_error_v) + "\n";
        flip_ok = flip_ok && (r.feasible == (r.area > thr));
        conv_ok = conv_ok && (!r.feasible || r.converged);
        jr.push_back({{"factor", r.factor},
                      {"area", r.area},
                      {"feasible", r.feasible},
                      {"converged", r.converged},
                      {"status", r.status},
                      {"residual", r.residual}});
        log << "  factor " << r.factor << " area " << r.area << (r.feasible ? " feasible " : " infeasible ")
            << r.status << "\n";
    }
    out.report()["threshold"] = thr;
    out.report()["rows"] = jr;
    IdentityReport flip = make_identity("feasibility_flip", 0.0, flip_ok ? 0.0 : 1.0, 0.0);
    out.identity(flip);
    out.file("sweep.csv", csv);
    out.write();
    return verdict(conv_ok, out.all_pass());
}

ScalarField read_field(const fs::path& path, const GridPtr& grid)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(0, "cannot read " + path.string());
    std::string line;
    std::getline(in, line);
    if (line != "x,y,value")
        throw ConfigError(0, path.string() + ": unexpected header");
    ScalarField f(grid);
    std::size_t k = 0;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (k >= f.size())
            throw ConfigError(0, path.string() + ": more rows than grid nodes");
        f[k++] = std::stod(line.substr(line.rfind(',') + 1));
    }
    if (k != f.size())
        throw ConfigError(0, path.string() + ": row count does not match the grid");
    return f;
}

int cmd_diagnose(const RunConfig& cfg, std::ostream& log)
{
    GridPtr grid = cfg.domain.kind == DomainSpec::Kind::Torus
                       ? Grid::periodic(cfg.domain.a, cfg.domain.b, cfg.n1, cfg.n2)
                       : bounded_grid(cfg);
    ScalarField u = read_field(fs::path(cfg.out_dir) / "fields_u.csv", grid);
    ScalarField v = read_field(fs::path(cfg.out_dir) / "fields_v.csv", grid);
    Output out(cfg, "diagnose");
    if (grid->is_periodic()) {
        for (const auto& r : torus_identities(u, v, cfg.params, cfg.vortices))
            out.identity(r);
    } else {
        for (const auto& r : fullplane_identities(u, v, cfg.params, cfg.vortices))
            out.identity(r);
        if (classify_regime(build_coupling(cfg.params)) == Regime::IndefiniteA)
            out.identity(max_principle_check(u, v));
    }
    out.write("diagnose.json");
    log_identities(log, out.report()["identities"]);
    return verdict(true, out.all_pass());
}

int cmd_selftest(std::ostream& log)
{
    int failures = 0;
    auto check = [&](const std::string& name, bool ok) {
        log << (ok ? "pass " : "FAIL ") << name << "\n";
        failures += ok ? 0 : 1;
    };
    const double pi = std::numbers::pi;
    {
        auto g = Grid::periodic(2 * pi, 2 * pi, 32, 32);
        check("quadrature of 1 on a torus is the area", std::abs(quadrature(ScalarField(g, 1.0)) - 4 * pi * pi) < 1e-12);
    }
    {
        auto g = Grid::disk(4.0, 33);
        ScalarField u = single_equation_solve({}, g, {0.1});
        double m = 0;
        for (double x : u.values)
            m = std::max(m, std::abs(x));
        check("single equation without vortices gives zero", m == 0.0);
        check("lambda of the zero field is zero", lambda_estimate(u, 0) == 0.0);
    }
    {
        CouplingParams p{1.0, -0.5};
        VortexConfiguration none;
        const double L = 2 * pi;
        auto ab = alpha_beta(L * L, p, none);
        auto g = Grid::periodic(L, L, 32, 32);
        TorusProblem pb(build_coupling(p), torus_background(none, g, default_epsilon(*g)), L * L, 0, 0, ab.alpha,
                        ab.beta);
        SolveReport rep;
        OuterSettings s;
        VariationalState st = nested_minimize(pb, zero_state(pb), s, rep);
        double m = std::max(norm_inf(st.xi.values), norm_inf(st.zeta.values));
        check("vortex-free torus converges within two outer iterations", rep.converged && rep.iterations <= 2 && m == 0.0);
    }
    {
        auto g = Grid::disk(6.0, 49);
        ScalarField u(g, -std::numbers::ln2), v(g, -std::numbers::ln2);
        auto phi = phi_profile(u, v, build_coupling({1.0, -0.5}), {1.0, 2.0, 3.0});
        bool ok = true;
        for (const auto& [r, x] : phi)
            ok = ok && std::abs(x - 4.0) < 1e-14;
        check("phi of the vacuum is 4", ok);
    }
    {
        BellmanSolution b = bellman_ode_solve({{1.0, 0.0}, {10.0, 0.0}}, 1.0, 10.0, 0.0);
        double m = 0;
        for (double x : b.w)
            m = std::max(m, std::abs(x));
        check("bellman solution with zero boundary value vanishes", m == 0.0);
    }
    {
        CouplingParams p{1.0, -1.0};
        VortexConfiguration vc{{{0, 0}}, {}};
        check("threshold for one vortex at p = -q is pi", std::abs(threshold_area(p, vc) - pi) < 1e-15);
        check("no solution at the threshold area", !alpha_beta(pi, p, vc).feasible);
    }
    log << (failures == 0 ? "selftest passed" : "selftest failed") << "\n";
    return failures == 0 ? Ok : IdentityFailure;
}

} // namespace

int run(const std::string& subcommand, const RunConfig& cfg, bool quiet, std::ostream& log_stream)
{
    std::ostringstream sink;
    std::ostream& log = quiet ? static_cast<std::ostream&>(sink) : log_stream;
    for (const auto& w : cfg.warnings)
        log << "warning: " << w << "\n";
    try {
        if (subcommand == "solve-torus")
            return cmd_solve_torus(cfg, log);
        if (subcommand == "solve-disk")
            return cmd_solve_disk(cfg, log);
        if (subcommand == "solve-fullplane")
            return cmd_solve_fullplane(cfg, log);
        if (subcommand == "solve-single")
            return cmd_solve_single(cfg, log);
        if (subcommand == "sweep-threshold")
            return cmd_sweep(cfg, log);
        if (subcommand == "diagnose")
            return cmd_diagnose(cfg, log);
        if (subcommand == "selftest")
            return cmd_selftest(log);
    } catch (const ConfigError& e) {
        log_stream << "error: " << e.what() << "\n";
        return Usage;
    } catch (const SolverError& e) {
        log_stream << "error: " << e.what() << "\n";
        if (e.kind() == SolverErrorKind::Infeasible)
            return Infeasible;
        if (e.kind() == SolverErrorKind::RegimeRejected)
            return Usage;
        return SolverFailure;
    } catch (const std::invalid_argument& e) {
        log_stream << "error: " << e.what() << "\n";
        return Usage;
    }
    log_stream << "error: unknown subcommand '" << subcommand << "'\n";
    return Usage;
}

int main_entry(int argc, char** argv)
{
    CLI::App app{"Bilayer Chern-Simons vortex solver"};
    std::string subcommand, config_path, out_dir;
    std::vector<std::string> overrides;
    bool quiet = false;
    app.add_option("subcommand", subcommand, "solve-torus, solve-disk, solve-fullplane, solve-single, "
                                             "sweep-threshold, diagnose or selftest")
        ->required()
        ->check(CLI::IsMember({"solve-torus", "solve-disk", "solve-fullplane", "solve-single", "sweep-threshold",
                               "diagnose", "selftest"}));
    app.add_option("--config", config_path, "configuration file");
    app.add_option("--out", out_dir, "output directory (overrides output.dir)");
    app.add_option("--override", overrides, "section.key=value, repeatable");
    app.add_flag("--quiet", quiet, "suppress progress output");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? Ok : Usage;
    }
    if (subcommand == "selftest" && config_path.empty())
        return run(subcommand, RunConfig{}, quiet, std::cerr);
    if (config_path.empty()) {
        std::cerr << "error: --config is required for " << subcommand << "\n";
        return Usage;
    }
    RunConfig cfg;
    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot read " << config_path << "\n";
            return Usage;
        }
        std::stringstream ss;
        ss << in.rdbuf();
        EntryMap entries = parse_entries(ss.str());
        for (const auto& o : overrides)
            apply_override(entries, o);
        if (!out_dir.empty())
            entries["output.dir"] = {out_dir, 0};
        cfg = build_config(entries);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << config_path << ": " << e.what() << "\n";
        return Usage;
    }
    return run(subcommand, cfg, quiet, std::cerr);
}

} // namespace bilayer::cli
