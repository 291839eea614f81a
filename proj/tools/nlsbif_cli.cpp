#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "nlsbif/artifacts.hpp"
#include "nlsbif/config.hpp"
#include "nlsbif/suites.hpp"

using namespace nlsbif;

namespace {

constexpr int kOk = 0;
constexpr int kChecksFailed = 1;
constexpr int kConfigError = 2;
constexpr int kNumericalFailure = 3;

struct Common {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> budget;
};

/// Flag > config file > NLSBIF_OUT_DIR > "nlsbif_out".
RunConfig resolve(const Common& c, bool& out_from_file)
{
    RunConfig cfg;
    out_from_file = false;
    if (!c.config_path.empty()) {
        std::ifstream in(c.config_path);
        if (!in) fail(ErrorKind::invalid_argument, "cannot open config '" + c.config_path + "'");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            fail(ErrorKind::invalid_argument, std::string("config is not valid JSON: ") + e.what());
        }
        cfg = config_from_json(j);
        out_from_file = j.contains("output") && j["output"].contains("dir");
    }
    if (!c.out.empty()) {
        cfg.out_dir = c.out;
    } else if (!out_from_file) {
        if (const char* env = std::getenv("NLSBIF_OUT_DIR"); env != nullptr && *env != '\0') cfg.out_dir = env;
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.budget) cfg.budget = *c.budget;
    cfg.validate();
    return cfg;
}

std::vector<ExplicitSeed> explicit_seeds(const RunConfig& cfg, const Grid& g)
{
    std::vector<ExplicitSeed> out;
    const auto& s = cfg.seeds;
    if (s.file) {
        const Profile p = parse_profile_csv(read_text(*s.file));
        out.push_back({{profile_on_grid(p, g), s.file_E}, "profile file " + *s.file});
    }
    if (s.soliton_E) {
        out.push_back({{soliton_field(g, *s.soliton_E, cfg.model.gamma, cfg.model.power, s.soliton_center), *s.soliton_E},
                       "soliton seed at E=" + fmt(*s.soliton_E)});
    }
    if (s.variational_mu) {
        const double mu = *s.variational_mu;
        const auto a = minimize_at_charge(g, cfg.model, mu, symmetric_start(g, std::max(1.0, 2.0 * cfg.varscan.asym_center)), cfg.varscan.flow);
        const auto b = minimize_at_charge(g, cfg.model, mu, asymmetric_start(g, cfg.varscan.asym_center), cfg.varscan.flow);
        const FlowResult& f = b.energy < a.energy ? b : a;
        out.push_back({{f.phi, f.E}, "variational minimizer at Q=" + fmt(mu)});
    }
    return out;
}

void print_checks(const std::vector<Check>& checks)
{
    for (const auto& c : checks) std::printf("%s %s: %s\n", c.pass ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
}

int finish(const fs::path& dir, const std::string& suite, const std::vector<Check>& checks)
{
    const json rep = report_json(suite, checks);
    atomic_write(dir / (suite + "_report.json"), rep.dump(2) + "\n");
    print_checks(checks);
    return rep["pass"].get<bool>() ? kOk : kChecksFailed;
}

std::string num(double v)
{
    char b[40];
    std::snprintf(b, sizeof b, "%.6g", v);
    return b;
}

int cmd_diagram(const RunConfig& cfg)
{
    const fs::path dir = cfg.out_dir;
    const Grid g = cfg.grid();
    Diagram d;
    if (cfg.seeds.trivial) {
        d = run_diagram(g, cfg.model, cfg.diagram_options());
    } else {
        d = run_diagram(g, cfg.model, cfg.diagram_options(), explicit_seeds(cfg, g));
    }
    write_diagram(dir, d, cfg);
    std::fputs(summary_csv(d).c_str(), stdout);
    if (d.failure) {
        std::fprintf(stderr, "numerical failure: %s (partial artifacts in %s)\n", d.failure->what(), dir.string().c_str());
        return kNumericalFailure;
    }
    return kOk;
}

int pick_branch(const LoadedDiagram& ld, const BranchRoles& roles)
{
    if (!roles.asymmetric.empty()) return roles.asymmetric.front();
    require(!ld.branches.empty(), "diagram has no branches");
    return 0;
}

int cmd_scaling(const RunConfig& cfg)
{
    const fs::path dir = cfg.out_dir;
    const auto ld = load_diagram(dir);
    const auto roles = identify_roles(ld.branches, ld.events);
    const auto pb = profiled_branches(ld);
    const auto rb = refine_branch(ld.grid, ld.model, pb[pick_branch(ld, roles)], cfg.asymptotics.scaling_energies, cfg.asymptotics);
    const auto rep = scaling_report(ld.model, rb);
    atomic_write(dir / "scaling.csv", scaling_csv(rep));
    const double lq = limit_ratio_Q(ld.model.power), lk = limit_ratio_K(ld.model.power);
    std::vector<Check> checks;
    checks.push_back({"r_Q limit", std::abs(rep.fit.r_Q - lq) <= 0.05 * lq, "extrapolated " + num(rep.fit.r_Q) + " vs " + num(lq)});
    checks.push_back({"r_K limit", std::abs(rep.fit.r_K - lk) <= 0.05 * lk, "extrapolated " + num(rep.fit.r_K) + " vs " + num(lk)});
    return finish(dir, "scaling", checks);
}

int cmd_rescale(const RunConfig& cfg)
{
    const fs::path dir = cfg.out_dir;
    const auto ld = load_diagram(dir);
    const auto roles = identify_roles(ld.branches, ld.events);
    std::vector<int> ids = roles.asymmetric;
    if (roles.symmetric >= 0) ids.push_back(roles.symmetric);
    if (ids.empty()) ids.push_back(0);
    const auto pb = profiled_branches(ld);
    std::vector<RescaleRow> rows;
    for (int id : ids) {
        const auto rb = refine_branch(ld.grid, ld.model, pb[id], cfg.asymptotics.rescale_energies, cfg.asymptotics);
        for (auto& r : rescale_rows(ld.model, rb, cfg.asymptotics)) rows.push_back(r);
    }
    atomic_write(dir / "rescale.csv", rescale_csv(rows));
    std::vector<Check> checks;
    const int asym = roles.asymmetric.empty() ? ids.front() : roles.asymmetric.front();
    double prev = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    const RescaleRow* at = nullptr; // row nearest E=100 on the asymmetric branch
    for (const auto& r : rows) {
        if (r.branch != asym) continue;
        decreasing = decreasing && r.distance < prev;
        prev = r.distance;
        if (at == nullptr || std::abs(r.E - 100.0) < std::abs(at->E - 100.0)) at = &r;
    }
    require(at != nullptr, "no rescale rows");
    checks.push_back({"limit residual at E=" + num(at->E), at->residual <= 1e-2, num(at->residual) + " (bound 1e-2)"});
    checks.push_back({"H1 distance at E=" + num(at->E), at->distance <= 5e-2, num(at->distance) + " (bound 5e-2)"});
    checks.push_back({"H1 distance decreasing in E", decreasing, "branch " + std::to_string(asym)});
    bool morse_ok = true;
    std::string md;
    for (const auto& r : rows) {
        if (r.E < 50.0) continue;
        morse_ok = morse_ok && r.morse_plus == r.predicted_morse;
        md += "b" + std::to_string(r.branch) + "@" + num(r.E) + ":" + std::to_string(r.morse_plus) + "/" + std::to_string(r.predicted_morse) + " ";
    }
    checks.push_back({"morse_plus = predicted at E>=50", morse_ok, md.empty() ? "no rows with E>=50" : md});
    return finish(dir, "rescale", checks);
}

int cmd_probe(const RunConfig& cfg)
{
    const fs::path dir = cfg.out_dir;
    const auto ld = load_diagram(dir);
    const auto roles = identify_roles(ld.branches, ld.events);
    const auto po = cfg.probe_options();
    const auto targets = select_probe_targets(ld.branches, roles, po, [&](int b, int i) { return static_cast<bool>(ld.has_profile[b][i]); });
    require(!targets.empty(), "no probe targets with stored profiles; lower output.profile_stride");
    const auto rows = run_probes(ld.grid, ld.model, ld.branches, targets, po);
    atomic_write(dir / "probes.csv", probes_csv(rows));
    bool stable_ok = true, departed_ok = true, q_ok = true;
    int n_stable = 0, n_dep = 0;
    double qmax = 0.0;
    for (const auto& r : rows) {
        if (r.expect_departure) {
            ++n_dep;
            departed_ok = departed_ok && r.verdict == Verdict::departed;
        } else {
            ++n_stable;
            stable_ok = stable_ok && r.verdict == Verdict::bounded;
        }
        qmax = std::max(qmax, r.q_drift_per_time);
    }
    q_ok = qmax <= 1e-10;
    std::vector<Check> checks;
    checks.push_back({"stable points bounded", stable_ok, std::to_string(n_stable) + " probes"});
    checks.push_back({"post-pitchfork symmetric point departed", departed_ok && n_dep > 0, std::to_string(n_dep) + " probes"});
    checks.push_back({"Q drift per unit time", q_ok, num(qmax) + " (bound 1e-10)"});
    // Energy drift order on a visibly perturbed stable state.
    const BranchPoint* big = nullptr;
    for (const auto& t : targets) {
        const auto& p = ld.branches[t.branch].points[t.index];
        if (!t.expect_departure && (big == nullptr || p.Q() > big->Q())) big = &p;
    }
    const Field& phi = big->phi;
    ComplexField u0(ld.grid.n);
    for (int i = 0; i < ld.grid.n; ++i) u0[i] = phi[i] * (1.1 + 0.1 * std::tanh(ld.grid.x[i]));
    const auto dc = energy_drift_check(ld.grid, ld.model, u0, 10.0, probe_evolve_opts(big->E).dt);
    checks.push_back({"energy drift quarters when dt halves", std::abs(dc.ratio() - 4.0) <= 0.4,
                      "ratio " + num(dc.ratio()) + " (" + num(dc.drift_dt) + " / " + num(dc.drift_half) + ")"});
    return finish(dir, "probes", checks);
}

int cmd_varscan(const RunConfig& cfg)
{
    const fs::path dir = cfg.out_dir;
    const auto ld = load_diagram(dir);
    const auto vo = cfg.varscan_options();
    const auto rows = charge_scan(ld.grid, ld.model, vo.mus, vo.asym_center, vo.flow);
    atomic_write(dir / "varscan.csv", varscan_csv(rows));
    const auto cross = variational_crosscheck(ld.grid, ld.model, profiled_branches(ld), vo, ld.config.diagram_options().controls.newton);
    atomic_write(dir / "crosscheck.csv", crosscheck_csv(cross));
    std::vector<Check> checks;
    const auto tr = find_transition(rows, vo.asym_low, vo.asym_high);
    checks.push_back({"asymmetry transition", tr.found, tr.found ? "mu* in (" + num(tr.mu_below) + ", " + num(tr.mu_above) + ")" : "none"});
    for (const auto& c : cross) {
        const bool ok = c.matched && c.h1_distance <= 1e-4 && std::abs(c.E_flow - c.E_branch) <= 1e-4;
        checks.push_back({"minimizer matches branch at Q=" + num(c.mu), ok,
                          c.matched ? "H1 " + num(c.h1_distance) + ", dE " + num(std::abs(c.E_flow - c.E_branch)) : c.note});
    }
    return finish(dir, "varscan", checks);
}

int cmd_evolve(const RunConfig& cfg)
{
    const fs::path dir = cfg.out_dir;
    const auto ld = load_diagram(dir);
    const auto roles = identify_roles(ld.branches, ld.events);
    int id = -1;
    if (cfg.evolve.branch == "asymmetric") {
        id = roles.asymmetric.empty() ? -1 : roles.asymmetric.front();
    } else if (cfg.evolve.branch == "symmetric") {
        id = roles.symmetric;
    } else {
        try {
            id = std::stoi(cfg.evolve.branch);
        } catch (const std::exception&) {
            fail(ErrorKind::invalid_argument, "suites.evolve.branch must be asymmetric, symmetric or a branch id");
        }
    }
    require(id >= 0 && id < static_cast<int>(ld.branches.size()), "requested branch not in the diagram");
    const Branch& b = ld.branches[id];
    int best = -1;
    for (int i = 0; i < static_cast<int>(b.points.size()); ++i) {
        if (!ld.has_profile[id][i]) continue;
        if (best < 0 || std::abs(b.points[i].E - cfg.evolve.E) < std::abs(b.points[best].E - cfg.evolve.E)) best = i;
    }
    require(best >= 0, "branch has no stored profiles");
    const auto pts = walk_on_grid(ld.grid, b.points[best].phi, b.points[best].E, ld.grid, ld.model, {cfg.evolve.E});
    const Field& phi = pts.front().phi;
    ComplexField u0(ld.grid.n);
    const double pn = l2_norm(ld.grid, phi);
    Field d(ld.grid.n, 0.0);
    if (cfg.evolve.epsilon > 0.0) d = perturbation_direction(ld.grid, ld.model, phi, cfg.evolve.E, cfg.evolve.direction, cfg.seed);
    for (int i = 0; i < ld.grid.n; ++i) u0[i] = phi[i] + cfg.evolve.epsilon * pn * d[i];
    EvolveOpts eo;
    eo.dt = cfg.evolve.dt;
    eo.sample_every = cfg.evolve.sample_every;
    try {
        const auto tr = evolve(ld.grid, ld.model, u0, cfg.evolve.horizon, eo, &phi);
        atomic_write(dir / "trajectory.csv", trajectory_csv(tr));
        std::printf("evolved branch %d at E=%s to t=%s; %zu samples written\n", id, num(cfg.evolve.E).c_str(), num(tr.t).c_str(),
                    tr.samples.size());
    } catch (const BlowUp& e) {
        atomic_write(dir / "failure.json", json{{"kind", to_string(e.kind())}, {"message", e.what()}, {"time", e.time()}}.dump(2) + "\n");
        std::fprintf(stderr, "%s\n", e.what());
        return kNumericalFailure;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Continuation and bifurcation of 1D NLS bound states"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON run configuration");
        sub->add_option("--out", common.out, "output directory (default: config, then $NLSBIF_OUT_DIR)");
        sub->add_option("--seed", common.seed, "random seed for the random probe direction");
        sub->add_option("--budget", common.budget, "branch budget");
    };
    struct Sub {
        const char* name;
        const char* help;
        int (*fn)(const RunConfig&);
    };
    const Sub subs[] = {
        {"diagram", "trace the bifurcation diagram and write branch artifacts", cmd_diagram},
        {"scaling", "large-E scaling ratios on the asymmetric branch", cmd_scaling},
        {"probe", "time-evolution stability probes on tagged points", cmd_probe},
        {"varscan", "normalized gradient flow over a charge scan", cmd_varscan},
        {"rescale", "rescaled limit profiles and Morse predictions", cmd_rescale},
        {"evolve", "evolve one branch state and write its trajectory", cmd_evolve},
    };
    std::vector<CLI::App*> handles;
    for (const auto& s : subs) {
        auto* sub = app.add_subcommand(s.name, s.help);
        add_common(sub);
        handles.push_back(sub);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }
    for (std::size_t k = 0; k < handles.size(); ++k) {
        if (!handles[k]->parsed()) continue;
        try {
            bool from_file = false;
            const RunConfig cfg = resolve(common, from_file);
            return subs[k].fn(cfg);
        } catch (const Error& e) {
            std::fprintf(stderr, "%s\n", e.what());
            switch (e.kind()) {
            case ErrorKind::invalid_argument:
            case ErrorKind::io_error:
            case ErrorKind::no_linear_bound_state:
            case ErrorKind::insufficient_range:
            case ErrorKind::unsupported: return kConfigError;
            default: break;
            }
            return kNumericalFailure;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kNumericalFailure;
        }
    }
    return kConfigError;
}
