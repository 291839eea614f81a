// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fails.
#include <Eigen/Dense>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include "nlsbif/artifacts.hpp"
#include "nlsbif/suites.hpp"

using namespace nlsbif;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const char* title, bool pass, const std::string& detail)
{
    std::printf("%s criterion %d (%s): %s\n", pass ? "PASS" : "FAIL", id, title, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++failures;
}

std::string f(const char* fmt_, double a)
{
    char b[128];
    std::snprintf(b, sizeof b, fmt_, a);
    return b;
}

RunConfig double_well_config()
{
    RunConfig c; // defaults: L=30, N=3000, V double well (depth 2, separation 2, width 1), gamma=-1, p=2
    return c;
}

Eigen::MatrixXd dense(const SymTridiag& t)
{
    const int n = t.size();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) a(i, i) = t.diag[i];
    for (int i = 0; i + 1 < n; ++i) a(i, i + 1) = a(i + 1, i) = t.off[i];
    return a;
}

// ---------------------------------------------------------------- criterion 1

void criterion1(const RunConfig& cfg)
{
    const Grid g = cfg.grid();
    const ModelSpec& m = cfg.model;
    const auto t0 = Clock::now();
    // Trivial stage of the diagram: trace phi=0 and locate its first event.
    const Field pot = potential_eval(m.potential, g);
    const auto lows = smallest_eigenvalues(schrodinger_operator(g, pot, 0.0), 2);
    const double e_mid = lows[1] < 0.0 ? 0.5 * (-lows[0] - lows[1]) : -0.5 * lows[0];
    auto tc = cfg.diagram_options().controls;
    tc.E_max = std::max(2.0 * -lows[0], e_mid + 1.0);
    Branch trivial = trace_branch(g, m, make_point(g, m, Field(g.n, 0.0), e_mid, tc.spectral), 1, tc);
    double located = std::numeric_limits<double>::quiet_NaN();
    for (const auto& br : detect_events(trivial)) {
        const auto ev = locate_event(g, m, trivial, br, cfg.diagram_options().events);
        if (ev.crossing_index == 0) {
            located = ev.refined.E;
            break;
        }
    }
    const double elapsed = seconds_since(t0);

    // Oracle: dense eigensolve on a coarse grid, ground state interpolated to
    // the working grid and its Rayleigh quotient taken there.
    const Grid coarse = build_grid(cfg.L, 400);
    const auto hc = schrodinger_operator(coarse, potential_eval(m.potential, coarse), 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(hc));
    Field v(coarse.n);
    for (int i = 0; i < coarse.n; ++i) v[i] = es.eigenvectors()(i, 0);
    Field w(g.n);
    for (int i = 0; i < g.n; ++i) w[i] = interpolate_cubic(coarse, v, g.x[i]);
    const auto hf = schrodinger_operator(g, pot, 0.0);
    const Field hw = hf.apply(w);
    const double rq = inner_product(g, w, hw) / inner_product(g, w, w);
    const double oracle = -rq;
    const double rel = std::abs(located - oracle) / oracle;
    report(1, "trivial-branch bifurcation", rel <= 1e-3 && elapsed < 10.0,
           "E0 located " + f("%.10f", located) + ", oracle " + f("%.10f", oracle) + " (raw coarse " + f("%.10f", -es.eigenvalues()(0)) +
               "), rel " + f("%.2e", rel) + ", " + f("%.2f", elapsed) + " s");
}

// ---------------------------------------------------------------- criterion 2

void criterion2()
{
    const auto t0 = Clock::now();
    const Grid g = build_grid(20.0, 14000);
    ModelSpec m; // V = 0, gamma = -1, p = 2
    DiagramOptions o;
    o.controls.E_min = 0.5;
    o.controls.E_max = 100.0;
    const Diagram d = run_diagram(g, m, o, {{{soliton_field(g, 1.0, m.gamma, m.power), 1.0}, "soliton"}});
    const double elapsed = seconds_since(t0);
    double worst = 0.0, e_lo = 1e300, e_hi = 0.0;
    int n = 0;
    bool morse = true;
    for (const auto& b : d.branches) {
        for (const auto& p : b.points) {
            if (p.E < 0.5 - 1e-12 || p.E > 100.0 + 1e-12) continue;
            ++n;
            e_lo = std::min(e_lo, p.E);
            e_hi = std::max(e_hi, p.E);
            worst = std::max(worst, std::abs(p.Q() - 2.0 * std::sqrt(p.E)) / (2.0 * std::sqrt(p.E)));
            morse = morse && p.spectral.morse_plus == 1 && p.spectral.morse_minus == 0;
        }
    }
    const bool ok = !d.failure && n > 0 && worst <= 1e-4 && morse && d.events.empty() && e_lo <= 0.5 + 1e-9 && e_hi >= 100.0 - 1e-9 &&
                    elapsed < 60.0;
    report(2, "exact soliton family", ok,
           std::to_string(n) + " points on E in [" + f("%.6g", e_lo) + ", " + f("%.6g", e_hi) + "], max rel Q error " + f("%.2e", worst) +
               ", morse (1,0) " + (morse ? "everywhere" : "violated") + ", " + std::to_string(d.events.size()) + " events, " +
               f("%.2f", elapsed) + " s (L=20, N=14000)" + (d.failure ? std::string(", failure: ") + d.failure->what() : ""));
}

// ---------------------------------------------------------------- criterion 3

void criterion3(const Diagram& d)
{
    const auto roles = identify_roles(d);
    int pitchforks = 0;
    double e_pf = std::numeric_limits<double>::quiet_NaN();
    for (const auto& e : d.events) {
        if (e.branch_id == roles.symmetric && e.kind == EventKind::pitchfork_symmetry_breaking && e.kernel_parity == Parity::odd) {
            ++pitchforks;
            e_pf = e.refined.E;
        }
    }
    bool ok = roles.symmetric >= 0 && pitchforks == 1 && roles.asymmetric.size() == 2;
    int excluded = 0, checked = 0;
    auto degenerate = [](const BranchPoint& p) { return p.stability.reason == StabilityReason::kernel_degenerate; };
    if (ok) {
        for (const auto& p : d.branches[roles.symmetric].points) {
            if (p.E <= e_pf) continue;
            if (degenerate(p)) {
                ++excluded;
                continue;
            }
            ++checked;
            ok = ok && p.spectral.morse_plus == 2 && p.stability.value == Stability::unstable;
        }
        for (int id : roles.asymmetric) {
            for (const auto& p : d.branches[id].points) {
                if (degenerate(p)) {
                    ++excluded;
                    continue;
                }
                ++checked;
                ok = ok && p.spectral.morse_plus == 1 && p.slope_dQdE > 0.0 && p.stability.value == Stability::stable;
            }
        }
    }
    double mirror_diff = std::numeric_limits<double>::infinity();
    if (roles.asymmetric.size() == 2) {
        const auto& a = d.branches[roles.asymmetric[0]];
        const auto& b = d.branches[roles.asymmetric[1]];
        if (a.points.size() == b.points.size()) {
            mirror_diff = 0.0;
            for (std::size_t i = 0; i < a.points.size(); ++i) {
                const Field mb = mirror(b.points[i].phi);
                for (int k = 0; k < d.grid.n; ++k) mirror_diff = std::max(mirror_diff, std::abs(a.points[i].phi[k] - mb[k]));
                mirror_diff = std::max(mirror_diff, std::abs(a.points[i].E - b.points[i].E));
            }
        }
    }
    ok = ok && mirror_diff <= 1e-6;
    report(3, "symmetry-breaking diagram", ok,
           std::to_string(pitchforks) + " odd pitchfork(s) on the symmetric branch at E=" + f("%.10f", e_pf) + ", " +
               std::to_string(roles.asymmetric.size()) + " asymmetric branches, " + std::to_string(checked) + " points checked, " +
               std::to_string(excluded) + " kernel-degenerate points excluded, mirror difference " + f("%.2e", mirror_diff));
}

// ------------------------------------------------------------ criteria 4 and 5

void criteria4and5(const Diagram& d)
{
    const auto roles = identify_roles(d);
    if (roles.asymmetric.empty() || roles.symmetric < 0) {
        report(4, "scaling laws", false, "no asymmetric branch");
        report(5, "limit profiles", false, "no asymmetric branch");
        return;
    }
    AsymptoticOptions ao;
    const int asym = roles.asymmetric.front();
    auto t0 = Clock::now();
    const auto rb = refine_branch(d.grid, d.model, d.branches[asym], ao.scaling_energies, ao);
    const auto rep = scaling_report(d.model, rb);
    const double el = seconds_since(t0);
    const double lq = limit_ratio_Q(d.model.power), lk = limit_ratio_K(d.model.power);
    const bool ok4 = std::abs(rep.fit.r_Q - lq) <= 0.05 * lq && std::abs(rep.fit.r_K - lk) <= 0.05 * lk && el < 300.0;
    std::string rows;
    for (const auto& r : rep.rows) rows += f(" E=%g:", r.E) + f("(%.4f,", r.r_Q) + f("%.4f)", r.r_K);
    report(4, "scaling laws", ok4,
           "r_Q -> " + f("%.6f", rep.fit.r_Q) + " (limit " + f("%.2f", lq) + "), r_K -> " + f("%.6f", rep.fit.r_K) + " (limit " +
               f("%.2f", lk) + "), from E=" + f("%g", rep.fit.E_lo) + "," + f("%g", rep.fit.E_hi) + ";" + rows + "; " + f("%.2f", el) + " s");

    std::vector<RescaleRow> all;
    for (int id : {asym, roles.symmetric}) {
        const auto r = refine_branch(d.grid, d.model, d.branches[id], ao.rescale_energies, ao);
        for (const auto& row : rescale_rows(d.model, r, ao)) all.push_back(row);
    }
    double res100 = std::numeric_limits<double>::infinity(), dist100 = res100, prev = res100;
    bool decreasing = true, morse = true;
    std::string dists, morses;
    for (const auto& r : all) {
        if (r.branch == asym) {
            decreasing = decreasing && r.distance < prev;
            prev = r.distance;
            dists += f(" %g:", r.E) + f("%.4f", r.distance);
            if (r.E == 100.0) {
                res100 = r.residual;
                dist100 = r.distance;
            }
        }
        if (r.E >= 50.0) {
            morse = morse && r.morse_plus == r.predicted_morse;
            morses += " b" + std::to_string(r.branch) + f("@%g:", r.E) + std::to_string(r.morse_plus) + "/" + std::to_string(r.predicted_morse);
        }
    }
    const bool ok5 = res100 <= 1e-2 && dist100 <= 5e-2 && decreasing && morse;
    report(5, "limit profiles", ok5,
           "E=100 residual " + f("%.4f", res100) + " (bound 0.01), H1 distance " + f("%.4f", dist100) + " (bound 0.05); distances" + dists +
               (decreasing ? " decreasing" : " NOT decreasing") + "; morse measured/predicted" + morses);
}

// ---------------------------------------------------------------- criterion 6

void criterion6(const Diagram& d)
{
    double poh = 0.0, worst_ratio = 0.0, poh_E = 0.0;
    int n_points = 0, n_pairs = 0, n_bad = 0;
    for (const auto& b : d.branches) {
        for (std::size_t i = 0; i < b.points.size(); ++i) {
            const auto& p = b.points[i];
            ++n_points;
            if (std::abs(p.pohozaev) > poh) {
                poh = std::abs(p.pohozaev);
                poh_E = p.E;
            }
            if (i == 0) continue;
            const auto& a = b.points[i - 1];
            const double ds = extended_distance(d.grid, a, p);
            if (ds == 0.0) continue;
            const double ebar = 0.5 * (a.E + p.E);
            const double r = std::abs((p.functionals.energy - a.functionals.energy) + ebar * (p.Q() - a.Q()));
            ++n_pairs;
            worst_ratio = std::max(worst_ratio, r / (ds * ds));
            if (r > 10.0 * ds * ds) ++n_bad;
        }
    }
    // Same identity on the refined grid at E=100, for scale.
    const auto roles = identify_roles(d);
    double poh_fine = std::numeric_limits<double>::quiet_NaN();
    if (!roles.asymmetric.empty()) {
        AsymptoticOptions ao;
        const auto rb = refine_branch(d.grid, d.model, d.branches[roles.asymmetric.front()], {100.0}, ao);
        poh_fine = rb.points.front().pohozaev;
    }
    report(6, "branch identities", poh <= 1e-6 && n_bad == 0,
           "max |pohozaev| " + f("%.3e", poh) + " at E=" + f("%.4g", poh_E) + " over " + std::to_string(n_points) + " points (bound 1e-6; " +
               "refined grid L=6 N=12000 at E=100 gives " + f("%.3e", poh_fine) + "); energy identity max residual/ds^2 " + f("%.3e", worst_ratio) +
               " over " + std::to_string(n_pairs) + " steps, " + std::to_string(n_bad) + " above 10");
}

// ---------------------------------------------------------------- criterion 7

void criterion7()
{
    std::mt19937_64 rng(20261016);
    std::uniform_int_distribution<int> size(1, 50);
    std::normal_distribution<double> nd(0.0, 1.0);
    double worst = 0.0;
    int count_mismatch = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const int n = size(rng);
        SymTridiag t;
        t.diag.resize(n);
        t.off.resize(std::max(0, n - 1));
        for (auto& v : t.diag) v = nd(rng);
        for (auto& v : t.off) v = nd(rng);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense(t), Eigen::EigenvaluesOnly);
        const auto& ev = es.eigenvalues();
        // Inertia at shifts placed between and away from eigenvalues.
        std::vector<double> shifts{0.0, ev(0) - 1.0, ev(n - 1) + 1.0};
        for (int j = 0; j + 1 < n; ++j) shifts.push_back(0.5 * (ev(j) + ev(j + 1)));
        for (double s : shifts) {
            int expect = 0;
            for (int j = 0; j < n; ++j) expect += ev(j) < s ? 1 : 0;
            if (eig_count_below(t, s) != expect) ++count_mismatch;
        }
        const int k = std::min(3, n);
        const auto mine = smallest_eigenvalues(t, k);
        for (int j = 0; j < k; ++j) worst = std::max(worst, std::abs(mine[j] - ev(j)));
    }
    report(7, "spectral oracle", count_mismatch == 0 && worst <= 1e-10,
           "100 random matrices of size 1..50: " + std::to_string(count_mismatch) + " inertia mismatches, max eigenvalue error " + f("%.2e", worst));
}

// ---------------------------------------------------------------- criterion 8

void criterion8(const Diagram& d, const RunConfig& cfg)
{
    const auto t0 = Clock::now();
    const auto vo = cfg.varscan_options();
    const auto rows = charge_scan(d.grid, d.model, vo.mus, vo.asym_center, vo.flow);
    const auto tr = find_transition(rows, vo.asym_low, vo.asym_high);
    const auto cross = variational_crosscheck(d.grid, d.model, d.branches, vo, cfg.diagram_options().controls.newton);
    bool ok = tr.found && cross.size() == 3;
    std::string det;
    for (const auto& c : cross) {
        ok = ok && c.matched && c.h1_distance <= 1e-4 && std::abs(c.E_flow - c.E_branch) <= 1e-4;
        det += f(" Q=%g:", c.mu) + (c.matched ? "H1 " + f("%.2e", c.h1_distance) + " dE " + f("%.2e", std::abs(c.E_flow - c.E_branch)) : c.note);
    }
    report(8, "variational cross-check", ok,
           (tr.found ? "transition in (" + f("%.6g", tr.mu_below) + ", " + f("%.6g", tr.mu_above) + ")" : std::string("no transition")) + ";" + det +
               "; " + f("%.2f", seconds_since(t0)) + " s");
}

// ---------------------------------------------------------------- criterion 9

void criterion9(const Diagram& d, const RunConfig& cfg)
{
    const auto t0 = Clock::now();
    const auto roles = identify_roles(d);
    const auto po = cfg.probe_options();
    const auto targets = select_probe_targets(d.branches, roles, po);
    const auto rows = run_probes(d.grid, d.model, d.branches, targets, po);
    int n_stable = 0, n_dep = 0, bad = 0;
    double qmax = 0.0, worst_bounded = 0.0, dep_dist = 0.0;
    for (const auto& r : rows) {
        qmax = std::max(qmax, r.q_drift_per_time);
        if (r.expect_departure) {
            ++n_dep;
            dep_dist = r.max_relative_distance;
            if (r.verdict != Verdict::departed) ++bad;
        } else {
            ++n_stable;
            worst_bounded = std::max(worst_bounded, r.max_relative_distance);
            if (r.verdict != Verdict::bounded) ++bad;
        }
    }
    const BranchPoint* big = nullptr;
    for (const auto& t : targets) {
        const auto& p = d.branches[t.branch].points[t.index];
        if (!t.expect_departure && (big == nullptr || p.Q() > big->Q())) big = &p;
    }
    DriftCheck dc;
    if (big != nullptr) {
        ComplexField u0(d.grid.n);
        for (int i = 0; i < d.grid.n; ++i) u0[i] = big->phi[i] * (1.1 + 0.1 * std::tanh(d.grid.x[i]));
        dc = energy_drift_check(d.grid, d.model, u0, 10.0, probe_evolve_opts(big->E).dt);
    }
    const bool drift_ok = big != nullptr && std::abs(dc.ratio() - 4.0) <= 0.4;
    const bool ok = bad == 0 && n_dep > 0 && n_stable > 0 && qmax <= 1e-10 && drift_ok;
    report(9, "dynamics probes", ok,
           std::to_string(n_stable) + " stable-point probes (max distance/eps " + f("%.2f", worst_bounded / po.epsilon) + "), " + std::to_string(n_dep) +
               " departure probe (distance " + f("%.3g", dep_dist) + "), " + std::to_string(bad) + " wrong verdicts; Q drift/time " + f("%.2e", qmax) +
               "; energy drift ratio dt vs dt/2 " + f("%.3f", dc.ratio()) + " at E=" + f("%.4g", big ? big->E : 0.0) + "; " +
               f("%.1f", seconds_since(t0)) + " s");
}

// --------------------------------------------------------------- criterion 10

void criterion10(const Diagram& first, const RunConfig& cfg, const fs::path& work)
{
    const Diagram second = run_diagram(cfg.grid(), cfg.model, cfg.diagram_options());
    const fs::path a = work / "det_a", b = work / "det_b";
    fs::remove_all(a);
    fs::remove_all(b);
    write_diagram(a, first, cfg);
    write_diagram(b, second, cfg);
    int files = 0, differ = 0;
    for (const auto& e : fs::directory_iterator(a / "branches")) {
        ++files;
        const fs::path other = b / "branches" / e.path().filename();
        if (!fs::exists(other) || read_text(e.path()) != read_text(other)) ++differ;
    }
    int other_files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(b / "branches")) ++other_files;
    report(10, "determinism", files > 0 && differ == 0 && files == other_files,
           std::to_string(files) + " branch CSVs compared byte for byte, " + std::to_string(differ) + " differ");
}

} // namespace

int main(int argc, char** argv)
{
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "nlsbif_acceptance";
    fs::create_directories(work);
    const RunConfig cfg = double_well_config();

    criterion1(cfg);
    const auto t0 = Clock::now();
    const Diagram d = run_diagram(cfg.grid(), cfg.model, cfg.diagram_options());
    std::printf("(double-well diagram: %zu branches, %zu events, %.2f s%s)\n", d.branches.size(), d.events.size(), seconds_since(t0),
                d.failure ? (std::string(", failure: ") + d.failure->what()).c_str() : "");
    criterion2();
    criterion3(d);
    criteria4and5(d);
    criterion6(d);
    criterion7();
    criterion8(d, cfg);
    criterion9(d, cfg);
    criterion10(d, cfg, work);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
