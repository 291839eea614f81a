#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "asymptotics.hpp"
#include "continuation.hpp"
#include "diagram.hpp"
#include "evolution.hpp"
#include "variational.hpp"

namespace nlsbif {

/// Symmetric primary branch and the asymmetric branches switched from it.
struct BranchRoles {
    int symmetric = -1;
    std::vector<int> asymmetric;
    int pitchfork_event = -1;
};

inline BranchRoles identify_roles(const std::vector<Branch>& branches, const std::vector<BifurcationEvent>& events)
{
    BranchRoles r;
    for (const auto& b : branches) {
        if (b.parent_event >= 0 && b.parent_event < static_cast<int>(events.size()) &&
            events[b.parent_event].kind == EventKind::trivial_branch_pitchfork) {
            r.symmetric = b.id;
            break;
        }
    }
    for (const auto& ev : events) {
        if (ev.kind != EventKind::pitchfork_symmetry_breaking) continue;
        if (r.symmetric >= 0 && ev.branch_id != r.symmetric) continue;
        if (r.pitchfork_event < 0) r.pitchfork_event = ev.id;
        if (ev.id != r.pitchfork_event) continue;
        for (int c : ev.child_branches) r.asymmetric.push_back(c);
    }
    return r;
}

inline BranchRoles identify_roles(const Diagram& d) { return identify_roles(d.branches, d.events); }

/// Index of the point with E closest to target (first among ties).
inline int nearest_point(const Branch& b, double target)
{
    require(!b.points.empty(), "nearest_point: empty branch");
    int best = 0;
    for (int i = 1; i < static_cast<int>(b.points.size()); ++i) {
        if (std::abs(b.points[i].E - target) < std::abs(b.points[best].E - target)) best = i;
    }
    return best;
}

inline Field resample_cubic(const Grid& from, const Field& f, const Grid& to)
{
    detail::check_len(from, f.size(), "resample_cubic");
    Field out(to.n);
    for (int i = 0; i < to.n; ++i) out[i] = interpolate_cubic(from, f, to.x[i]);
    return out;
}

/// Move a converged state to another grid and walk it in log E through the
/// targets (visited in the given order); one record per target.
inline std::vector<BranchPoint> walk_on_grid(const Grid& from, const Field& phi, double e_from, const Grid& to, const ModelSpec& m,
                                             const std::vector<double>& targets, const NewtonOpts& newton = {},
                                             const SpectralOptions& sopts = {}, double log_step = 0.05)
{
    require(e_from > 0.0, "walk_on_grid: E must be > 0");
    Field cur = resample_cubic(from, phi, to);
    double e = e_from;
    cur = newton_fixed_E(to, m, cur, e, newton).phi;
    std::vector<BranchPoint> out;
    for (double t : targets) {
        require(t > 0.0, "walk_on_grid: targets must be > 0");
        const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(std::log(t / e)) / log_step)));
        for (int s = 1; s <= steps; ++s) {
            const double es = e * std::pow(t / e, static_cast<double>(s) / steps);
            cur = newton_fixed_E(to, m, cur, es, newton).phi;
        }
        e = t;
        out.push_back(make_point(to, m, cur, t, sopts));
    }
    return out;
}

// ---------------------------------------------------------------- asymptotics

struct AsymptoticOptions {
    std::vector<double> scaling_energies{20.0, 25.0, 50.0, 100.0, 200.0};
    std::vector<double> rescale_energies{25.0, 50.0, 100.0, 200.0};
    double fine_L = 6.0;
    int fine_N = 12000;
    double ref_L = 20.0;
    int ref_N = 2000;
    double placement_threshold = 0.1;
    NewtonOpts newton;
};

struct RescaleRow {
    int branch = -1;
    double E = 0.0;
    double x0 = 0.0;
    double residual = 0.0;
    double distance = 0.0;
    double coverage = 1.0;
    int morse_plus = 0;
    int predicted_morse = -1;
    std::string placement;
};

/// Walk of one branch on the refined grid.
struct RefinedBranch {
    int branch = -1;
    Grid grid;
    std::vector<BranchPoint> points;
};

/// Start from the diagram point nearest the lowest target and walk upward.
inline RefinedBranch refine_branch(const Grid& g, const ModelSpec& m, const Branch& b, std::vector<double> energies, const AsymptoticOptions& o)
{
    require(!energies.empty(), "refine_branch: no target energies");
    std::sort(energies.begin(), energies.end());
    const Grid fine = build_grid(o.fine_L, o.fine_N);
    const auto& start = b.points[nearest_point(b, energies.front())];
    RefinedBranch r;
    r.branch = b.id;
    r.grid = fine;
    r.points = walk_on_grid(g, start.phi, start.E, fine, m, energies, o.newton);
    return r;
}

inline std::string placement_string(const std::vector<Placement>& pl)
{
    std::string s;
    for (const auto& p : pl) {
        if (!s.empty()) s += ";";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s@%.6g", to_string(p.point.kind), p.point.x);
        s += buf;
    }
    return s;
}

/// Rescaled-profile diagnostics; x0 is the critical point under the largest
/// peak of |phi|.
inline std::vector<RescaleRow> rescale_rows(const ModelSpec& m, const RefinedBranch& rb, const AsymptoticOptions& o)
{
    const Grid& fine = rb.grid;
    std::vector<RescaleRow> rows;
    for (const auto& p : rb.points) {
        RescaleRow row;
        row.branch = rb.branch;
        row.E = p.E;
        row.morse_plus = p.spectral.morse_plus;
        const auto pl = infer_placement(fine, p.phi, m.potential, o.placement_threshold);
        row.placement = placement_string(pl);
        try {
            row.predicted_morse = predicted_morse(pl);
        } catch (const Error&) {
            row.predicted_morse = -1;
        }
        int imax = 0;
        for (int i = 1; i < fine.n; ++i) {
            if (std::abs(p.phi[i]) > std::abs(p.phi[imax])) imax = i;
        }
        const auto cps = critical_points(m.potential, fine.half_width);
        row.x0 = fine.x[imax];
        double best = std::numeric_limits<double>::infinity();
        for (const auto& c : cps) {
            if (std::abs(c.x - fine.x[imax]) < best) {
                best = std::abs(c.x - fine.x[imax]);
                row.x0 = c.x;
            }
        }
        const auto rp = rescale_profile(fine, p.phi, p.E, row.x0, m.power, o.ref_L, o.ref_N);
        row.coverage = rp.coverage;
        row.residual = limit_profile_residual(rp.ref, rp.psi, m);
        row.distance = limit_profile_distance(rp.ref, rp.psi, m);
        rows.push_back(row);
    }
    return rows;
}

inline ScalingReport scaling_report(const ModelSpec& m, const RefinedBranch& rb)
{
    const Grid& fine = rb.grid;
    std::vector<ScalingRow> rows;
    for (const auto& p : rb.points) rows.push_back(scaling_row(fine, m, p.phi, p.E));
    return scaling_diagnostics(std::move(rows));
}

// --------------------------------------------------------------------- probes

struct ProbeSuiteOptions {
    double epsilon = 1e-3;
    double horizon = 50.0;
    int per_segment = 3;
    double E_cap = 10.0; // probe cost grows like E; stable points above are not sampled
    std::vector<PerturbationKind> directions{PerturbationKind::ground_eigenvector, PerturbationKind::random,
                                             PerturbationKind::mirror_antisymmetric};
    double symmetric_E = 2.0; // post-pitchfork symmetric point probed for departure
    std::uint64_t seed = 1;
};

struct ProbeTarget {
    int branch = -1;
    int index = -1;
    bool expect_departure = false;
};

struct ProbeRow {
    int branch = -1;
    int index = -1;
    double E = 0.0;
    Stability tag = Stability::indeterminate;
    PerturbationKind direction = PerturbationKind::random;
    bool expect_departure = false;
    Verdict verdict = Verdict::inconclusive;
    double max_relative_distance = 0.0;
    double q_drift_per_time = 0.0;
    double dt = 0.0;
    std::string note;
};

/// Evenly spaced stable points from each stable run with E <= E_cap, plus the
/// first unstable symmetric point at or beyond symmetric_E.
/// `has_profile` filters points whose profile is available.
template <class HasProfile>
std::vector<ProbeTarget> select_probe_targets(const std::vector<Branch>& branches, const BranchRoles& roles, const ProbeSuiteOptions& o,
                                              HasProfile has_profile)
{
    std::vector<ProbeTarget> out;
    for (const auto& b : branches) {
        std::vector<int> run;
        auto flush = [&]() {
            if (run.empty()) return;
            const int k = std::min<int>(o.per_segment, static_cast<int>(run.size()));
            for (int j = 0; j < k; ++j) {
                const int pos = k == 1 ? 0 : static_cast<int>(std::lround(static_cast<double>(j) * (run.size() - 1) / (k - 1)));
                out.push_back({b.id, run[pos], false});
            }
            run.clear();
        };
        for (int i = 0; i < static_cast<int>(b.points.size()); ++i) {
            const auto& p = b.points[i];
            if (p.stability.value == Stability::stable && p.E <= o.E_cap && !is_zero_field(p.phi) && has_profile(b.id, i)) {
                run.push_back(i);
            } else if (p.stability.value != Stability::stable) {
                flush();
            }
        }
        flush();
    }
    if (roles.symmetric >= 0) {
        const auto& b = branches[roles.symmetric];
        for (int i = 0; i < static_cast<int>(b.points.size()); ++i) {
            const auto& p = b.points[i];
            if (p.E >= o.symmetric_E && p.stability.value == Stability::unstable && has_profile(b.id, i)) {
                out.push_back({b.id, i, true});
                break;
            }
        }
    }
    return out;
}

inline std::vector<ProbeTarget> select_probe_targets(const std::vector<Branch>& branches, const BranchRoles& roles, const ProbeSuiteOptions& o)
{
    return select_probe_targets(branches, roles, o, [](int, int) { return true; });
}

/// Runs every listed direction on stable targets and the mirror-antisymmetric
/// direction on departure targets.
inline std::vector<ProbeRow> run_probes(const Grid& g, const ModelSpec& m, const std::vector<Branch>& branches,
                                        const std::vector<ProbeTarget>& targets, const ProbeSuiteOptions& o)
{
    std::vector<ProbeRow> rows;
    for (const auto& t : targets) {
        const auto& p = branches[t.branch].points[t.index];
        std::vector<PerturbationKind> dirs = t.expect_departure ? std::vector<PerturbationKind>{PerturbationKind::mirror_antisymmetric} : o.directions;
        for (auto dir : dirs) {
            ProbeSpec spec;
            spec.direction = dir;
            spec.epsilon = o.epsilon;
            spec.horizon = o.horizon;
            spec.evolve = probe_evolve_opts(p.E);
            spec.seed = o.seed;
            ProbeRow row;
            row.branch = t.branch;
            row.index = t.index;
            row.E = p.E;
            row.tag = p.stability.value;
            row.direction = dir;
            row.expect_departure = t.expect_departure;
            row.dt = spec.evolve.dt;
            const auto r = stability_probe(g, m, p.phi, p.E, spec);
            row.verdict = r.verdict;
            row.max_relative_distance = r.max_relative_distance;
            row.q_drift_per_time = r.q_drift_per_time;
            row.note = r.note;
            rows.push_back(row);
        }
    }
    return rows;
}

/// Energy drift max_t |energy(t) - energy(0)| over [0, T] at dt and dt/2;
/// a second-order scheme gives a ratio near 4.
struct DriftCheck {
    double dt = 0.0;
    double drift_dt = 0.0;
    double drift_half = 0.0;
    double ratio() const { return drift_half > 0.0 ? drift_dt / drift_half : std::numeric_limits<double>::infinity(); }
};

inline DriftCheck energy_drift_check(const Grid& g, const ModelSpec& m, const ComplexField& u0, double horizon, double dt)
{
    auto drift = [&](double step) {
        EvolveOpts eo;
        eo.dt = step;
        eo.sample_every = std::max(1, static_cast<int>(std::lround(0.1 / step)));
        const auto tr = evolve(g, m, u0, horizon, eo);
        double d = 0.0;
        for (const auto& s : tr.samples) d = std::max(d, std::abs(s.energy - tr.samples.front().energy));
        return d;
    };
    DriftCheck c;
    c.dt = dt;
    c.drift_dt = drift(dt);
    c.drift_half = drift(0.5 * dt);
    return c;
}

// -------------------------------------------------------------------- varscan

struct VarscanOptions {
    std::vector<double> mus;
    double asym_center = 2.0;
    FlowOpts flow;
    std::vector<double> crosscheck{0.5, 1.0, 2.0};
    double asym_low = 1e-6;
    double asym_high = 1e-1;

    static std::vector<double> log_spaced(double lo, double hi, int count)
    {
        require(lo > 0.0 && hi > lo && count >= 2, "log_spaced: need 0 < lo < hi and count >= 2");
        std::vector<double> v(count);
        for (int i = 0; i < count; ++i) v[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
        return v;
    }
};

struct Transition {
    bool found = false;
    double mu_below = 0.0; // last mu with asymmetry <= asym_low
    double mu_above = 0.0; // first mu with asymmetry >= asym_high
};

/// A clean split of the sorted scan into a symmetric head and asymmetric tail.
inline Transition find_transition(const std::vector<ScanRow>& rows, double low, double high)
{
    Transition t;
    for (std::size_t k = 1; k < rows.size(); ++k) {
        bool ok = true;
        for (std::size_t j = 0; j < k && ok; ++j) ok = rows[j].asymmetry <= low;
        for (std::size_t j = k; j < rows.size() && ok; ++j) ok = rows[j].asymmetry >= high;
        if (ok) {
            t.found = true;
            t.mu_below = rows[k - 1].mu;
            t.mu_above = rows[k].mu;
            return t;
        }
    }
    return t;
}

struct CrossCheckRow {
    double mu = 0.0;
    int branch = -1;
    double E_flow = 0.0;
    double E_branch = 0.0;
    double h1_distance = 0.0; // min over the state and its mirror image
    double energy_flow = 0.0;
    double energy_branch = 0.0;
    bool matched = false;
    std::string note;
};

/// Point with charge mu on branch b: secant iteration on Q(E) - mu between two
/// consecutive points that are not tagged unstable. Each iterate is reached by
/// a short walk in E so that Newton stays on the branch. Returns a point only
/// when it classifies as stable.
inline std::optional<BranchPoint> point_with_charge(const Grid& g, const ModelSpec& m, const Branch& b, double mu, const NewtonOpts& newton,
                                                    const SpectralOptions& sopts = {})
{
    for (int i = 0; i + 1 < static_cast<int>(b.points.size()); ++i) {
        const auto& a = b.points[i];
        const auto& c = b.points[i + 1];
        if (a.stability.value == Stability::unstable || c.stability.value == Stability::unstable) continue;
        if (is_zero_field(a.phi) || is_zero_field(c.phi)) continue;
        if ((a.Q() - mu) * (c.Q() - mu) > 0.0) continue;
        const bool from_a = std::abs(a.Q() - mu) < std::abs(c.Q() - mu);
        Field phi = from_a ? a.phi : c.phi;
        double e_cur = from_a ? a.E : c.E;
        double e0 = a.E, q0 = a.Q(), e1 = c.E, q1 = c.Q();
        double e = e0 + (mu - q0) * (e1 - e0) / (q1 - q0);
        for (int it = 0; it < 40; ++it) {
            phi = walk_on_grid(g, phi, e_cur, g, m, {e}, newton, sopts, 0.01).front().phi;
            e_cur = e;
            const double q = charge(g, phi);
            if (std::abs(q - mu) <= 1e-13 * mu) break;
            e0 = e1;
            q0 = q1;
            e1 = e;
            q1 = q;
            if (q1 == q0) break;
            e = e1 + (mu - q1) * (e1 - e0) / (q1 - q0);
        }
        auto p = make_point(g, m, phi, e_cur, sopts);
        p.stability = classify_gss(p);
        if (p.stability.value == Stability::stable) return p;
    }
    return std::nullopt;
}

/// Compare flow minimizers at the crosscheck charges with the lowest-energy
/// stable continuation point of equal charge.
inline std::vector<CrossCheckRow> variational_crosscheck(const Grid& g, const ModelSpec& m, const std::vector<Branch>& branches,
                                                         const VarscanOptions& o, const NewtonOpts& newton = {})
{
    std::vector<CrossCheckRow> rows;
    for (double mu : o.crosscheck) {
        CrossCheckRow row;
        row.mu = mu;
        std::optional<BranchPoint> best;
        for (const auto& b : branches) {
            auto p = point_with_charge(g, m, b, mu, newton);
            if (p && (!best || p->functionals.energy < best->functionals.energy)) {
                best = std::move(p);
                row.branch = b.id;
            }
        }
        if (!best) {
            row.note = "no stable branch point with this charge";
            rows.push_back(row);
            continue;
        }
        const auto a = minimize_at_charge(g, m, mu, symmetric_start(g, std::max(1.0, 2.0 * o.asym_center)), o.flow);
        const auto b = minimize_at_charge(g, m, mu, asymmetric_start(g, o.asym_center), o.flow);
        const FlowResult& f = b.energy < a.energy ? b : a;
        row.E_flow = f.E;
        row.E_branch = best->E;
        row.energy_flow = f.energy;
        row.energy_branch = best->functionals.energy;
        const Field mir = mirror(best->phi);
        Field d1(g.n), d2(g.n), d3(g.n), d4(g.n);
        for (int i = 0; i < g.n; ++i) {
            d1[i] = f.phi[i] - best->phi[i];
            d2[i] = f.phi[i] - mir[i];
            d3[i] = f.phi[i] + best->phi[i]; // gauge sign
            d4[i] = f.phi[i] + mir[i];
        }
        row.h1_distance = std::min({h1_norm(g, d1), h1_norm(g, d2), h1_norm(g, d3), h1_norm(g, d4)});
        row.matched = true;
        rows.push_back(row);
    }
    return rows;
}

} // namespace nlsbif
