#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "branch.hpp"
#include "continuation.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "solver.hpp"
#include "spectral.hpp"

namespace nlsbif {

struct EventBracket {
    int index_lo = 0;
    int index_hi = 0;
    CrossingOperator op = CrossingOperator::none;
    int crossing_index = -1; // 0-based eigenvalue index that changes sign
    bool both_operators = false;
    bool tangent_flip = false;
};

struct EventOptions {
    double event_rel_tol = 1e-8; // event_tol = event_rel_tol * ||L||_inf
    double ds_min = 1e-5;
    int max_refinements = 80;
    NewtonOpts newton{1e-10, 25, 1.0};
    SpectralOptions spectral;
};

namespace detail {

inline int e_direction(const Branch& b, int i, int j)
{
    const double d = b.points[j].E - b.points[i].E;
    return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
}

} // namespace detail

/// Brackets where a Morse count changes between consecutive points, plus E
/// reversals (folds). Coincident brackets are merged.
inline std::vector<EventBracket> detect_events(const Branch& b)
{
    std::vector<EventBracket> out;
    const int n = static_cast<int>(b.points.size());
    for (int i = 0; i + 1 < n; ++i) {
        const auto& s0 = b.points[i].spectral;
        const auto& s1 = b.points[i + 1].spectral;
        const bool cp = s0.morse_plus != s1.morse_plus;
        const bool cm = s0.morse_minus != s1.morse_minus;
        if (cp) {
            const int lo = std::min(s0.morse_plus, s1.morse_plus);
            const int hi = std::max(s0.morse_plus, s1.morse_plus);
            for (int j = lo; j < hi; ++j) {
                EventBracket e;
                e.index_lo = i;
                e.index_hi = i + 1;
                e.op = CrossingOperator::l_plus;
                e.crossing_index = j;
                e.both_operators = cm;
                out.push_back(e);
            }
        } else if (cm) {
            const int lo = std::min(s0.morse_minus, s1.morse_minus);
            const int hi = std::max(s0.morse_minus, s1.morse_minus);
            for (int j = lo; j < hi; ++j) {
                EventBracket e;
                e.index_lo = i;
                e.index_hi = i + 1;
                e.op = CrossingOperator::l_minus;
                e.crossing_index = j;
                out.push_back(e);
            }
        }
    }
    // E reversals: the sign of dE flips between segment (i-1, i) and (i, i+1).
    for (int i = 1; i + 1 < n; ++i) {
        const int d0 = detail::e_direction(b, i - 1, i);
        const int d1 = detail::e_direction(b, i, i + 1);
        if (d0 == 0 || d1 == 0 || d0 == d1) continue;
        bool merged = false;
        for (auto& e : out) {
            if (e.index_lo >= i - 1 && e.index_hi <= i + 1) {
                e.tangent_flip = true;
                merged = true;
            }
        }
        if (!merged) {
            EventBracket e;
            e.index_lo = i - 1;
            e.index_hi = i + 1;
            e.tangent_flip = true;
            out.push_back(e);
        }
    }
    std::sort(out.begin(), out.end(), [](const EventBracket& a, const EventBracket& b) {
        return a.index_lo != b.index_lo ? a.index_lo < b.index_lo : a.crossing_index < b.crossing_index;
    });
    return out;
}

namespace detail {

inline const SymTridiag& crossing_operator(const Linearization& lin, CrossingOperator op)
{
    return op == CrossingOperator::l_minus ? lin.minus : lin.plus;
}

/// Point on the branch where the hyperplane through chord(t) orthogonal to the
/// chord meets it.
inline NewtonResult chord_point(const Grid& g, const ModelSpec& m, const BranchPoint& a, const BranchPoint& b, const Tangent& chord,
                                double t, const NewtonOpts& opts)
{
    Field pred(g.n);
    for (int i = 0; i < g.n; ++i) pred[i] = a.phi[i] + t * (b.phi[i] - a.phi[i]);
    return bordered_corrector(g, m, pred, a.E + t * (b.E - a.E), chord, opts);
}

inline double crossing_eigenvalue(const Grid& g, const ModelSpec& m, const Field& phi, double e, CrossingOperator op, int j)
{
    const auto lin = linearization(g, m, phi, e);
    return smallest_eigenvalues(crossing_operator(lin, op), j + 1)[j];
}

} // namespace detail

/// Refine a bracket by regula falsi (Illinois variant) on the crossing
/// eigenvalue along the chord, then classify from kernel parity and the
/// tangent orientation.
inline BifurcationEvent locate_event(const Grid& g, const ModelSpec& m, const Branch& b, const EventBracket& br,
                                     const EventOptions& opts = {})
{
    require(br.index_lo >= 0 && br.index_hi < static_cast<int>(b.points.size()) && br.index_lo < br.index_hi,
            "locate_event: bracket outside the branch");
    const BranchPoint& pa = b.points[br.index_lo];
    const BranchPoint& pb = b.points[br.index_hi];

    BifurcationEvent ev;
    ev.branch_id = b.id;
    ev.index_lo = br.index_lo;
    ev.index_hi = br.index_hi;
    ev.arclength_lo = pa.arclength;
    ev.arclength_hi = pb.arclength;
    ev.crossing = br.op;
    ev.crossing_index = br.crossing_index;
    ev.tangent_flip = br.tangent_flip;
    // Orientation on either side of the bracket, from neighboring segments.
    {
        const int n = static_cast<int>(b.points.size());
        const int before = br.index_lo > 0 ? detail::e_direction(b, br.index_lo - 1, br.index_lo) : 0;
        const int after = br.index_hi + 1 < n ? detail::e_direction(b, br.index_hi, br.index_hi + 1) : 0;
        if (before != 0 && after != 0 && before != after) ev.tangent_flip = true;
    }

    const CrossingOperator op = br.op == CrossingOperator::none ? CrossingOperator::l_plus : br.op;
    const int j = br.crossing_index >= 0 ? br.crossing_index : -1;

    Field best_phi = pa.phi;
    double best_e = pa.E;
    double best_t = 0.0;
    bool located = false;

    const double chord_len = extended_distance(g, pa, pb);
    if (j >= 0 && chord_len > 0.0) {
        Tangent chord;
        chord.dphi.resize(g.n);
        for (int i = 0; i < g.n; ++i) chord.dphi[i] = pb.phi[i] - pa.phi[i];
        chord.dE = pb.E - pa.E;
        chord = normalized(g, chord);

        const auto lin_a = linearization(g, m, pa.phi, pa.E);
        const double event_tol = opts.event_rel_tol * detail::crossing_operator(lin_a, op).norm_inf();
        double ta = 0.0, tb = 1.0;
        double fa = detail::crossing_eigenvalue(g, m, pa.phi, pa.E, op, j);
        double fb = detail::crossing_eigenvalue(g, m, pb.phi, pb.E, op, j);
        best_phi = std::abs(fa) <= std::abs(fb) ? pa.phi : pb.phi;
        best_e = std::abs(fa) <= std::abs(fb) ? pa.E : pb.E;
        best_t = std::abs(fa) <= std::abs(fb) ? 0.0 : 1.0;
        double best_f = std::min(std::abs(fa), std::abs(fb));
        if (fa * fb > 0.0) {
            ev.note = "lost bracket: crossing eigenvalue has the same sign at both ends";
        } else {
            int side = 0;
            for (int it = 0; it < opts.max_refinements; ++it) {
                if (best_f <= event_tol) {
                    located = true;
                    break;
                }
                if ((tb - ta) * chord_len <= opts.ds_min) {
                    located = true;
                    ev.note = "bracket width below ds_min";
                    break;
                }
                double t = (ta * fb - tb * fa) / (fb - fa);
                const double w = tb - ta;
                t = std::clamp(t, ta + 0.01 * w, tb - 0.01 * w);
                NewtonResult r;
                try {
                    r = detail::chord_point(g, m, pa, pb, chord, t, opts.newton);
                } catch (const Error&) {
                    t = 0.5 * (ta + tb);
                    r = detail::chord_point(g, m, pa, pb, chord, t, opts.newton);
                }
                const double ft = detail::crossing_eigenvalue(g, m, r.phi, r.energy_param, op, j);
                if (std::abs(ft) < best_f) {
                    best_f = std::abs(ft);
                    best_phi = r.phi;
                    best_e = r.energy_param;
                    best_t = t;
                }
                if ((ft > 0.0) == (fa > 0.0)) {
                    ta = t;
                    fa = ft;
                    if (side == 1) fb *= 0.5;
                    side = 1;
                } else {
                    tb = t;
                    fb = ft;
                    if (side == -1) fa *= 0.5;
                    side = -1;
                }
            }
            if (!located) ev.note = "refinement budget exhausted";
        }
    } else if (j < 0) {
        // Pure E reversal without a detected count change: pick the bracket end
        // whose L+ has the eigenvalue nearest zero.
        double fa = std::numeric_limits<double>::infinity();
        for (int k = br.index_lo; k <= br.index_hi; ++k) {
            for (double l : b.points[k].spectral.lambdas_plus) {
                if (std::abs(l) < fa) {
                    fa = std::abs(l);
                    best_phi = b.points[k].phi;
                    best_e = b.points[k].E;
                }
            }
        }
        located = true;
        ev.note = "E reversal without a Morse count change";
    }

    ev.refined = make_point(g, m, best_phi, best_e, opts.spectral);
    ev.refined.arclength = pa.arclength + best_t * (pb.arclength - pa.arclength);

    const auto lin = linearization(g, m, ev.refined.phi, ev.refined.E);
    const SymTridiag& cop = detail::crossing_operator(lin, op);
    const int jj = std::max(j, 0);
    const int nk = std::min(cop.size(), jj + 3);
    const auto pairs = smallest_eigenpairs(cop, jj + 1, g.h);
    ev.kernel_vector = pairs[jj].vector;
    ev.crossing_eigenvalue = pairs[jj].value;
    const auto vals = smallest_eigenvalues(cop, nk);
    ev.neighbor_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k < nk; ++k) {
        if (k != jj) ev.neighbor_gap = std::min(ev.neighbor_gap, std::abs(vals[k]));
    }
    ev.kernel_parity = parity_of(ev.kernel_vector, opts.spectral.parity_tol);

    const bool trivial = is_zero_field(ev.refined.phi);
    const bool even_profile = trivial || ev.refined.asymmetry <= opts.spectral.parity_tol;
    if (!located) {
        ev.kind = EventKind::unresolved;
    } else if (trivial) {
        ev.kind = EventKind::trivial_branch_pitchfork;
    } else if (op == CrossingOperator::l_plus && ev.kernel_parity == Parity::odd && even_profile) {
        ev.kind = EventKind::pitchfork_symmetry_breaking;
    } else if (ev.tangent_flip && ev.kernel_parity != Parity::odd) {
        ev.kind = EventKind::fold;
    } else {
        ev.kind = EventKind::unresolved;
        if (ev.note.empty()) ev.note = "crossing without a parity or orientation signature";
    }
    return ev;
}

struct SwitchOptions {
    double amplitude_rel = 1e-3; // s = amplitude_rel * ||phi*||, or absolute when phi* = 0
    double amplitude_abs = 1e-2;
    double delta_e = 1e-4;       // fixed-E fallback probes at E* +- delta_e
    NewtonOpts newton{1e-10, 40, 1.0};
};

/// Seeds on the branches crossing the parent at a pitchfork. Each seed keeps a
/// fixed component s along the kernel vector (bordered solve with tangent
/// (k, 0)); if that fails, fixed-E Newton from phi* + s k at E* +- delta_e.
inline std::vector<Seed> switch_branch(const Grid& g, const ModelSpec& m, const BifurcationEvent& ev, const SwitchOptions& opts = {})
{
    require(ev.kind == EventKind::pitchfork_symmetry_breaking || ev.kind == EventKind::trivial_branch_pitchfork,
            "switch_branch: event is not a pitchfork");
    require(!ev.kernel_vector.empty(), "switch_branch: no kernel vector");
    const Field& base = ev.refined.phi;
    const bool trivial = is_zero_field(base);
    Field phi_star = base;
    Field k = ev.kernel_vector;
    if (ev.kind == EventKind::pitchfork_symmetry_breaking) {
        phi_star = even_part(base);
        k = odd_part(k);
    }
    {
        double s = 0.0;
        for (double v : k) s += v;
        if (s < 0.0 || (s == 0.0 && !k.empty() && k[0] < 0.0)) {
            for (double& v : k) v = -v;
        }
        if (ev.kind == EventKind::pitchfork_symmetry_breaking) {
            // Orient odd vectors by their right half.
            double r = 0.0;
            for (int i = g.n / 2; i < g.n; ++i) r += k[i];
            if (r < 0.0)
                for (double& v : k) v = -v;
        }
        const double kn = l2_norm(g, k);
        for (double& v : k) v /= kn;
    }
    const double s = trivial ? opts.amplitude_abs : opts.amplitude_rel * l2_norm(g, phi_star);
    const double tol_distinct = trivial ? 0.1 * s : 0.1 * s / std::max(l2_norm(g, phi_star), 1e-300);

    auto distinct = [&](const Field& phi) {
        if (trivial) return l2_norm(g, phi) > tol_distinct;
        return asymmetry_of(g, phi) > tol_distinct;
    };

    std::vector<Seed> seeds;
    for (double sign : {1.0, -1.0}) {
        Field pred(g.n);
        for (int i = 0; i < g.n; ++i) pred[i] = phi_star[i] + sign * s * k[i];
        bool ok = false;
        try {
            Tangent tau;
            tau.dphi = k;
            tau.dE = 0.0;
            const auto r = bordered_corrector(g, m, pred, ev.refined.E, tau, opts.newton);
            if (r.energy_param > 0.0 && distinct(r.phi)) {
                seeds.push_back({r.phi, r.energy_param});
                ok = true;
            }
        } catch (const Error&) {
        }
        for (double de : {opts.delta_e, -opts.delta_e}) {
            if (ok) break;
            try {
                const auto r = newton_fixed_E(g, m, pred, ev.refined.E + de, opts.newton);
                if (distinct(r.phi)) {
                    seeds.push_back({r.phi, r.energy_param});
                    ok = true;
                }
            } catch (const Error&) {
            }
        }
    }
    if (seeds.empty()) {
        fail(ErrorKind::switch_failed, "all switch candidates collapsed to the parent branch at E=" + std::to_string(ev.refined.E));
    }
    return seeds;
}

} // namespace nlsbif
