#pragma once

#include <cmath>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "bifurcation.hpp"
#include "branch.hpp"
#include "continuation.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "solver.hpp"
#include "stability.hpp"

namespace nlsbif {

struct DiagramOptions {
    ContinuationControls controls;
    EventOptions events;
    SwitchOptions switching;
    int budget = 16;
    double seed_amplitude = 1e-2;
    double slope_rel_tol = 1e-6;
};

struct ExplicitSeed {
    Seed seed;
    std::string provenance;
};

struct Diagram {
    Grid grid;
    ModelSpec model;
    double e0 = std::numeric_limits<double>::quiet_NaN();
    std::vector<Branch> branches;
    std::vector<BifurcationEvent> events;
    std::vector<std::vector<StabilitySegment>> segments;
    bool budget_exhausted = false;
    std::optional<Error> failure; // first numerical failure; artifacts up to it are kept
};

namespace detail {

inline void add_events(const Grid& g, const ModelSpec& m, Diagram& d, int branch_index, const EventOptions& eo, std::deque<int>& queue)
{
    Branch& b = d.branches[branch_index];
    for (const auto& br : detect_events(b)) {
        BifurcationEvent ev = locate_event(g, m, b, br, eo);
        ev.id = static_cast<int>(d.events.size());
        ev.branch_id = b.id;
        b.events.push_back(ev.id);
        d.events.push_back(std::move(ev));
        queue.push_back(d.events.back().id);
    }
}

inline int push_branch(Diagram& d, Branch b, const DiagramOptions& o)
{
    b.id = static_cast<int>(d.branches.size());
    d.segments.push_back(annotate_branch(b, o.slope_rel_tol));
    d.branches.push_back(std::move(b));
    return d.branches.back().id;
}

/// Trace from a seed away from an event point.
inline Branch trace_child(const Grid& g, const ModelSpec& m, const BifurcationEvent& ev, const Seed& s, const DiagramOptions& o)
{
    BranchPoint start = make_point(g, m, s.phi, s.E, o.controls.spectral);
    Tangent away;
    away.dphi.resize(g.n);
    for (int i = 0; i < g.n; ++i) away.dphi[i] = s.phi[i] - ev.refined.phi[i];
    away.dE = s.E - ev.refined.E;
    Branch b = trace_branch(g, m, std::move(start), 1, o.controls, away);
    b.parent_event = ev.id;
    return b;
}

} // namespace detail

/// Full diagram: trivial branch from between the two lowest linear levels,
/// primary branch from the normal-form seed, then every pitchfork switched and
/// its children traced, recursively, until the branch budget is used up.
/// Explicit seeds replace the trivial/primary start and are traced both ways.
inline Diagram run_diagram(const Grid& g, const ModelSpec& m, const DiagramOptions& o, const std::vector<ExplicitSeed>& explicit_seeds = {})
{
    m.validate();
    o.controls.validate();
    require(o.budget >= 1, "branch budget must be >= 1");
    Diagram d;
    d.grid = g;
    d.model = m;
    std::deque<int> queue;

    try {
        if (explicit_seeds.empty()) {
            const Field pot = potential_eval(m.potential, g);
            const auto h0 = schrodinger_operator(g, pot, 0.0);
            const auto lows = smallest_eigenvalues(h0, 2);
            if (!(lows[0] < 0.0)) {
                fail(ErrorKind::no_linear_bound_state, "-Delta+V has no negative eigenvalue (lowest " + std::to_string(lows[0]) + ")");
            }
            d.e0 = -lows[0];
            const double e_mid = lows[1] < 0.0 ? 0.5 * (-lows[0] - lows[1]) : 0.5 * d.e0;

            Branch trivial;
            BranchPoint t0 = make_point(g, m, Field(g.n, 0.0), e_mid, o.controls.spectral);
            ContinuationControls tc = o.controls;
            tc.E_max = std::min(o.controls.E_max, std::max(2.0 * d.e0, e_mid + 1.0));
            trivial = trace_branch(g, m, std::move(t0), 1, tc);
            trivial.provenance = "trivial branch phi=0 from E=" + std::to_string(e_mid);
            const int tid = detail::push_branch(d, std::move(trivial), o);
            detail::add_events(g, m, d, tid, o.events, queue);

            const auto ps = seed_primary_branch(g, m, o.seed_amplitude);
            const auto sol = newton_fixed_E(g, m, ps.phi0, ps.e_start, o.controls.newton);
            BranchPoint p0 = make_point(g, m, sol.phi, sol.energy_param, o.controls.spectral);
            const int dir = ps.e_start >= ps.e0 ? 1 : -1;
            Branch primary = trace_branch(g, m, std::move(p0), dir, o.controls);
            primary.provenance = "primary branch from the trivial-branch pitchfork";
            for (auto& ev : d.events) {
                if (ev.kind == EventKind::trivial_branch_pitchfork && ev.crossing_index == 0 && primary.parent_event < 0) {
                    primary.parent_event = ev.id;
                }
            }
            const int pid = detail::push_branch(d, std::move(primary), o);
            if (d.branches[pid].parent_event >= 0) {
                auto& ev = d.events[d.branches[pid].parent_event];
                ev.child_branches.push_back(pid);
                try {
                    ev.seeds = switch_branch(g, m, ev, o.switching);
                } catch (const Error&) {
                }
            }
            detail::add_events(g, m, d, pid, o.events, queue);
        } else {
            for (const auto& es : explicit_seeds) {
                if (static_cast<int>(d.branches.size()) >= o.budget) {
                    d.budget_exhausted = true;
                    break;
                }
                const auto sol = newton_fixed_E(g, m, es.seed.phi, es.seed.E, o.controls.newton);
                BranchPoint p0 = make_point(g, m, sol.phi, sol.energy_param, o.controls.spectral);
                Branch fwd = trace_branch(g, m, p0, 1, o.controls);
                Branch bwd = trace_branch(g, m, std::move(p0), -1, o.controls);
                Branch b = merge_two_way(bwd, fwd);
                b.provenance = es.provenance;
                const int id = detail::push_branch(d, std::move(b), o);
                detail::add_events(g, m, d, id, o.events, queue);
            }
        }

        while (!queue.empty()) {
            const int eid = queue.front();
            queue.pop_front();
            if (d.events[eid].kind != EventKind::pitchfork_symmetry_breaking) continue;
            d.events[eid].seeds = switch_branch(g, m, d.events[eid], o.switching);
            const auto seeds = d.events[eid].seeds;
            for (const auto& s : seeds) {
                if (static_cast<int>(d.branches.size()) >= o.budget) {
                    d.budget_exhausted = true;
                    break;
                }
                Branch child = detail::trace_child(g, m, d.events[eid], s, o);
                child.provenance = "switched at event " + std::to_string(eid);
                const int cid = detail::push_branch(d, std::move(child), o);
                d.events[eid].child_branches.push_back(cid);
                detail::add_events(g, m, d, cid, o.events, queue);
            }
        }
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::invalid_argument || e.kind() == ErrorKind::no_linear_bound_state) throw;
        d.failure = e;
    }
    return d;
}

} // namespace nlsbif
