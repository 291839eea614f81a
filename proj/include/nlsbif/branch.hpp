#pragma once

#include <string>
#include <vector>

#include "grid.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace nlsbif {

enum class Stability { stable, unstable, indeterminate };

enum class StabilityReason {
    none,
    morse_zero,          // n = 0
    one_slope_positive,  // n = 1 & slope > 0
    one_slope_negative,  // n = 1 & slope < 0
    morse_two_or_more,   // n >= 2
    kernel_degenerate,
    slope_flat,          // |slope| within tolerance of 0
};

inline const char* to_string(Stability s)
{
    switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

inline Stability stability_from_string(const std::string& s)
{
    if (s == "stable") return Stability::stable;
    if (s == "unstable") return Stability::unstable;
    return Stability::indeterminate;
}

inline const char* to_string(StabilityReason r)
{
    switch (r) {
    case StabilityReason::none: return "none";
    case StabilityReason::morse_zero: return "n=0";
    case StabilityReason::one_slope_positive: return "n=1 & slope>0";
    case StabilityReason::one_slope_negative: return "n=1 & slope<0";
    case StabilityReason::morse_two_or_more: return "n>=2";
    case StabilityReason::kernel_degenerate: return "kernel degenerate";
    case StabilityReason::slope_flat: return "slope within tolerance of 0";
    }
    return "none";
}

struct StabilityTag {
    Stability value = Stability::indeterminate;
    StabilityReason reason = StabilityReason::none;
};

/// A converged solution of F(phi, E) = 0 with its monitor data.
struct BranchPoint {
    Field phi;
    double E = 0.0;
    Functionals functionals;
    SpectralSummary spectral;
    double slope_dQdE = 0.0;      // adjoint formula (phi, w), L+ w = -phi; finite difference near events
    double slope_fd = 0.0;        // centered difference along the branch
    bool slope_from_adjoint = true;
    double pohozaev = 0.0;
    double asymmetry = 0.0;
    double residual_norm = 0.0;
    double arclength = 0.0;
    int corrector_iterations = 0;
    StabilityTag stability;

    double Q() const { return functionals.charge; }
};

enum class Termination {
    none,
    e_max_reached,
    e_min_reached,
    norm_max_reached,
    loop_closed,
    step_underflow,
    point_budget,
};

inline const char* to_string(Termination t)
{
    switch (t) {
    case Termination::none: return "none";
    case Termination::e_max_reached: return "E_max reached";
    case Termination::e_min_reached: return "E_min reached";
    case Termination::norm_max_reached: return "norm_max reached";
    case Termination::loop_closed: return "loop closed";
    case Termination::step_underflow: return "step underflow";
    case Termination::point_budget: return "point budget";
    }
    return "none";
}

enum class EventKind { fold, pitchfork_symmetry_breaking, trivial_branch_pitchfork, unresolved };

inline const char* to_string(EventKind k)
{
    switch (k) {
    case EventKind::fold: return "fold";
    case EventKind::pitchfork_symmetry_breaking: return "pitchfork_symmetry_breaking";
    case EventKind::trivial_branch_pitchfork: return "trivial_branch_pitchfork";
    case EventKind::unresolved: return "unresolved";
    }
    return "unresolved";
}

enum class CrossingOperator { l_plus, l_minus, none };

inline const char* to_string(CrossingOperator c)
{
    switch (c) {
    case CrossingOperator::l_plus: return "L_plus";
    case CrossingOperator::l_minus: return "L_minus";
    case CrossingOperator::none: return "none";
    }
    return "none";
}

struct Seed {
    Field phi;
    double E = 0.0;
};

struct BifurcationEvent {
    int id = -1;
    int branch_id = -1;
    int index_lo = 0; // bracketing point indices on the parent branch
    int index_hi = 0;
    double arclength_lo = 0.0;
    double arclength_hi = 0.0;
    BranchPoint refined;
    CrossingOperator crossing = CrossingOperator::none;
    int crossing_index = -1;   // which eigenvalue (0-based) changes sign
    double crossing_eigenvalue = 0.0;
    double neighbor_gap = 0.0; // min |lambda| over the other computed eigenvalues of the crossing operator
    Parity kernel_parity = Parity::none;
    Field kernel_vector;
    EventKind kind = EventKind::unresolved;
    bool tangent_flip = false;
    std::vector<Seed> seeds;
    std::vector<int> child_branches;
    std::string note;
};

struct Branch {
    int id = -1;
    std::string provenance; // how the start point was obtained
    int parent_event = -1;
    int direction = 1;
    std::vector<BranchPoint> points;
    std::vector<int> events; // ids into the diagram's event list
    Termination termination = Termination::none;
    Termination termination_reverse = Termination::none; // for branches traced both ways from a regular seed
};

} // namespace nlsbif
