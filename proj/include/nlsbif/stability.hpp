#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "branch.hpp"

namespace nlsbif {

/// slope_tol = rel * max(1, Q).
inline double default_slope_tol(const BranchPoint& p, double rel = 1e-6)
{
    return rel * std::max(1.0, p.Q());
}

/// Decision table with n = morse_plus + morse_minus. A kernel of L+ (L-'s
/// gauge kernel is excluded by the counting threshold) makes the point
/// indeterminate unless n >= 2 already decides it.
inline StabilityTag classify_gss(const BranchPoint& p, double slope_tol)
{
    const int n = p.spectral.morse_total();
    if (n >= 2) return {Stability::unstable, StabilityReason::morse_two_or_more};
    if (p.spectral.kernel_vector_plus) return {Stability::indeterminate, StabilityReason::kernel_degenerate};
    if (n == 0) return {Stability::stable, StabilityReason::morse_zero};
    const double s = p.slope_dQdE;
    if (!std::isfinite(s) || std::abs(s) <= slope_tol) return {Stability::indeterminate, StabilityReason::slope_flat};
    if (s > 0.0) return {Stability::stable, StabilityReason::one_slope_positive};
    return {Stability::unstable, StabilityReason::one_slope_negative};
}

inline StabilityTag classify_gss(const BranchPoint& p)
{
    return classify_gss(p, default_slope_tol(p));
}

struct StabilitySegment {
    int index_lo = 0;
    int index_hi = 0;
    double E_lo = 0.0;
    double E_hi = 0.0;
    StabilityTag tag;
    int morse_plus = 0;
    int morse_minus = 0;
};

/// Tag every point (slope_tol relative to each point's Q) and collapse runs of
/// equal (tag, Morse pair) into segments.
inline std::vector<StabilitySegment> annotate_branch(Branch& b, double slope_rel_tol = 1e-6)
{
    std::vector<StabilitySegment> segs;
    for (int i = 0; i < static_cast<int>(b.points.size()); ++i) {
        auto& p = b.points[i];
        p.stability = classify_gss(p, default_slope_tol(p, slope_rel_tol));
        const bool same = !segs.empty() && segs.back().tag.value == p.stability.value && segs.back().tag.reason == p.stability.reason &&
                          segs.back().morse_plus == p.spectral.morse_plus && segs.back().morse_minus == p.spectral.morse_minus;
        if (same) {
            segs.back().index_hi = i;
            segs.back().E_hi = p.E;
        } else {
            segs.push_back({i, i, p.E, p.E, p.stability, p.spectral.morse_plus, p.spectral.morse_minus});
        }
    }
    return segs;
}

} // namespace nlsbif
