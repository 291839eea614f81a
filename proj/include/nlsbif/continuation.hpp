#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "branch.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "solver.hpp"
#include "spectral.hpp"

namespace nlsbif {

struct ContinuationControls {
    double ds_init = 0.02;
    double ds_min = 1e-5;
    double ds_max = 1.0;
    double E_min = 1e-3;
    double E_max = 200.0;
    double norm_max = 1e6; // H1 norm of phi
    int max_points = 20000;
    double loop_tol = 1e-6;
    NewtonOpts newton{1e-10, 25, 1.0};
    SpectralOptions spectral;

    void validate() const
    {
        require(ds_min > 0.0 && ds_init >= ds_min && ds_max >= ds_init, "need 0 < ds_min <= ds_init <= ds_max");
        require(E_min > 0.0 && E_max > E_min, "need E_max > E_min > 0");
        require(norm_max > 0.0, "norm_max must be > 0");
        require(max_points >= 2, "max_points must be >= 2");
        newton.validate();
    }
};

inline double asymmetry_of(const Grid& g, const Field& phi)
{
    const double n = l2_norm(g, phi);
    if (n == 0.0) return 0.0;
    const auto m = mirror(phi);
    Field d(phi.size());
    for (std::size_t i = 0; i < phi.size(); ++i) d[i] = phi[i] - m[i];
    return l2_norm(g, d) / n;
}

inline bool is_zero_field(const Field& phi)
{
    return std::all_of(phi.begin(), phi.end(), [](double v) { return v == 0.0; });
}

/// Fill every monitor of a converged solution except the stability tag and
/// the along-branch slope.
inline BranchPoint make_point(const Grid& g, const ModelSpec& m, Field phi, double energy_param, const SpectralOptions& sopts = {})
{
    const Field pot = potential_eval(m.potential, g);
    BranchPoint p;
    p.E = energy_param;
    p.residual_norm = sup_norm(residual(g, m, phi, energy_param, pot));
    p.functionals = energy(g, m, phi, pot);
    p.pohozaev = pohozaev_residual(g, m, phi, energy_param);
    const bool trivial = is_zero_field(phi);
    p.asymmetry = trivial ? 0.0 : asymmetry_of(g, phi);
    const auto lin = linearization(g, m, phi, energy_param, pot);
    SpectralOptions so = sopts;
    so.translation_invariant = so.translation_invariant || m.potential.kind == PotentialKind::zero || m.potential.depth == 0.0;
    p.spectral = summarize(g, lin.plus, lin.minus, !trivial, so);
    if (trivial) {
        p.slope_dQdE = 0.0;
    } else {
        double nearest = std::numeric_limits<double>::infinity();
        for (double l : p.spectral.lambdas_plus) nearest = std::min(nearest, std::abs(l));
        if (nearest > p.spectral.kernel_tol || p.spectral.symmetry_vector_plus) {
            Field rhs(phi);
            for (double& v : rhs) v = -v;
            Field w = solve(lin.plus, rhs);
            if (p.spectral.symmetry_vector_plus) {
                // phi is orthogonal to the translation mode; drop the rounding-driven component along it.
                const Field& k = *p.spectral.symmetry_vector_plus;
                const double c = inner_product(g, w, k) / inner_product(g, k, k);
                for (int i = 0; i < g.n; ++i) w[i] -= c * k[i];
            }
            p.slope_dQdE = inner_product(g, phi, w);
        } else {
            p.slope_dQdE = std::numeric_limits<double>::quiet_NaN();
            p.slope_from_adjoint = false;
        }
    }
    p.phi = std::move(phi);
    return p;
}

/// Tangent at a regular point: dphi/dE = w with L+ w = -phi, oriented by
/// `direction` along increasing (+1) or decreasing (-1) E.
inline Tangent initial_tangent(const Grid& g, const ModelSpec& m, const BranchPoint& p, int direction)
{
    require(direction == 1 || direction == -1, "direction must be +1 or -1");
    Tangent t;
    t.dE = 1.0;
    if (is_zero_field(p.phi)) {
        t.dphi.assign(g.n, 0.0);
    } else {
        const auto lin = linearization(g, m, p.phi, p.E);
        Field rhs(p.phi);
        for (double& v : rhs) v = -v;
        const auto lu = factor_shifted(lin.plus);
        t.dphi = lu.solve(rhs);
        if (detail::translation_invariant(m)) detail::deflate_translation(g, p.phi, t.dphi);
        const double dn = sup_norm(t.dphi);
        if (!std::isfinite(dn) || dn > detail::kSingularRatio * std::max(1.0, sup_norm(p.phi))) {
            fail(ErrorKind::near_bifurcation, "L+ singular at the start point; pass an explicit tangent");
        }
    }
    for (double& v : t.dphi) v *= direction;
    t.dE *= direction;
    return normalized(g, t);
}

/// Normalized secant from prev to cur in the extended inner product.
inline Tangent tangent(const Grid& g, const BranchPoint& prev, const BranchPoint& cur)
{
    Tangent t;
    t.dphi.resize(g.n);
    for (int i = 0; i < g.n; ++i) t.dphi[i] = cur.phi[i] - prev.phi[i];
    t.dE = cur.E - prev.E;
    const double n = extended_norm(g, t.dphi, t.dE);
    if (!(n > 0.0)) {
        fail(ErrorKind::invalid_argument, "tangent: coincident points");
    }
    return normalized(g, t);
}

inline double extended_distance(const Grid& g, const BranchPoint& a, const BranchPoint& b)
{
    double acc = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double d = a.phi[i] - b.phi[i];
        acc += d * d;
    }
    const double de = a.E - b.E;
    return std::sqrt(acc * g.h + de * de);
}

struct StepOutcome {
    bool success = false;
    int iterations = 0;
};

/// Step-size control: grow by 1.3 after <= 3 corrector iterations, halve after
/// a failure or > 8 iterations, clamp to [ds_min, ds_max]. Halving a failed
/// step below ds_min is a step underflow.
inline double adapt_step(double ds, const StepOutcome& last, const ContinuationControls& c)
{
    double next = ds;
    if (!last.success) {
        next = ds * 0.5;
        if (next < c.ds_min) {
            fail(ErrorKind::step_underflow, "step size " + std::to_string(next) + " below ds_min " + std::to_string(c.ds_min));
        }
        return next;
    }
    if (last.iterations <= 3) {
        next = ds * 1.3;
    } else if (last.iterations > 8) {
        next = ds * 0.5;
    }
    return std::clamp(next, c.ds_min, c.ds_max);
}

namespace detail {

inline double h1_of(const Grid& g, const Field& phi)
{
    return h1_norm(g, phi);
}

/// Solve on the hyperplane E = target, starting from a linear blend of a and b.
inline NewtonResult land_at(const Grid& g, const ModelSpec& m, const BranchPoint& a, const NewtonResult& b, double target,
                            const NewtonOpts& opts)
{
    const double t = (target - a.E) / (b.energy_param - a.E);
    Field pred(g.n);
    for (int i = 0; i < g.n; ++i) pred[i] = a.phi[i] + t * (b.phi[i] - a.phi[i]);
    Tangent tau;
    tau.dphi.assign(g.n, 0.0);
    tau.dE = 1.0;
    return bordered_corrector(g, m, pred, target, tau, opts);
}

} // namespace detail

/// Fill slope_fd (centered differences in E along the branch) and use it for
/// slope_dQdE wherever the adjoint formula was unavailable.
inline void finalize_slopes(Branch& b)
{
    auto& pts = b.points;
    const int n = static_cast<int>(pts.size());
    for (int i = 0; i < n; ++i) {
        const int lo = std::max(0, i - 1);
        const int hi = std::min(n - 1, i + 1);
        if (hi == lo) {
            pts[i].slope_fd = pts[i].slope_dQdE;
        } else {
            const double de = pts[hi].E - pts[lo].E;
            pts[i].slope_fd = de != 0.0 ? (pts[hi].Q() - pts[lo].Q()) / de : std::numeric_limits<double>::quiet_NaN();
        }
        if (!pts[i].slope_from_adjoint || !std::isfinite(pts[i].slope_dQdE)) {
            pts[i].slope_dQdE = pts[i].slope_fd;
        }
    }
}

/// Pseudo-arclength continuation from a converged start point: secant
/// predictor, bordered corrector, adaptive steps. The first predictor uses
/// `first_tangent` when given, else the regular-point tangent oriented by
/// `direction`.
inline Branch trace_branch(const Grid& g, const ModelSpec& m, BranchPoint start, int direction, const ContinuationControls& c,
                           std::optional<Tangent> first_tangent = std::nullopt)
{
    c.validate();
    require(start.E > 0.0, "trace_branch: start point must have E > 0");
    Branch br;
    br.direction = direction;
    Tangent tau = first_tangent ? normalized(g, *first_tangent) : initial_tangent(g, m, start, direction);
    start.arclength = 0.0;
    br.points.push_back(std::move(start));

    double ds = c.ds_init;
    std::vector<Tangent> point_tangents{tau};

    while (true) {
        if (static_cast<int>(br.points.size()) >= c.max_points) {
            br.termination = Termination::point_budget;
            break;
        }
        const BranchPoint& cur = br.points.back();
        Field pred(g.n);
        for (int i = 0; i < g.n; ++i) pred[i] = cur.phi[i] + ds * tau.dphi[i];
        const double e_pred = cur.E + ds * tau.dE;

        StepOutcome outcome;
        NewtonResult sol;
        try {
            sol = bordered_corrector(g, m, pred, e_pred, tau, c.newton);
            outcome.success = true;
            outcome.iterations = sol.iterations;
            // Reject jumps: the correction must stay comparable to the step
            // and the new point must lie ahead along the tangent.
            double corr = 0.0, ahead = 0.0;
            for (int i = 0; i < g.n; ++i) {
                const double d = sol.phi[i] - pred[i];
                corr += d * d;
                ahead += (sol.phi[i] - cur.phi[i]) * tau.dphi[i];
            }
            corr = std::sqrt(corr * g.h + (sol.energy_param - e_pred) * (sol.energy_param - e_pred));
            ahead = ahead * g.h + (sol.energy_param - cur.E) * tau.dE;
            if (corr > ds || ahead <= 0.0 || !(sol.energy_param > 0.0)) {
                outcome.success = false;
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::no_convergence && e.kind() != ErrorKind::numerical_failure) {
                throw Error(e.kind(), std::string(e.what()) + " (at arclength " + std::to_string(cur.arclength) + ")");
            }
            outcome.success = false;
        }

        if (!outcome.success) {
            try {
                ds = adapt_step(ds, outcome, c);
            } catch (const Error&) {
                if (br.points.size() == 1) {
                    fail(ErrorKind::stalled, "step underflow before any progress at E=" + std::to_string(cur.E));
                }
                br.termination = Termination::step_underflow;
                break;
            }
            continue;
        }

        Termination stop = Termination::none;
        if (sol.energy_param > c.E_max || sol.energy_param < c.E_min) {
            const double target = sol.energy_param > c.E_max ? c.E_max : c.E_min;
            try {
                sol = detail::land_at(g, m, cur, sol, target, c.newton);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::no_convergence && e.kind() != ErrorKind::numerical_failure) throw;
                // Could not land exactly; keep the overshooting point.
            }
            stop = target == c.E_max ? Termination::e_max_reached : Termination::e_min_reached;
        }

        BranchPoint next = make_point(g, m, std::move(sol.phi), sol.energy_param, c.spectral);
        next.corrector_iterations = sol.iterations;
        const double step_len = extended_distance(g, cur, next);
        next.arclength = cur.arclength + step_len;
        Tangent secant = tangent(g, cur, next);
        br.points.push_back(std::move(next));
        const BranchPoint& added = br.points.back();

        if (stop != Termination::none) {
            br.termination = stop;
            break;
        }
        if (h1_norm(g, added.phi) > c.norm_max) {
            br.termination = Termination::norm_max_reached;
            break;
        }
        // Loop closure: back within loop_tol of an earlier point, same heading.
        bool closed = false;
        const int np = static_cast<int>(br.points.size());
        for (int j = 0; j + 3 < np - 1 && !closed; ++j) {
            const BranchPoint& old = br.points[j];
            if (std::abs(old.E - added.E) > c.loop_tol) continue;
            if (extended_distance(g, old, added) <= c.loop_tol && extended_dot(g, point_tangents[j], secant) > 0.0) {
                closed = true;
            }
        }
        if (closed) {
            br.termination = Termination::loop_closed;
            break;
        }
        point_tangents.push_back(secant);
        tau = std::move(secant);
        ds = adapt_step(ds, outcome, c);
    }
    finalize_slopes(br);
    return br;
}

/// Join a backward trace (reversed) and a forward trace sharing the same start.
inline Branch merge_two_way(const Branch& backward, const Branch& forward)
{
    Branch out = forward;
    out.points.clear();
    for (auto it = backward.points.rbegin(); it != backward.points.rend(); ++it) out.points.push_back(*it);
    const double offset = out.points.empty() ? 0.0 : out.points.front().arclength;
    for (auto& p : out.points) p.arclength = offset - p.arclength;
    // forward.points[0] duplicates the shared start.
    for (std::size_t i = 1; i < forward.points.size(); ++i) out.points.push_back(forward.points[i]);
    const double base = out.points.empty() ? 0.0 : out.points.front().arclength;
    for (auto& p : out.points) p.arclength -= base;
    out.termination = forward.termination;
    out.termination_reverse = backward.termination;
    finalize_slopes(out);
    return out;
}

/// Solve at exactly E = target, starting from the nearest branch point whose
/// neighbor brackets the target. Walks in E from there if the gap is large.
inline BranchPoint point_at_E(const Grid& g, const ModelSpec& m, const Branch& b, double target, const ContinuationControls& c)
{
    require(!b.points.empty(), "point_at_E: empty branch");
    int best = 0;
    for (int i = 1; i < static_cast<int>(b.points.size()); ++i) {
        if (std::abs(b.points[i].E - target) < std::abs(b.points[best].E - target)) best = i;
    }
    Field phi = b.points[best].phi;
    double e = b.points[best].E;
    const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(std::log(target / e)) / 0.05)));
    for (int s = 1; s <= steps; ++s) {
        const double es = e * std::pow(target / e, static_cast<double>(s) / steps);
        phi = newton_fixed_E(g, m, phi, es, c.newton).phi;
    }
    return make_point(g, m, std::move(phi), target, c.spectral);
}

} // namespace nlsbif
