#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "spectral.hpp"
#include "tridiag.hpp"

namespace nlsbif {

struct NewtonOpts {
    double tol_residual = 1e-10; // sup norm of F
    int max_iter = 50;
    double damping = 1.0; // initial step factor, halved while the residual grows

    void validate() const
    {
        require(tol_residual > 0.0, "tol_residual must be > 0");
        require(max_iter >= 1, "max_iter must be >= 1");
        require(damping > 0.0 && damping <= 1.0, "damping must lie in (0, 1]");
    }
};

struct NewtonResult {
    Field phi;
    double energy_param = 0.0;
    int iterations = 0;
    std::vector<double> residual_history; // sup norm of F before each step, plus the final one
};

namespace detail {

inline std::string history_string(const std::vector<double>& h)
{
    std::ostringstream os;
    os.precision(3);
    for (std::size_t i = 0; i < h.size(); ++i) os << (i ? "," : "") << h[i];
    return os.str();
}

// A Newton step whose size exceeds the residual by this factor means the
// Jacobian is numerically singular.
constexpr double kSingularRatio = 1e10;

/// Size of F attainable in double precision: the stencil carries 4/h^2, so on
/// fine grids the rounding of F alone exceeds a small absolute tolerance.
inline double residual_floor(const Grid& g, const ModelSpec& m, const Field& phi, double energy_param, const Field& pot)
{
    double amp = 0.0, vmax = 0.0;
    for (double v : phi) amp = std::max(amp, std::abs(v));
    for (double v : pot) vmax = std::max(vmax, std::abs(v));
    const double scale = 4.0 / (g.h * g.h) + vmax + std::abs(energy_param) + std::abs(m.gamma) * pow_abs(amp, m.power);
    return 64.0 * std::numeric_limits<double>::epsilon() * scale * amp;
}

inline double effective_tol(const NewtonOpts& o, const Grid& g, const ModelSpec& m, const Field& phi, double e, const Field& pot)
{
    return std::max(o.tol_residual, residual_floor(g, m, phi, e, pot));
}

inline bool translation_invariant(const ModelSpec& m)
{
    return m.potential.kind == PotentialKind::zero || m.potential.depth == 0.0;
}

/// With constant V, L+ is singular along phi' up to exponentially small
/// boundary effects; remove that direction from an update so rounding is not
/// amplified into a drift along the translation orbit. For an even iterate the
/// translation mode is odd and the update is simply symmetrized.
inline void deflate_translation(const Grid& g, const Field& phi, Field& dx)
{
    double nrm = 0.0, odd = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double a = phi[i] - phi[g.n - 1 - i];
        nrm += phi[i] * phi[i];
        odd += a * a;
    }
    if (odd <= 1e-16 * nrm) {
        dx = even_part(dx);
        return;
    }
    Field d(g.n);
    for (int i = 0; i < g.n; ++i) {
        const double l = i > 0 ? phi[i - 1] : 0.0;
        const double r = i + 1 < g.n ? phi[i + 1] : 0.0;
        d[i] = (r - l) / (2.0 * g.h);
    }
    const double dd = inner_product(g, d, d);
    if (!(dd > 0.0)) return;
    const double c = inner_product(g, dx, d) / dd;
    for (int i = 0; i < g.n; ++i) dx[i] -= c * d[i];
}

} // namespace detail

/// Newton iteration for F(phi, E) = 0 at fixed E > 0. The Jacobian on the real
/// slice is exactly L+, inverted by pivoted tridiagonal elimination.
inline NewtonResult newton_fixed_E(const Grid& g, const ModelSpec& m, const Field& phi0, double energy_param, const NewtonOpts& opts = {})
{
    opts.validate();
    if (!(energy_param > 0.0)) {
        fail(ErrorKind::outside_fredholm_domain,
             "E=" + std::to_string(energy_param) + " <= 0: zero lies in the essential spectrum of the linearization");
    }
    detail::check_len(g, phi0.size(), "newton_fixed_E");
    for (double v : phi0) {
        require(std::isfinite(v), "newton_fixed_E: initial profile not finite");
    }
    const Field pot = potential_eval(m.potential, g);
    NewtonResult r;
    r.phi = phi0;
    r.energy_param = energy_param;
    Field f = residual(g, m, r.phi, energy_param, pot);
    double fn = sup_norm(f);
    r.residual_history.push_back(fn);
    for (int it = 0; it < opts.max_iter; ++it) {
        if (fn <= detail::effective_tol(opts, g, m, r.phi, energy_param, pot)) return r;
        const auto lin = linearization(g, m, r.phi, energy_param, pot);
        auto delta = solve(lin.plus, f);
        if (detail::translation_invariant(m)) detail::deflate_translation(g, r.phi, delta);
        const double dn = sup_norm(delta);
        if (!std::isfinite(dn) || dn > detail::kSingularRatio * std::max(fn, 1e-300)) {
            fail(ErrorKind::near_bifurcation, "L+ singular at E=" + std::to_string(energy_param) + "; use the bordered solver");
        }
        double step = opts.damping;
        Field trial(g.n);
        double tn = 0.0;
        for (int halving = 0; halving < 30; ++halving) {
            for (int i = 0; i < g.n; ++i) trial[i] = r.phi[i] - step * delta[i];
            f = residual(g, m, trial, energy_param, pot);
            tn = sup_norm(f);
            if (std::isfinite(tn) && tn < fn) break;
            step *= 0.5;
        }
        r.phi = trial;
        fn = tn;
        r.iterations = it + 1;
        r.residual_history.push_back(fn);
        if (!std::isfinite(fn)) break;
    }
    if (fn <= detail::effective_tol(opts, g, m, r.phi, energy_param, pot)) return r;
    fail(ErrorKind::no_convergence, "fixed-E Newton at E=" + std::to_string(energy_param) +
                                        " did not converge; residual history [" + detail::history_string(r.residual_history) + "]");
}

/// Unit tangent in the extended space: grid inner product on phi plus the
/// plain product on E.
struct Tangent {
    Field dphi;
    double dE = 0.0;
};

inline double extended_norm(const Grid& g, const Field& dphi, double dE)
{
    const double n = l2_norm(g, dphi);
    return std::sqrt(n * n + dE * dE);
}

inline double extended_dot(const Grid& g, const Tangent& a, const Tangent& b)
{
    return inner_product(g, a.dphi, b.dphi) + a.dE * b.dE;
}

inline Tangent normalized(const Grid& g, Tangent t)
{
    const double n = extended_norm(g, t.dphi, t.dE);
    require(n > 0.0 && std::isfinite(n), "cannot normalize a zero tangent");
    for (double& v : t.dphi) v /= n;
    t.dE /= n;
    return t;
}

/// Newton on the bordered system
///   F(phi, E) = 0,  (tau_phi, phi - phi_pred) + tau_E (E - E_pred) = 0.
/// The (N+1)x(N+1) Jacobian [L+ phi; tau_phi^T h, tau_E] is solved by block
/// elimination with two tridiagonal solves plus one step of refinement.
inline NewtonResult bordered_corrector(const Grid& g, const ModelSpec& m, const Field& phi_pred, double e_pred, const Tangent& tau,
                                       const NewtonOpts& opts = {})
{
    opts.validate();
    detail::check_len(g, phi_pred.size(), "bordered_corrector");
    detail::check_len(g, tau.dphi.size(), "bordered_corrector");
    const Field pot = potential_eval(m.potential, g);

    NewtonResult r;
    r.phi = phi_pred;
    r.energy_param = e_pred;

    auto constraint = [&](const Field& phi, double e) {
        double c = 0.0;
        for (int i = 0; i < g.n; ++i) c += tau.dphi[i] * (phi[i] - phi_pred[i]);
        return c * g.h + tau.dE * (e - e_pred);
    };
    auto merit = [&](const Field& f, double c) { return std::max(sup_norm(f), std::abs(c)); };

    Field f = residual(g, m, r.phi, r.energy_param, pot);
    double c = constraint(r.phi, r.energy_param);
    double fn = merit(f, c);
    r.residual_history.push_back(fn);

    for (int it = 0; it < opts.max_iter; ++it) {
        if (fn <= detail::effective_tol(opts, g, m, r.phi, r.energy_param, pot)) return r;
        const auto lin = linearization(g, m, r.phi, r.energy_param, pot);
        const auto lu = factor_shifted(lin.plus);
        const SymTridiag& jac = lin.plus;

        // Solve [J b; t^T d] [x; y] = [f; c] with b = phi (dF/dE), t = h tau_phi, d = tau_E.
        auto bordered_solve = [&](const Field& rf, double rc, Field& x, double& y) {
            Field a = lu.solve(rf);
            Field bsol = lu.solve(r.phi);
            const double ta = inner_product(g, tau.dphi, a);
            const double tb = inner_product(g, tau.dphi, bsol);
            const double denom = tau.dE - tb;
            if (!std::isfinite(denom) || denom == 0.0) {
                fail(ErrorKind::numerical_failure, "bordered system singular");
            }
            y = (rc - ta) / denom;
            x.resize(g.n);
            for (int i = 0; i < g.n; ++i) x[i] = a[i] - y * bsol[i];
        };

        Field dx;
        double dy = 0.0;
        bordered_solve(f, c, dx, dy);
        // One step of iterative refinement against the exact bordered operator.
        {
            Field jx = jac.apply(dx);
            Field rf(g.n);
            for (int i = 0; i < g.n; ++i) rf[i] = f[i] - (jx[i] + r.phi[i] * dy);
            const double rc = c - (inner_product(g, tau.dphi, dx) + tau.dE * dy);
            Field ex;
            double ey = 0.0;
            bordered_solve(rf, rc, ex, ey);
            for (int i = 0; i < g.n; ++i) dx[i] += ex[i];
            dy += ey;
        }
        if (detail::translation_invariant(m)) detail::deflate_translation(g, r.phi, dx);
        const double dn = std::max(sup_norm(dx), std::abs(dy));
        if (!std::isfinite(dn)) {
            fail(ErrorKind::numerical_failure, "bordered Newton step not finite");
        }

        double step = opts.damping;
        Field trial(g.n);
        double te = 0.0, tn = 0.0;
        Field tf;
        double tc = 0.0;
        for (int halving = 0; halving < 20; ++halving) {
            for (int i = 0; i < g.n; ++i) trial[i] = r.phi[i] - step * dx[i];
            te = r.energy_param - step * dy;
            tf = residual(g, m, trial, te, pot);
            tc = constraint(trial, te);
            tn = merit(tf, tc);
            if (std::isfinite(tn) && tn < fn) break;
            step *= 0.5;
        }
        r.phi = trial;
        r.energy_param = te;
        f = std::move(tf);
        c = tc;
        fn = tn;
        r.iterations = it + 1;
        r.residual_history.push_back(fn);
        if (!std::isfinite(fn)) break;
    }
    if (fn <= detail::effective_tol(opts, g, m, r.phi, r.energy_param, pot)) return r;
    fail(ErrorKind::no_convergence, "bordered corrector did not converge; residual history [" +
                                        detail::history_string(r.residual_history) + "]");
}

struct PrimarySeed {
    Field phi0;
    double e_start = 0.0;
    double e0 = 0.0;          // -E0 is the lowest eigenvalue of -Delta_h + V
    Field ground_vector;      // unit, positive
    double normal_form_c = 0.0;
};

/// Lowest eigenpair of -Delta_h + V; (SA) requires it to be negative.
inline EigenPair linear_ground_state(const Grid& g, const ModelSpec& m)
{
    const Field pot = potential_eval(m.potential, g);
    const auto h0 = schrodinger_operator(g, pot, 0.0);
    auto pairs = smallest_eigenpairs(h0, 1, g.h);
    auto& v = pairs[0].vector;
    double s = 0.0;
    for (double x : v) s += x;
    if (s < 0.0) {
        for (double& x : v) x = -x;
    }
    return pairs[0];
}

/// Seed for the branch bifurcating from (0, E0):
///   phi0 = s v0,  E_start = E0 - sign(gamma) c s^p,
///   c = |gamma| (v0, |v0|^p v0) / (v0, v0).
inline PrimarySeed seed_primary_branch(const Grid& g, const ModelSpec& m, double amplitude = 1e-2)
{
    m.validate();
    require(amplitude > 0.0, "seed amplitude must be > 0");
    const auto ground = linear_ground_state(g, m);
    if (!(ground.value < 0.0)) {
        fail(ErrorKind::no_linear_bound_state,
             "-Delta+V has no negative eigenvalue (lowest " + std::to_string(ground.value) + ")");
    }
    PrimarySeed seed;
    seed.e0 = -ground.value;
    seed.ground_vector = ground.vector;
    const Field& v = seed.ground_vector;
    double num = 0.0, den = 0.0;
    for (int i = 0; i < g.n; ++i) {
        num += detail::pow_abs(v[i], m.power) * v[i] * v[i];
        den += v[i] * v[i];
    }
    seed.normal_form_c = std::abs(m.gamma) * num / den;
    const double sign = m.gamma > 0.0 ? 1.0 : (m.gamma < 0.0 ? -1.0 : 0.0);
    seed.e_start = seed.e0 - sign * seed.normal_form_c * std::pow(amplitude, m.power);
    seed.phi0.resize(g.n);
    for (int i = 0; i < g.n; ++i) seed.phi0[i] = amplitude * v[i];
    return seed;
}

} // namespace nlsbif
