#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "continuation.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "tridiag.hpp"

namespace nlsbif {

struct FlowOpts {
    double dt = 1e-2;
    double dt_max = 10.0; // dt grows by 1.1 after each accepted step, up to dt_max
    double grad_tol = 1e-8;
    long max_steps = 1000000;

    void validate() const
    {
        require(dt > 0.0 && dt_max >= dt, "FlowOpts: need 0 < dt <= dt_max");
        require(grad_tol > 0.0, "FlowOpts: grad_tol must be > 0");
        require(max_steps >= 1, "FlowOpts: max_steps must be >= 1");
    }
};

struct FlowResult {
    Field phi;
    double E = 0.0;
    double energy = 0.0;
    double residual = 0.0; // sup norm of F(phi, E)
    long iterations = 0;
    int dt_halvings = 0;
    std::vector<double> energy_history; // energy after each accepted step
};

/// ||phi - mirror(phi)|| / ||phi||, in [0, 2].
inline double asymmetry(const Grid& g, const Field& phi)
{
    require(!is_zero_field(phi), "asymmetry of the zero field");
    return asymmetry_of(g, phi);
}

namespace detail {

inline void normalize_to_charge(const Grid& g, Field& phi, double mu)
{
    const double q = charge(g, phi);
    const double c = std::sqrt(mu / q);
    for (double& v : phi) v *= c;
}

} // namespace detail

/// Normalized gradient flow on the sphere Q = mu, backward Euler in the
/// linear part with the nonlinear potential frozen over each step:
///   (I + dt (H_phi - lb)) phi~ = phi,  phi <- phi~ rescaled to Q = mu.
/// Stationary states are exact fixed points. Steps that raise the energy
/// are rejected and dt is halved.
inline FlowResult minimize_at_charge(const Grid& g, const ModelSpec& m, double mu, const Field& init, const FlowOpts& opts = {})
{
    m.validate();
    opts.validate();
    require(mu > 0.0, "minimize_at_charge: mu must be > 0");
    detail::check_len(g, init.size(), "minimize_at_charge");
    require(!is_zero_field(init), "minimize_at_charge: zero initial field");
    if (m.gamma < 0.0 && m.power >= 4.0) {
        fail(ErrorKind::unsupported, "energy unbounded below at fixed charge for gamma < 0 and p >= 4 in 1D; no minimizer");
    }
    const Field pot = potential_eval(m.potential, g);

    FlowResult r;
    r.phi = init;
    detail::normalize_to_charge(g, r.phi, mu);
    Functionals f_cur = energy(g, m, r.phi, pot);
    double e_cur = f_cur.energy;
    double dt = opts.dt;
    // Energy sums carry rounding of this size; smaller increases are not rejected.
    auto slack = [&](const Functionals& f) {
        return 1e-12 * (std::abs(f.kinetic) + std::abs(f.potential) + std::abs(f.nonlinear));
    };

    for (long it = 0; it < opts.max_steps; ++it) {
        const Field grad = energy_gradient(g, m, r.phi, pot);
        const double e_mult = -inner_product(g, grad, r.phi) / (2.0 * mu);
        Field res(g.n);
        for (int i = 0; i < g.n; ++i) res[i] = grad[i] + e_mult * r.phi[i];
        r.E = e_mult;
        r.residual = sup_norm(res);
        r.iterations = it;
        if (r.residual <= opts.grad_tol) {
            r.energy = e_cur;
            return r;
        }

        // H_phi = -Delta + V + gamma |phi|^p, shifted by a Gershgorin lower
        // bound so that M = I + dt (H_phi - lb) is positive definite.
        SymTridiag hphi = schrodinger_operator(g, pot, 0.0, &r.phi, m.gamma, m.power);
        double lb = std::numeric_limits<double>::infinity();
        for (int i = 0; i < g.n; ++i) lb = std::min(lb, hphi.diag[i] + (i > 0 ? hphi.off[i - 1] : 0.0) + (i + 1 < g.n ? hphi.off[i] : 0.0));
        bool accepted = false;
        for (int tries = 0; tries < 60 && !accepted; ++tries) {
            SymTridiag mop = hphi;
            for (double& d : mop.diag) d = 1.0 + dt * (d - lb);
            for (double& o : mop.off) o *= dt;
            const auto lu = factor_shifted(mop);
            Field trial = lu.solve(r.phi);
            detail::normalize_to_charge(g, trial, mu);
            const Functionals f_new = energy(g, m, trial, pot);
            const double e_new = f_new.energy;
            if (std::isfinite(e_new) && e_new <= e_cur + slack(f_cur)) {
                r.phi = std::move(trial);
                e_cur = e_new;
                f_cur = f_new;
                r.energy_history.push_back(e_new);
                dt = std::min(dt * 1.1, opts.dt_max);
                accepted = true;
            } else {
                dt *= 0.5;
                ++r.dt_halvings;
            }
        }
        if (!accepted) {
            // Energy cannot decrease further at machine precision.
            r.energy = e_cur;
            if (r.residual <= 10.0 * opts.grad_tol) return r;
            fail(ErrorKind::no_convergence, "gradient flow stalled at residual " + std::to_string(r.residual));
        }
    }
    r.energy = e_cur;
    fail(ErrorKind::no_convergence, "gradient flow exceeded max_steps; last residual " + std::to_string(r.residual));
}

struct ScanRow {
    double mu = 0.0;
    double E = 0.0;
    double energy = 0.0;
    double asymmetry = 0.0;
    long iterations = 0;
    Field phi;
};

/// Default asymmetric start: a Gaussian bump on the right of the domain center.
inline Field asymmetric_start(const Grid& g, double center, double width = 1.0)
{
    Field f(g.n);
    for (int i = 0; i < g.n; ++i) {
        const double d = (g.x[i] - center) / width;
        f[i] = std::exp(-d * d) + 0.05 * std::exp(-(g.x[i] + center) * (g.x[i] + center) / (width * width));
    }
    return f;
}

inline Field symmetric_start(const Grid& g, double spread)
{
    Field f(g.n);
    for (int i = 0; i < g.n; ++i) f[i] = std::exp(-g.x[i] * g.x[i] / (spread * spread));
    return f;
}

/// Scan over charges: each mu starts from the previous minimizer (warm) and
/// from a deliberately asymmetric profile; the lower energy wins.
inline std::vector<ScanRow> charge_scan(const Grid& g, const ModelSpec& m, const std::vector<double>& mus, double asym_center,
                                        const FlowOpts& opts = {})
{
    std::vector<ScanRow> rows;
    Field warm = symmetric_start(g, std::max(1.0, 2.0 * asym_center));
    for (double mu : mus) {
        auto a = minimize_at_charge(g, m, mu, warm, opts);
        auto b = minimize_at_charge(g, m, mu, asymmetric_start(g, asym_center), opts);
        FlowResult& best = b.energy < a.energy - 1e-12 * std::abs(a.energy) ? b : a;
        ScanRow row;
        row.mu = mu;
        row.E = best.E;
        row.energy = best.energy;
        row.asymmetry = asymmetry(g, best.phi);
        row.iterations = a.iterations + b.iterations;
        row.phi = best.phi;
        warm = best.phi;
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace nlsbif
