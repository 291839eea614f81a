#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"
#include "spectral.hpp"
#include "tridiag.hpp"

namespace nlsbif {

using cplx = std::complex<double>;

struct EvolutionSample {
    double t = 0.0;
    double Q = 0.0;
    double energy = 0.0;
    double distance = std::numeric_limits<double>::quiet_NaN(); // orbital distance to the reference, if any
};

struct Trajectory {
    std::vector<EvolutionSample> samples;
    ComplexField u; // final state
    double t = 0.0;
};

/// Thrown when the state stops being finite; carries the last finite state.
class BlowUp : public Error {
public:
    BlowUp(const std::string& msg, ComplexField last, double t)
        : Error(ErrorKind::blow_up_detected, msg), last_(std::move(last)), t_(t)
    {
    }
    const ComplexField& last_state() const { return last_; }
    double time() const { return t_; }

private:
    ComplexField last_;
    double t_;
};

struct OrbitalDistance {
    double l2 = 0.0;
    double h1 = 0.0;
    double theta = 0.0;
    double shift = 0.0; // translation applied to the reference (translation fit only)
};

inline double center_of_mass(const Grid& g, const ComplexField& u)
{
    double m = 0.0, mx = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double a = std::norm(u[i]);
        m += a;
        mx += a * g.x[i];
    }
    return m > 0.0 ? mx / m : 0.0;
}

/// min over theta of ||u - e^{i theta} phi||, attained at theta = arg(phi, u).
/// With translate = true the reference is first shifted so its center of mass
/// matches that of u.
inline OrbitalDistance orbital_distance(const Grid& g, const ComplexField& u, const Field& phi, bool translate = false)
{
    detail::check_len(g, u.size(), "orbital_distance");
    detail::check_len(g, phi.size(), "orbital_distance");
    require(!std::all_of(phi.begin(), phi.end(), [](double v) { return v == 0.0; }), "orbital_distance: zero reference");
    OrbitalDistance d;
    Field ref = phi;
    if (translate) {
        ComplexField pc(phi.begin(), phi.end());
        d.shift = center_of_mass(g, u) - center_of_mass(g, pc);
        for (int i = 0; i < g.n; ++i) ref[i] = interpolate(g, phi, g.x[i] - d.shift);
    }
    cplx pair(0.0, 0.0);
    for (int i = 0; i < g.n; ++i) pair += ref[i] * u[i];
    d.theta = std::arg(pair);
    const cplx rot = std::polar(1.0, d.theta);
    ComplexField diff(g.n);
    for (int i = 0; i < g.n; ++i) diff[i] = u[i] - rot * ref[i];
    d.l2 = l2_norm(g, diff);
    d.h1 = h1_norm(g, diff);
    return d;
}

struct EvolveOpts {
    double dt = 1e-3;
    int sample_every = 100;
    bool translation_fit = false;
};

/// Strang splitting for i u_t = (-Delta + V) u + gamma |u|^p u: exact
/// nonlinear phase over dt/2, Crank-Nicolson linear step over dt, nonlinear
/// phase over dt/2. The CN matrix is factored once.
inline Trajectory evolve(const Grid& g, const ModelSpec& m, const ComplexField& u0, double horizon, const EvolveOpts& opts = {},
                         const Field* reference = nullptr)
{
    m.validate();
    require(opts.dt > 0.0, "evolve: dt must be > 0");
    require(horizon > 0.0, "evolve: horizon must be > 0");
    require(opts.sample_every >= 1, "evolve: sample_every must be >= 1");
    detail::check_len(g, u0.size(), "evolve");

    const Field pot = potential_eval(m.potential, g);
    const auto h = schrodinger_operator(g, pot, 0.0);
    const cplx half_i(0.0, 0.5 * opts.dt);
    TridiagLU<cplx> lu;
    {
        std::vector<cplx> dl(g.n - 1), d(g.n), du(g.n - 1);
        for (int i = 0; i < g.n; ++i) d[i] = 1.0 + half_i * h.diag[i];
        for (int i = 0; i + 1 < g.n; ++i) dl[i] = du[i] = half_i * h.off[i];
        lu = TridiagLU<cplx>(std::move(dl), std::move(d), std::move(du));
    }

    const long steps = std::max(1L, std::lround(horizon / opts.dt));
    Trajectory tr;
    tr.u = u0;
    ComplexField rhs(g.n);

    auto record = [&](double t) {
        EvolutionSample s;
        s.t = t;
        const auto f = energy(g, m, tr.u, pot);
        s.Q = f.charge;
        s.energy = f.energy;
        if (reference != nullptr) s.distance = orbital_distance(g, tr.u, *reference, opts.translation_fit).l2;
        tr.samples.push_back(s);
    };
    const bool square = m.power == 2.0;
    auto nonlinear = [&](double tau) {
        if (m.gamma == 0.0) return;
        for (auto& z : tr.u) {
            const double n2 = std::norm(z);
            const double a = square ? n2 : (n2 > 0.0 ? std::pow(n2, 0.5 * m.power) : 0.0);
            const double ph = -m.gamma * a * tau;
            z *= cplx(std::cos(ph), std::sin(ph));
        }
    };

    record(0.0);
    ComplexField last_finite = tr.u;
    // |u| is invariant under the phase, so the closing half step of one step
    // and the opening half step of the next merge into one full step.
    bool pending_half = false;
    for (long k = 1; k <= steps; ++k) {
        nonlinear(pending_half ? opts.dt : 0.5 * opts.dt);
        for (int i = 0; i < g.n; ++i) {
            cplx hu = h.diag[i] * tr.u[i];
            if (i > 0) hu += h.off[i - 1] * tr.u[i - 1];
            if (i + 1 < g.n) hu += h.off[i] * tr.u[i + 1];
            rhs[i] = tr.u[i] - half_i * hu;
        }
        lu.solve_in_place(rhs);
        tr.u.swap(rhs);
        const double t = k * opts.dt;
        tr.t = t;
        if (k % opts.sample_every == 0 || k == steps) {
            nonlinear(0.5 * opts.dt);
            pending_half = false;
            for (const auto& z : tr.u) {
                if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                    throw BlowUp("non-finite state at t=" + std::to_string(t), last_finite, t - opts.dt * opts.sample_every);
                }
            }
            record(t);
            last_finite = tr.u;
        } else {
            pending_half = true;
        }
    }
    return tr;
}

/// Step for probing a state at parameter E: the split scheme develops a
/// spurious instability once dt * E reaches about 0.1, so dt * E is kept at 0.025.
inline EvolveOpts probe_evolve_opts(double energy_param, double dt_cap = 5e-3, double sample_dt = 0.1)
{
    EvolveOpts o;
    o.dt = std::min(dt_cap, 0.025 / std::max(energy_param, 1e-12));
    o.sample_every = std::max(1, static_cast<int>(std::lround(sample_dt / o.dt)));
    return o;
}

enum class PerturbationKind { ground_eigenvector, random, mirror_antisymmetric };

inline const char* to_string(PerturbationKind k)
{
    switch (k) {
    case PerturbationKind::ground_eigenvector: return "ground_eigenvector";
    case PerturbationKind::random: return "random";
    case PerturbationKind::mirror_antisymmetric: return "mirror_antisymmetric";
    }
    return "random";
}

inline PerturbationKind perturbation_from_string(const std::string& s)
{
    if (s == "ground_eigenvector") return PerturbationKind::ground_eigenvector;
    if (s == "random") return PerturbationKind::random;
    if (s == "mirror_antisymmetric") return PerturbationKind::mirror_antisymmetric;
    fail(ErrorKind::invalid_argument, "unknown perturbation '" + s + "'");
}

struct ProbeSpec {
    PerturbationKind direction = PerturbationKind::ground_eigenvector;
    double epsilon = 1e-3;
    double horizon = 50.0;
    EvolveOpts evolve;
    std::uint64_t seed = 1;
};

enum class Verdict { bounded, departed, inconclusive };

inline const char* to_string(Verdict v)
{
    switch (v) {
    case Verdict::bounded: return "bounded";
    case Verdict::departed: return "departed";
    case Verdict::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

struct ProbeResult {
    Verdict verdict = Verdict::inconclusive;
    double max_relative_distance = 0.0; // max_t dist / ||phi||
    double epsilon_eff = 0.0;
    double q_drift_per_time = 0.0;      // max |Q(t) - Q(0)| / Q(0) / t
    bool blow_up = false;
    std::string note;
    Trajectory trajectory;
};

/// Unit perturbation direction for a real profile.
inline Field perturbation_direction(const Grid& g, const ModelSpec& m, const Field& phi, double energy_param, PerturbationKind kind,
                                    std::uint64_t seed)
{
    Field d(g.n);
    switch (kind) {
    case PerturbationKind::ground_eigenvector: {
        const auto lin = linearization(g, m, phi, energy_param);
        d = smallest_eigenpairs(lin.plus, 1, g.h)[0].vector;
        break;
    }
    case PerturbationKind::random: {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> nd(0.0, 1.0);
        double mx = 0.0;
        for (double v : phi) mx = std::max(mx, std::abs(v));
        for (int i = 0; i < g.n; ++i) d[i] = nd(rng) * std::abs(phi[i]) / std::max(mx, 1e-300);
        break;
    }
    case PerturbationKind::mirror_antisymmetric:
        for (int i = 0; i < g.n; ++i) d[i] = phi[i] * std::tanh(g.x[i]);
        break;
    }
    const double n = l2_norm(g, d);
    require(n > 0.0, "perturbation direction vanishes for this profile");
    for (double& v : d) v /= n;
    return d;
}

/// Evolve phi + eps ||phi|| d and compare the largest orbital distance
/// (relative to ||phi||) with eps: bounded below 10 eps, departed above
/// 100 eps. eps below 1e-6 is judged against 1e-6 (discretization floor).
inline ProbeResult stability_probe(const Grid& g, const ModelSpec& m, const Field& phi, double energy_param, const ProbeSpec& spec)
{
    require(spec.epsilon >= 0.0, "probe epsilon must be >= 0");
    const double pn = l2_norm(g, phi);
    require(pn > 0.0, "stability_probe: zero profile");
    ProbeResult res;
    res.epsilon_eff = std::max(spec.epsilon, 1e-6);
    ComplexField u0(g.n);
    if (spec.epsilon > 0.0) {
        const Field d = perturbation_direction(g, m, phi, energy_param, spec.direction, spec.seed);
        for (int i = 0; i < g.n; ++i) u0[i] = phi[i] + spec.epsilon * pn * d[i];
    } else {
        for (int i = 0; i < g.n; ++i) u0[i] = phi[i];
    }
    try {
        res.trajectory = evolve(g, m, u0, spec.horizon, spec.evolve, &phi);
    } catch (const BlowUp& b) {
        res.blow_up = true;
        res.verdict = Verdict::departed;
        res.note = std::string("blow-up: ") + b.what();
        return res;
    }
    const double q0 = res.trajectory.samples.front().Q;
    for (const auto& s : res.trajectory.samples) {
        res.max_relative_distance = std::max(res.max_relative_distance, s.distance / pn);
        if (s.t > 0.0) res.q_drift_per_time = std::max(res.q_drift_per_time, std::abs(s.Q - q0) / q0 / s.t);
    }
    if (res.max_relative_distance <= 10.0 * res.epsilon_eff) {
        res.verdict = Verdict::bounded;
    } else if (res.max_relative_distance >= 100.0 * res.epsilon_eff) {
        res.verdict = Verdict::departed;
    } else {
        res.verdict = Verdict::inconclusive;
    }
    return res;
}

} // namespace nlsbif
