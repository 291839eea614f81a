#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "tridiag.hpp"

namespace nlsbif {

enum class PotentialKind { zero, single_gaussian_well, double_gaussian_well };

inline const char* to_string(PotentialKind k)
{
    switch (k) {
    case PotentialKind::zero: return "zero";
    case PotentialKind::single_gaussian_well: return "single_gaussian_well";
    case PotentialKind::double_gaussian_well: return "double_gaussian_well";
    }
    return "unknown";
}

inline PotentialKind potential_kind_from_string(const std::string& s)
{
    if (s == "zero") return PotentialKind::zero;
    if (s == "single_gaussian_well") return PotentialKind::single_gaussian_well;
    if (s == "double_gaussian_well") return PotentialKind::double_gaussian_well;
    fail(ErrorKind::invalid_argument, "unknown potential kind '" + s + "'");
}

/// Gaussian well families, all decaying to zero at infinity:
///   single: V = -a exp(-x^2/s^2)
///   double: V = -a [exp(-(x-l)^2/s^2) + exp(-(x+l)^2/s^2)]
struct PotentialSpec {
    PotentialKind kind = PotentialKind::zero;
    double depth = 0.0;
    double separation = 0.0;
    double width = 1.0;

    void validate() const
    {
        require(depth >= 0.0 && std::isfinite(depth), "potential depth must be >= 0");
        require(separation >= 0.0 && std::isfinite(separation), "potential separation must be >= 0");
        require(width > 0.0 && std::isfinite(width), "potential width must be > 0");
    }

    double value(double x) const
    {
        switch (kind) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::single_gaussian_well: return -depth * gauss(x, 0.0);
        case PotentialKind::double_gaussian_well: return -depth * (gauss(x, separation) + gauss(x, -separation));
        }
        return 0.0;
    }

    double derivative(double x) const
    {
        const double s2 = width * width;
        switch (kind) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::single_gaussian_well: return depth * 2.0 * x / s2 * gauss(x, 0.0);
        case PotentialKind::double_gaussian_well:
            return depth * 2.0 / s2 * ((x - separation) * gauss(x, separation) + (x + separation) * gauss(x, -separation));
        }
        return 0.0;
    }

    double second_derivative(double x) const
    {
        const double s2 = width * width;
        auto term = [&](double c) {
            const double d = x - c;
            return gauss(x, c) * (2.0 / s2 - 4.0 * d * d / (s2 * s2));
        };
        switch (kind) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::single_gaussian_well: return depth * term(0.0);
        case PotentialKind::double_gaussian_well: return depth * (term(separation) + term(-separation));
        }
        return 0.0;
    }

    double minimum_value() const
    {
        switch (kind) {
        case PotentialKind::zero: return 0.0;
        case PotentialKind::single_gaussian_well: return -depth;
        case PotentialKind::double_gaussian_well: return -depth * (1.0 + std::exp(-4.0 * separation * separation / (width * width)));
        }
        return 0.0;
    }

private:
    double gauss(double x, double c) const
    {
        const double d = (x - c) / width;
        return std::exp(-d * d);
    }
};

/// NLS model: i u_t = (-Delta + V) u + gamma |u|^p u.
struct ModelSpec {
    PotentialSpec potential;
    double gamma = -1.0;
    double power = 2.0;

    void validate() const
    {
        potential.validate();
        require(std::isfinite(gamma), "gamma must be finite");
        require(power > 0.0 && std::isfinite(power), "nonlinearity power p must be > 0");
    }

    /// Analytic nonlinearity: p an even positive integer.
    bool analytic_power() const
    {
        return std::abs(power - std::round(power)) < 1e-12 && static_cast<long>(std::round(power)) % 2 == 0;
    }
};

namespace detail {

/// |v|^p with 0^p = 0.
inline double pow_abs(double v, double p)
{
    const double a = std::abs(v);
    if (a == 0.0) return 0.0;
    if (p == 2.0) return a * a;
    return std::pow(a, p);
}

} // namespace detail

inline Field potential_eval(const PotentialSpec& spec, const Grid& g)
{
    Field v(g.n);
    const int half = g.n / 2;
    for (int i = 0; i < half; ++i) {
        v[i] = spec.value(g.x[i]);
        v[g.n - 1 - i] = v[i];
    }
    if (g.n % 2 == 1) v[half] = spec.value(0.0);
    return v;
}

inline Field potential_derivative_eval(const PotentialSpec& spec, const Grid& g)
{
    Field v(g.n);
    for (int i = 0; i < g.n; ++i) v[i] = spec.derivative(g.x[i]);
    return v;
}

/// F(phi, E) = (-Delta_h + V + E) phi + gamma |phi|^p phi.
inline Field residual(const Grid& g, const ModelSpec& m, const Field& phi, double energy_param, const Field& potential)
{
    detail::check_len(g, phi.size(), "residual");
    Field out = laplacian_apply(g, phi);
    for (int i = 0; i < g.n; ++i) {
        out[i] += (potential[i] + energy_param) * phi[i] + m.gamma * detail::pow_abs(phi[i], m.power) * phi[i];
    }
    return out;
}

inline Field residual(const Grid& g, const ModelSpec& m, const Field& phi, double energy_param)
{
    return residual(g, m, phi, energy_param, potential_eval(m.potential, g));
}

struct Functionals {
    double kinetic = 0.0;   // 1/2 |grad phi|^2
    double potential = 0.0; // 1/2 int V |phi|^2
    double nonlinear = 0.0; // gamma/(p+2) int |phi|^{p+2}
    double energy = 0.0;
    double charge = 0.0;    // 1/2 int |phi|^2
};

template <class T>
double charge(const Grid& g, const std::vector<T>& phi)
{
    const double n = l2_norm(g, phi);
    return 0.5 * n * n;
}

template <class T>
Functionals energy(const Grid& g, const ModelSpec& m, const std::vector<T>& phi, const Field& potential)
{
    detail::check_len(g, phi.size(), "energy");
    Functionals f;
    f.kinetic = 0.5 * gradient_norm2(g, phi);
    double pot = 0.0;
    double nl = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double a2 = detail::abs2(phi[i]);
        pot += potential[i] * a2;
        nl += detail::pow_abs(std::sqrt(a2), m.power + 2.0);
    }
    f.potential = 0.5 * g.h * pot;
    f.nonlinear = m.gamma / (m.power + 2.0) * g.h * nl;
    f.energy = f.kinetic + f.potential + f.nonlinear;
    f.charge = charge(g, phi);
    return f;
}

template <class T>
Functionals energy(const Grid& g, const ModelSpec& m, const std::vector<T>& phi)
{
    return energy(g, m, phi, potential_eval(m.potential, g));
}

/// L2 gradient of the energy: (-Delta_h + V) phi + gamma |phi|^p phi.
inline Field energy_gradient(const Grid& g, const ModelSpec& m, const Field& phi, const Field& potential)
{
    return residual(g, m, phi, 0.0, potential);
}

/// 1D Pohozaev identity residual (pairing of the stationary equation with x phi'):
///   1/2 |phi'|^2 - 1/2 int (V+E) phi^2 - 1/2 int x V'(x) phi^2 - gamma/(p+2) int |phi|^{p+2}.
/// Vanishes on exact continuum solutions; on grid solutions it is O(h^2).
inline double pohozaev_residual(const Grid& g, const ModelSpec& m, const Field& phi, double energy_param)
{
    detail::check_len(g, phi.size(), "pohozaev_residual");
    const Field v = potential_eval(m.potential, g);
    const double kin = 0.5 * gradient_norm2(g, phi);
    double pot = 0.0;
    double virial = 0.0;
    double nl = 0.0;
    for (int i = 0; i < g.n; ++i) {
        const double p2 = phi[i] * phi[i];
        pot += (v[i] + energy_param) * p2;
        virial += g.x[i] * m.potential.derivative(g.x[i]) * p2;
        nl += detail::pow_abs(phi[i], m.power + 2.0);
    }
    return kin - 0.5 * g.h * pot - 0.5 * g.h * virial - m.gamma / (m.power + 2.0) * g.h * nl;
}

/// -Delta_h + V + E + coeff * |phi|^p as a symmetric tridiagonal matrix.
inline SymTridiag schrodinger_operator(const Grid& g, const Field& potential, double energy_param,
                                       const Field* phi = nullptr, double coeff = 0.0, double power = 2.0)
{
    SymTridiag t;
    const double inv_h2 = 1.0 / (g.h * g.h);
    t.diag.assign(g.n, 0.0);
    t.off.assign(g.n - 1, -inv_h2);
    for (int i = 0; i < g.n; ++i) {
        t.diag[i] = 2.0 * inv_h2 + potential[i] + energy_param;
        if (phi != nullptr) t.diag[i] += coeff * detail::pow_abs((*phi)[i], power);
    }
    return t;
}

struct Linearization {
    SymTridiag plus;  // -Delta + V + E + gamma (p+1) |phi|^p
    SymTridiag minus; // -Delta + V + E + gamma |phi|^p
};

inline Linearization linearization(const Grid& g, const ModelSpec& m, const Field& phi, double energy_param, const Field& potential)
{
    detail::check_len(g, phi.size(), "linearization");
    return {schrodinger_operator(g, potential, energy_param, &phi, m.gamma * (m.power + 1.0), m.power),
            schrodinger_operator(g, potential, energy_param, &phi, m.gamma, m.power)};
}

inline Linearization linearization(const Grid& g, const ModelSpec& m, const Field& phi, double energy_param)
{
    return linearization(g, m, phi, energy_param, potential_eval(m.potential, g));
}

/// Ground soliton of the potential-free problem, gamma < 0:
///   phi(x) = [(p+2) E / (2|gamma|)]^{1/p} sech^{2/p}(p sqrt(E) x / 2).
inline double soliton_profile(double x, double energy_param, double gamma, double power)
{
    require(gamma < 0.0 && energy_param > 0.0, "soliton_profile needs gamma < 0 and E > 0");
    const double amp = std::pow((power + 2.0) * energy_param / (2.0 * std::abs(gamma)), 1.0 / power);
    const double arg = 0.5 * power * std::sqrt(energy_param) * x;
    return amp * std::pow(1.0 / std::cosh(arg), 2.0 / power);
}

inline Field soliton_field(const Grid& g, double energy_param, double gamma, double power, double center = 0.0)
{
    Field f(g.n);
    for (int i = 0; i < g.n; ++i) f[i] = soliton_profile(g.x[i] - center, energy_param, gamma, power);
    return f;
}

} // namespace nlsbif
