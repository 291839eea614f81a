#pragma once

#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"

namespace nlsbif {

using Field = std::vector<double>;
using ComplexField = std::vector<std::complex<double>>;

/// Uniform grid on [-L, L] with N interior nodes and homogeneous Dirichlet
/// values at x = +-L. Nodes are exactly mirror symmetric: x[i] == -x[N-1-i].
struct Grid {
    double half_width = 0.0;
    int n = 0;
    double h = 0.0;
    std::vector<double> x;

    int size() const { return n; }
    double weight() const { return h; }
};

inline Grid build_grid(double half_width, int n_interior)
{
    if (!(half_width > 0.0) || !std::isfinite(half_width)) {
        fail(ErrorKind::invalid_argument, "grid half width must be positive, got " + std::to_string(half_width));
    }
    if (n_interior < 3) {
        fail(ErrorKind::invalid_argument, "grid needs at least 3 interior nodes, got " + std::to_string(n_interior));
    }
    Grid g;
    g.half_width = half_width;
    g.n = n_interior;
    g.h = 2.0 * half_width / (n_interior + 1);
    g.x.assign(n_interior, 0.0);
    // Left half computed directly, right half mirrored so symmetry is exact.
    const int half = n_interior / 2;
    for (int i = 0; i < half; ++i) {
        g.x[i] = -half_width + (i + 1) * g.h;
        g.x[n_interior - 1 - i] = -g.x[i];
    }
    if (n_interior % 2 == 1) {
        g.x[half] = 0.0;
    }
    return g;
}

namespace detail {

inline void check_len(const Grid& g, std::size_t len, const char* what)
{
    if (len != static_cast<std::size_t>(g.n)) {
        fail(ErrorKind::invalid_argument,
             std::string(what) + ": field has " + std::to_string(len) + " entries, grid has " + std::to_string(g.n));
    }
}

template <class T>
inline T conj_if(const T& v)
{
    return v;
}

template <class T>
inline std::complex<T> conj_if(const std::complex<T>& v)
{
    return std::conj(v);
}

template <class T>
inline double abs2(const T& v)
{
    return v * v;
}

template <class T>
inline double abs2(const std::complex<T>& v)
{
    return std::norm(v);
}

} // namespace detail

/// -Delta_h f with f_0 = f_{N+1} = 0. Symmetric positive definite.
template <class T>
std::vector<T> laplacian_apply(const Grid& g, std::span<const T> f)
{
    detail::check_len(g, f.size(), "laplacian_apply");
    const int n = g.n;
    const double inv_h2 = 1.0 / (g.h * g.h);
    std::vector<T> out(n);
    for (int i = 0; i < n; ++i) {
        const T left = i > 0 ? f[i - 1] : T{};
        const T right = i + 1 < n ? f[i + 1] : T{};
        out[i] = -(left - 2.0 * f[i] + right) * inv_h2;
    }
    return out;
}

inline Field laplacian_apply(const Grid& g, const Field& f)
{
    return laplacian_apply<double>(g, std::span<const double>(f));
}

inline ComplexField laplacian_apply(const Grid& g, const ComplexField& f)
{
    return laplacian_apply<std::complex<double>>(g, std::span<const std::complex<double>>(f));
}

/// Discrete L2 pairing h * sum conj(f_i) w_i.
template <class T>
T inner_product(const Grid& g, std::span<const T> f, std::span<const T> w)
{
    detail::check_len(g, f.size(), "inner_product");
    detail::check_len(g, w.size(), "inner_product");
    T acc{};
    for (int i = 0; i < g.n; ++i) {
        acc += detail::conj_if(f[i]) * w[i];
    }
    return acc * g.h;
}

inline double inner_product(const Grid& g, const Field& f, const Field& w)
{
    return inner_product<double>(g, std::span<const double>(f), std::span<const double>(w));
}

inline std::complex<double> inner_product(const Grid& g, const ComplexField& f, const ComplexField& w)
{
    return inner_product<std::complex<double>>(g, std::span<const std::complex<double>>(f),
                                               std::span<const std::complex<double>>(w));
}

template <class T>
double l2_norm(const Grid& g, const std::vector<T>& f)
{
    detail::check_len(g, f.size(), "l2_norm");
    double acc = 0.0;
    for (const auto& v : f) {
        acc += detail::abs2(v);
    }
    return std::sqrt(acc * g.h);
}

/// sum over the N+1 cells of |f_{i+1} - f_i|^2 / h, ghost values zero.
template <class T>
double gradient_norm2(const Grid& g, const std::vector<T>& f)
{
    detail::check_len(g, f.size(), "gradient_norm2");
    double acc = 0.0;
    T prev{};
    for (int i = 0; i <= g.n; ++i) {
        const T cur = i < g.n ? f[i] : T{};
        acc += detail::abs2(cur - prev);
        prev = cur;
    }
    return acc / g.h;
}

template <class T>
double h1_norm(const Grid& g, const std::vector<T>& f)
{
    const double l2 = l2_norm(g, f);
    return std::sqrt(l2 * l2 + gradient_norm2(g, f));
}

inline double sup_norm(std::span<const double> f)
{
    double m = 0.0;
    for (double v : f) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

/// f(-x) on the symmetric grid.
template <class T>
std::vector<T> mirror(const std::vector<T>& f)
{
    return std::vector<T>(f.rbegin(), f.rend());
}

inline Field even_part(const Field& f)
{
    const auto m = mirror(f);
    Field out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        out[i] = 0.5 * (f[i] + m[i]);
    }
    return out;
}

inline Field odd_part(const Field& f)
{
    const auto m = mirror(f);
    Field out(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        out[i] = 0.5 * (f[i] - m[i]);
    }
    return out;
}

/// Piecewise-linear interpolation of a grid field at arbitrary x, with the
/// Dirichlet zeros at +-L; returns 0 outside the domain.
inline double interpolate(const Grid& g, const Field& f, double xq)
{
    const double s = (xq + g.half_width) / g.h; // node index in 0..N+1 numbering
    if (!(s > 0.0) || !(s < g.n + 1)) {
        return 0.0;
    }
    const int k = static_cast<int>(std::floor(s));
    const double t = s - k;
    const double left = (k >= 1 && k <= g.n) ? f[k - 1] : 0.0;
    const double right = (k + 1 >= 1 && k + 1 <= g.n) ? f[k] : 0.0;
    return (1.0 - t) * left + t * right;
}

/// Four-point Lagrange (cubic) interpolation, same boundary convention.
inline double interpolate_cubic(const Grid& g, const Field& f, double xq)
{
    const double s = (xq + g.half_width) / g.h;
    if (!(s > 0.0) || !(s < g.n + 1)) {
        return 0.0;
    }
    const int k = static_cast<int>(std::floor(s));
    const double t = s - k;
    auto at = [&](int j) { return (j >= 1 && j <= g.n) ? f[j - 1] : 0.0; };
    const double fm = at(k - 1), f0 = at(k), f1 = at(k + 1), f2 = at(k + 2);
    return -t * (t - 1.0) * (t - 2.0) / 6.0 * fm + (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0 * f0 -
           (t + 1.0) * t * (t - 2.0) / 2.0 * f1 + (t + 1.0) * t * (t - 1.0) / 6.0 * f2;
}

inline Field resample(const Grid& from, const Field& f, const Grid& to)
{
    detail::check_len(from, f.size(), "resample");
    Field out(to.n);
    for (int i = 0; i < to.n; ++i) {
        out[i] = interpolate(from, f, to.x[i]);
    }
    return out;
}

} // namespace nlsbif
