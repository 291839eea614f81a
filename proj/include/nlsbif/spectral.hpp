#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "tridiag.hpp"

namespace nlsbif {

struct SturmCount {
    int count = 0;
    int nudges = 0; // zero pivots replaced by -pivmin
};

/// Number of eigenvalues strictly below tau, from the inertia of the LDL^T
/// factorization of T - tau I. An exactly zero pivot is replaced by -pivmin, so
/// an eigenvalue equal to tau in floating point may be counted as below.
inline SturmCount eig_count_below_diag(const SymTridiag& t, double tau)
{
    const int n = t.size();
    double bmax = 0.0;
    for (double b : t.off) bmax = std::max(bmax, b * b);
    const double pivmin = std::numeric_limits<double>::min() * std::max(1.0, bmax);
    SturmCount r;
    double d = t.diag[0] - tau;
    if (std::abs(d) < pivmin) {
        d = -pivmin;
        ++r.nudges;
    }
    if (d < 0.0) ++r.count;
    for (int i = 1; i < n; ++i) {
        d = (t.diag[i] - tau) - t.off[i - 1] * t.off[i - 1] / d;
        if (std::abs(d) < pivmin) {
            d = -pivmin;
            ++r.nudges;
        }
        if (d < 0.0) ++r.count;
    }
    return r;
}

inline int eig_count_below(const SymTridiag& t, double tau)
{
    return eig_count_below_diag(t, tau).count;
}

namespace detail {

/// Bisection for the j-th (0-based) smallest eigenvalue inside [lo, hi] where
/// count(lo) <= j and count(hi) >= j+1.
inline double bisect_eigenvalue(const SymTridiag& t, int j, double lo, double hi, double norm)
{
    const double floor_tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(norm, 1e-300);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double tol = std::max(1e-12 * std::max(std::abs(lo), std::abs(hi)), floor_tol);
        if (hi - lo <= tol || mid == lo || mid == hi) break;
        if (eig_count_below(t, mid) >= j + 1) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// The k algebraically smallest eigenvalues, nondecreasing.
inline std::vector<double> smallest_eigenvalues(const SymTridiag& t, int k)
{
    const int n = t.size();
    require(k >= 1 && k <= n, "smallest_eigenvalues: need 1 <= k <= N");
    auto [glo, ghi] = t.gershgorin();
    const double norm = t.norm_inf();
    const double pad = std::max(norm, 1.0) * 1e-12;
    glo -= pad;
    ghi += pad;
    std::vector<double> vals(k);
    double lo = glo;
    for (int j = 0; j < k; ++j) {
        vals[j] = detail::bisect_eigenvalue(t, j, lo, ghi, norm);
        // Next eigenvalue is >= this one; keep a lower bracket with count <= j+1.
        lo = std::max(glo, vals[j] - 1e-12 * std::max(1.0, std::abs(vals[j])) - 8.0 * std::numeric_limits<double>::epsilon() * norm);
        if (eig_count_below(t, lo) > j + 1) lo = glo;
    }
    return vals;
}

struct EigenPair {
    double value = 0.0;
    Field vector; // unit norm in the grid inner product (weight h)
};

/// Eigenvector by inverse iteration at a converged eigenvalue, orthogonalized
/// against `against` (vectors of nearby eigenvalues). Normalized with weight h.
inline Field inverse_iteration(const SymTridiag& t, double lambda, double h, const std::vector<const Field*>& against = {})
{
    const int n = t.size();
    const double norm = std::max(t.norm_inf(), 1e-300);
    std::mt19937_64 rng(0x5eed + static_cast<unsigned>(n));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    auto orthonormalize = [&](Field& v) {
        for (const Field* w : against) {
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += (*w)[i] * v[i];
            dot *= h;
            for (int i = 0; i < n; ++i) v[i] -= dot * (*w)[i];
        }
        double s = 0.0;
        for (double x : v) s += x * x;
        s = std::sqrt(s * h);
        if (!(s > 0.0) || !std::isfinite(s)) return false;
        for (double& x : v) x /= s;
        return true;
    };

    double shift_offset = 0.0;
    for (int attempt = 0; attempt <= 5; ++attempt) {
        const double shift = lambda + shift_offset;
        const auto lu = factor_shifted(t, shift);
        Field v(n);
        for (double& x : v) x = uni(rng);
        if (!orthonormalize(v)) continue;
        for (int it = 0; it < 8; ++it) {
            lu.solve_in_place(v);
            if (!orthonormalize(v)) break;
            // Residual check ||T v - lambda v||.
            const Field tv = t.apply(v);
            double rq = 0.0;
            for (int i = 0; i < n; ++i) rq += v[i] * tv[i];
            rq *= h;
            double res = 0.0;
            for (int i = 0; i < n; ++i) res = std::max(res, std::abs(tv[i] - rq * v[i]));
            double vmax = 0.0;
            for (double x : v) vmax = std::max(vmax, std::abs(x));
            if (res <= 1e-9 * norm * vmax && it >= 1) return v;
        }
        // Stagnation: perturb the shift and retry.
        shift_offset = (attempt + 1) * 1e-10 * norm * (attempt % 2 == 0 ? 1.0 : -1.0);
    }
    fail(ErrorKind::numerical_failure, "inverse iteration stagnated at lambda=" + std::to_string(lambda));
}

/// The k smallest eigenpairs, vectors orthogonalized within clusters.
inline std::vector<EigenPair> smallest_eigenpairs(const SymTridiag& t, int k, double h = 1.0)
{
    const auto vals = smallest_eigenvalues(t, k);
    const double norm = std::max(t.norm_inf(), 1e-300);
    std::vector<EigenPair> out(k);
    for (int j = 0; j < k; ++j) {
        std::vector<const Field*> cluster;
        for (int i = 0; i < j; ++i) {
            if (std::abs(vals[j] - vals[i]) <= 1e-3 * std::max(1.0, std::abs(vals[j])) + 1e-8 * norm) {
                cluster.push_back(&out[i].vector);
            }
        }
        out[j].value = vals[j];
        out[j].vector = inverse_iteration(t, vals[j], h, cluster);
    }
    return out;
}

enum class Parity { even, odd, none };

inline const char* to_string(Parity p)
{
    switch (p) {
    case Parity::even: return "even";
    case Parity::odd: return "odd";
    case Parity::none: return "none";
    }
    return "none";
}

inline Parity parity_of(const Field& v, double tol)
{
    const auto m = mirror(v);
    double n = 0.0, de = 0.0, dodd = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        n += v[i] * v[i];
        de += (v[i] - m[i]) * (v[i] - m[i]);
        dodd += (v[i] + m[i]) * (v[i] + m[i]);
    }
    if (n == 0.0) return Parity::none;
    if (std::sqrt(de / n) <= tol) return Parity::even;
    if (std::sqrt(dodd / n) <= tol) return Parity::odd;
    return Parity::none;
}

struct SpectralOptions {
    double kernel_rel_tol = 1e-8; // kernel_tol = kernel_rel_tol * ||T||_inf
    double parity_tol = 1e-6;
    // Constant potential: L+ phi' = 0 is a symmetry (translation) direction,
    // excluded from the Morse count like the gauge kernel of L-.
    bool translation_invariant = false;
};

struct SpectralSummary {
    int morse_plus = 0;
    int morse_minus = 0;
    double lambda_min_plus = 0.0;
    double lambda2_plus = 0.0;
    double lambda_min_minus = 0.0;
    std::vector<double> lambdas_plus;  // smallest few of L+, nondecreasing
    std::vector<double> lambdas_minus; // smallest few of L-
    double kernel_tol = 0.0;
    std::optional<Field> kernel_vector_plus;
    std::optional<Field> symmetry_vector_plus; // translation mode, when modded out
    int kernel_index_plus = -1;
    Parity kernel_parity = Parity::none;
    int sturm_nudges = 0;

    int morse_total() const { return morse_plus + morse_minus; }
};

/// Spectral data of (L+, L-). L+ counts eigenvalues strictly below zero; L-
/// counts eigenvalues below -kernel_tol when the profile is nonzero, since
/// L- phi = 0 holds exactly on every bound state (the gauge kernel).
inline SpectralSummary summarize(const Grid& g, const SymTridiag& lplus, const SymTridiag& lminus, bool gauge_kernel,
                                 const SpectralOptions& opts = {})
{
    SpectralSummary s;
    const int n = lplus.size();
    s.kernel_tol = opts.kernel_rel_tol * lplus.norm_inf();

    const bool modded = opts.translation_invariant && gauge_kernel;
    const auto cp = eig_count_below_diag(lplus, modded ? -s.kernel_tol : 0.0);
    s.morse_plus = cp.count;
    const double minus_threshold = gauge_kernel ? -s.kernel_tol : 0.0;
    const auto cm = eig_count_below_diag(lminus, minus_threshold);
    s.morse_minus = cm.count;
    s.sturm_nudges = cp.nudges + cm.nudges;

    const int kp = std::min(n, std::max(3, s.morse_plus + 2));
    s.lambdas_plus = smallest_eigenvalues(lplus, kp);
    const int km = std::min(n, std::max(2, s.morse_minus + 2));
    s.lambdas_minus = smallest_eigenvalues(lminus, km);
    s.lambda_min_plus = s.lambdas_plus[0];
    s.lambda2_plus = s.lambdas_plus[1];
    s.lambda_min_minus = s.lambdas_minus[0];

    int best = -1;
    double best_abs = std::numeric_limits<double>::infinity();
    for (int j = 0; j < kp; ++j) {
        if (std::abs(s.lambdas_plus[j]) < best_abs) {
            best_abs = std::abs(s.lambdas_plus[j]);
            best = j;
        }
    }
    if (best >= 0 && best_abs <= s.kernel_tol) {
        const auto pairs = smallest_eigenpairs(lplus, best + 1, g.h);
        if (modded) {
            s.symmetry_vector_plus = pairs[best].vector;
        } else {
            s.kernel_vector_plus = pairs[best].vector;
            s.kernel_index_plus = best;
            s.kernel_parity = parity_of(*s.kernel_vector_plus, opts.parity_tol);
        }
    }
    return s;
}

} // namespace nlsbif
