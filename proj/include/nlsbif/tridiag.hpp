#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <span>
#include <vector>

#include "errors.hpp"

namespace nlsbif {

/// Real symmetric tridiagonal matrix: diag has n entries, off has n-1.
struct SymTridiag {
    std::vector<double> diag;
    std::vector<double> off;

    int size() const { return static_cast<int>(diag.size()); }

    std::vector<double> apply(std::span<const double> v) const
    {
        const int n = size();
        require(static_cast<int>(v.size()) == n, "SymTridiag::apply: length mismatch");
        std::vector<double> out(n);
        for (int i = 0; i < n; ++i) {
            double acc = diag[i] * v[i];
            if (i > 0) acc += off[i - 1] * v[i - 1];
            if (i + 1 < n) acc += off[i] * v[i + 1];
            out[i] = acc;
        }
        return out;
    }

    /// Max absolute row sum.
    double norm_inf() const
    {
        const int n = size();
        double m = 0.0;
        for (int i = 0; i < n; ++i) {
            double r = std::abs(diag[i]);
            if (i > 0) r += std::abs(off[i - 1]);
            if (i + 1 < n) r += std::abs(off[i]);
            m = std::max(m, r);
        }
        return m;
    }

    /// Gershgorin enclosure of the spectrum.
    std::pair<double, double> gershgorin() const
    {
        const int n = size();
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int i = 0; i < n; ++i) {
            double r = 0.0;
            if (i > 0) r += std::abs(off[i - 1]);
            if (i + 1 < n) r += std::abs(off[i]);
            lo = std::min(lo, diag[i] - r);
            hi = std::max(hi, diag[i] + r);
        }
        return {lo, hi};
    }
};

/// LU factorization with partial pivoting of a general tridiagonal matrix
/// (the LAPACK gttrf/gttrs scheme). Works for indefinite and complex systems.
/// Exactly zero pivots are replaced by a tiny value and flagged, so inverse
/// iteration at a converged eigenvalue still produces a usable direction.
template <class T>
class TridiagLU {
public:
    TridiagLU() = default;

    TridiagLU(std::vector<T> sub, std::vector<T> diag, std::vector<T> sup) { factor(std::move(sub), std::move(diag), std::move(sup)); }

    void factor(std::vector<T> sub, std::vector<T> diag, std::vector<T> sup)
    {
        const int n = static_cast<int>(diag.size());
        require(n >= 1, "TridiagLU: empty matrix");
        require(static_cast<int>(sub.size()) == n - 1 && static_cast<int>(sup.size()) == n - 1,
                "TridiagLU: band lengths inconsistent");
        dl_ = std::move(sub);
        d_ = std::move(diag);
        du_ = std::move(sup);
        du2_.assign(n > 2 ? n - 2 : 0, T{});
        ipiv_.assign(n, 0);
        singular_ = false;

        double scale = 0.0;
        for (const auto& v : d_) scale = std::max(scale, std::abs(v));
        for (const auto& v : dl_) scale = std::max(scale, std::abs(v));
        for (const auto& v : du_) scale = std::max(scale, std::abs(v));
        const double tiny = std::max(scale, 1.0) * std::numeric_limits<double>::epsilon() * 1e-3;

        for (int i = 0; i < n; ++i) ipiv_[i] = i;
        for (int i = 0; i + 1 < n; ++i) {
            if (std::abs(d_[i]) >= std::abs(dl_[i])) {
                if (d_[i] == T{}) {
                    d_[i] = T(tiny);
                    singular_ = true;
                }
                const T fact = dl_[i] / d_[i];
                dl_[i] = fact;
                d_[i + 1] -= fact * du_[i];
            } else {
                const T fact = d_[i] / dl_[i];
                d_[i] = dl_[i];
                dl_[i] = fact;
                const T temp = du_[i];
                du_[i] = d_[i + 1];
                d_[i + 1] = temp - fact * d_[i + 1];
                if (i + 2 < n) {
                    du2_[i] = du_[i + 1];
                    du_[i + 1] = -fact * du_[i + 1];
                }
                ipiv_[i] = i + 1;
            }
        }
        if (d_[n - 1] == T{}) {
            d_[n - 1] = T(tiny);
            singular_ = true;
        }
        min_pivot_ = std::numeric_limits<double>::infinity();
        for (const auto& v : d_) min_pivot_ = std::min(min_pivot_, std::abs(v));
        inv_d_.resize(n);
        for (int i = 0; i < n; ++i) inv_d_[i] = T(1) / d_[i];
    }

    /// Overwrites b with the solution of A x = b.
    void solve_in_place(std::span<T> b) const
    {
        const int n = static_cast<int>(d_.size());
        require(static_cast<int>(b.size()) == n, "TridiagLU::solve: length mismatch");
        for (int i = 0; i + 1 < n; ++i) {
            if (ipiv_[i] == i) {
                b[i + 1] -= dl_[i] * b[i];
            } else {
                const T temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl_[i] * b[i];
            }
        }
        b[n - 1] *= inv_d_[n - 1];
        if (n > 1) b[n - 2] = (b[n - 2] - du_[n - 2] * b[n - 1]) * inv_d_[n - 2];
        for (int i = n - 3; i >= 0; --i) {
            b[i] = (b[i] - du_[i] * b[i + 1] - du2_[i] * b[i + 2]) * inv_d_[i];
        }
    }

    std::vector<T> solve(std::span<const T> b) const
    {
        std::vector<T> x(b.begin(), b.end());
        solve_in_place(x);
        return x;
    }

    bool singular() const { return singular_; }
    double min_pivot() const { return min_pivot_; }

private:
    std::vector<T> dl_, d_, du_, du2_, inv_d_;
    std::vector<int> ipiv_;
    bool singular_ = false;
    double min_pivot_ = 0.0;
};

/// Factor T - shift*I.
inline TridiagLU<double> factor_shifted(const SymTridiag& t, double shift = 0.0)
{
    std::vector<double> d(t.diag);
    for (auto& v : d) v -= shift;
    return TridiagLU<double>(t.off, std::move(d), t.off);
}

inline std::vector<double> solve(const SymTridiag& t, std::span<const double> rhs, double shift = 0.0)
{
    return factor_shifted(t, shift).solve(rhs);
}

} // namespace nlsbif
