#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "model.hpp"

namespace nlsbif {

/// Scaled functionals of a state phi_E in dimension n:
///   s_nl = ||phi||_{p+2}^{p+2} / E^{2/p+1-n/2}
///   s_Q  = ||phi||_2^2         / E^{2/p-n/2}
///   s_K  = ||phi'||_2^2        / E^{2/p+1-n/2}
/// Note s_Q uses the squared L2 norm, i.e. twice the charge Q.
struct ScalingRow {
    double E = 0.0;
    double s_nl = 0.0;
    double s_Q = 0.0;
    double s_K = 0.0;
    double r_Q = 0.0;
    double r_K = 0.0;
};

inline ScalingRow scaling_row(const Grid& g, const ModelSpec& m, const Field& phi, double energy_param, double dim = 1.0)
{
    require(energy_param > 0.0, "scaling_row: E must be > 0");
    const double p = m.power;
    double nl = 0.0;
    for (double v : phi) nl += detail::pow_abs(v, p + 2.0);
    nl *= g.h;
    const double l2 = l2_norm(g, phi);
    ScalingRow r;
    r.E = energy_param;
    r.s_nl = nl / std::pow(energy_param, 2.0 / p + 1.0 - dim / 2.0);
    r.s_Q = l2 * l2 / std::pow(energy_param, 2.0 / p - dim / 2.0);
    r.s_K = gradient_norm2(g, phi) / std::pow(energy_param, 2.0 / p + 1.0 - dim / 2.0);
    r.r_Q = r.s_Q / r.s_nl;
    r.r_K = r.s_K / r.s_nl;
    return r;
}

/// Large-E limits of the ratios for coupling gamma < 0:
///   r_Q -> ((2-n) p + 4) / (2p + 4),  r_K -> n p / (2p + 4).
inline double limit_ratio_Q(double p, double dim = 1.0) { return ((2.0 - dim) * p + 4.0) / (2.0 * p + 4.0); }
inline double limit_ratio_K(double p, double dim = 1.0) { return dim * p / (2.0 * p + 4.0); }

struct ScalingFit {
    double r_Q = 0.0;
    double r_K = 0.0;
    double E_lo = 0.0; // the two E values used
    double E_hi = 0.0;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    ScalingFit fit;
};

/// Two-point Richardson extrapolation in 1/E: r(inf) = (E2 r2 - E1 r1)/(E2 - E1).
inline double richardson_inverse_E(double e1, double r1, double e2, double r2)
{
    return (e2 * r2 - e1 * r1) / (e2 - e1);
}

/// Rows sorted by E; limits from the two largest distinct E.
inline ScalingReport scaling_diagnostics(std::vector<ScalingRow> rows)
{
    std::sort(rows.begin(), rows.end(), [](const ScalingRow& a, const ScalingRow& b) { return a.E < b.E; });
    if (rows.size() < 2 || !(rows.back().E >= 10.0 * rows.front().E)) {
        fail(ErrorKind::insufficient_range, "scaling diagnostics need E spanning at least one decade");
    }
    ScalingReport rep;
    rep.rows = rows;
    const auto& a = rows[rows.size() - 2];
    const auto& b = rows.back();
    require(b.E > a.E, "scaling diagnostics: duplicate top E values");
    rep.fit.E_lo = a.E;
    rep.fit.E_hi = b.E;
    rep.fit.r_Q = richardson_inverse_E(a.E, a.r_Q, b.E, b.r_Q);
    rep.fit.r_K = richardson_inverse_E(a.E, a.r_K, b.E, b.r_K);
    return rep;
}

struct RescaledProfile {
    Grid ref;
    Field psi;
    double coverage = 1.0; // fraction of reference nodes whose preimage lies inside the domain
};

/// psi(y) = E^{-1/p} phi(E^{-1/2} y + x0), by cubic interpolation onto a
/// reference grid; preimages outside the domain are zero-filled.
inline RescaledProfile rescale_profile(const Grid& g, const Field& phi, double energy_param, double x0, double power, double ref_L = 20.0,
                                       int ref_N = 2000)
{
    require(energy_param > 0.0, "rescale_profile: E must be > 0");
    require(std::abs(x0) < g.half_width, "rescale_profile: center outside the domain");
    detail::check_len(g, phi.size(), "rescale_profile");
    RescaledProfile r;
    r.ref = build_grid(ref_L, ref_N);
    r.psi.resize(ref_N);
    const double amp = std::pow(energy_param, -1.0 / power);
    const double stretch = 1.0 / std::sqrt(energy_param);
    int inside = 0;
    for (int i = 0; i < ref_N; ++i) {
        const double x = stretch * r.ref.x[i] + x0;
        if (std::abs(x) < g.half_width) ++inside;
        r.psi[i] = amp * interpolate_cubic(g, phi, x);
    }
    r.coverage = static_cast<double>(inside) / ref_N;
    return r;
}

/// sup norm of -psi'' + psi + gamma |psi|^p psi on the reference grid.
inline double limit_profile_residual(const Grid& ref, const Field& psi, const ModelSpec& m)
{
    detail::check_len(ref, psi.size(), "limit_profile_residual");
    Field r = laplacian_apply(ref, psi);
    for (int i = 0; i < ref.n; ++i) r[i] += psi[i] + m.gamma * detail::pow_abs(psi[i], m.power) * psi[i];
    return sup_norm(r);
}

/// Grid H1 distance from psi to the limit soliton centered at 0.
inline double limit_profile_distance(const Grid& ref, const Field& psi, const ModelSpec& m)
{
    const Field s = soliton_field(ref, 1.0, m.gamma, m.power);
    Field d(ref.n);
    for (int i = 0; i < ref.n; ++i) d[i] = psi[i] - s[i];
    return h1_norm(ref, d);
}

enum class CriticalKind { minimum, maximum, degenerate };

inline const char* to_string(CriticalKind k)
{
    switch (k) {
    case CriticalKind::minimum: return "minimum";
    case CriticalKind::maximum: return "maximum";
    case CriticalKind::degenerate: return "degenerate";
    }
    return "degenerate";
}

struct CriticalPoint {
    double x = 0.0;
    CriticalKind kind = CriticalKind::degenerate;
};

struct Placement {
    CriticalPoint point;
    int count = 1; // profiles concentrating there
};

/// k + sum n_j over profiles; n_j = 0 at a minimum, 1 at a maximum (1D).
inline int predicted_morse(const std::vector<Placement>& placements)
{
    int k = 0, n = 0;
    for (const auto& pl : placements) {
        if (pl.point.kind == CriticalKind::degenerate) {
            fail(ErrorKind::unsupported, "profile at a degenerate critical point of V");
        }
        require(pl.count >= 1, "placement count must be >= 1");
        k += pl.count;
        if (pl.point.kind == CriticalKind::maximum) n += pl.count;
    }
    return k + n;
}

/// Critical points of V on [-L, L], from sign changes of V' on a fine sample
/// refined by bisection. |V''| below curv_tol marks the point degenerate.
inline std::vector<CriticalPoint> critical_points(const PotentialSpec& v, double half_width, double curv_tol = 1e-8, int samples = 20001)
{
    std::vector<CriticalPoint> out;
    if (v.kind == PotentialKind::zero || v.depth == 0.0) return out;
    const double dx = 2.0 * half_width / (samples - 1);
    double xa = -half_width;
    double fa = v.derivative(xa);
    for (int i = 1; i < samples; ++i) {
        const double xb = -half_width + i * dx;
        const double fb = v.derivative(xb);
        double root = 0.0;
        bool found = false;
        if (fb == 0.0) {
            root = xb;
            found = true;
        } else if (fa != 0.0 && (fa < 0.0) != (fb < 0.0)) {
            double lo = xa, hi = xb, flo = fa;
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = v.derivative(mid);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            root = 0.5 * (lo + hi);
            found = true;
        }
        // Far tails of Gaussians underflow to exact zeros; skip those.
        if (found && std::abs(v.value(root)) > 1e-12 * v.depth) {
            const double c = v.second_derivative(root);
            CriticalPoint cp;
            cp.x = root;
            cp.kind = std::abs(c) <= curv_tol ? CriticalKind::degenerate : (c > 0.0 ? CriticalKind::minimum : CriticalKind::maximum);
            if (out.empty() || std::abs(out.back().x - root) > 10.0 * dx) out.push_back(cp);
        }
        xa = xb;
        fa = fb;
    }
    return out;
}

/// Local maxima of |phi| above `threshold` times the global maximum, each
/// assigned to the nearest critical point of V.
inline std::vector<Placement> infer_placement(const Grid& g, const Field& phi, const PotentialSpec& v, double threshold = 0.1)
{
    const auto cps = critical_points(v, g.half_width);
    if (cps.empty()) {
        fail(ErrorKind::unsupported, "potential has no isolated critical points");
    }
    double gmax = 0.0;
    for (double f : phi) gmax = std::max(gmax, std::abs(f));
    require(gmax > 0.0, "infer_placement of the zero field");
    std::vector<Placement> out;
    for (int i = 0; i < g.n; ++i) {
        const double a = std::abs(phi[i]);
        const double left = i > 0 ? std::abs(phi[i - 1]) : 0.0;
        const double right = i + 1 < g.n ? std::abs(phi[i + 1]) : 0.0;
        if (a < threshold * gmax || a < left || a <= right) continue;
        int best = 0;
        for (int j = 1; j < static_cast<int>(cps.size()); ++j) {
            if (std::abs(cps[j].x - g.x[i]) < std::abs(cps[best].x - g.x[i])) best = j;
        }
        bool merged = false;
        for (auto& pl : out) {
            if (pl.point.x == cps[best].x) {
                // Plateau or double peak on the same critical point.
                merged = true;
            }
        }
        if (!merged) out.push_back({cps[best], 1});
    }
    return out;
}

} // namespace nlsbif
