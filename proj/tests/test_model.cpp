#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlsbif/model.hpp"
#include "oracles.hpp"

using namespace nlsbif;

namespace {

ModelSpec double_well()
{
    ModelSpec m;
    m.potential = {PotentialKind::double_gaussian_well, 2.0, 2.0, 1.0};
    return m;
}

Field random_field(const Grid& g, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Field f(g.n);
    for (int i = 0; i < g.n; ++i) f[i] = std::exp(-g.x[i] * g.x[i] / 4.0) * (1.0 + 0.3 * nd(rng));
    return f;
}

} // namespace

TEST(Potential, DerivativesMatchFiniteDifferences)
{
    const PotentialSpec v = double_well().potential;
    for (double x : {-3.1, -2.0, -0.4, 0.0, 0.7, 2.5}) {
        const double d = 1e-5;
        EXPECT_NEAR(v.derivative(x), (v.value(x + d) - v.value(x - d)) / (2 * d), 1e-8);
        EXPECT_NEAR(v.second_derivative(x), (v.derivative(x + d) - v.derivative(x - d)) / (2 * d), 1e-8);
    }
    EXPECT_NEAR(v.value(2.0), -2.0 * (1.0 + std::exp(-16.0)), 1e-14);
}

TEST(Potential, Validation)
{
    PotentialSpec v{PotentialKind::double_gaussian_well, -1.0, 2.0, 1.0};
    EXPECT_THROW(v.validate(), Error);
    v = {PotentialKind::double_gaussian_well, 1.0, 2.0, 0.0};
    EXPECT_THROW(v.validate(), Error);
    EXPECT_THROW(potential_kind_from_string("harmonic"), Error);
}

TEST(Model, ChargeOfSech)
{
    const Grid g = build_grid(30.0, 3000);
    Field f(g.n);
    for (int i = 0; i < g.n; ++i) f[i] = std::sqrt(2.0) / std::cosh(g.x[i]);
    EXPECT_NEAR(charge(g, f), 2.0, 1e-8);
    Field f3 = f;
    for (auto& v : f3) v *= 3.0;
    EXPECT_NEAR(charge(g, f3), 9.0 * charge(g, f), 1e-12);
    EXPECT_EQ(charge(g, Field(g.n, 0.0)), 0.0);
}

TEST(Model, LMinusTimesPhiIsResidual)
{
    const Grid g = build_grid(10.0, 400);
    const ModelSpec m = double_well();
    const Field phi = random_field(g, 5);
    const auto lin = linearization(g, m, phi, 1.3);
    const Field r = residual(g, m, phi, 1.3);
    const Field lp = lin.minus.apply(phi);
    for (int i = 0; i < g.n; ++i) EXPECT_NEAR(lp[i], r[i], 1e-12 * (1.0 + std::abs(r[i])));
    for (int i = 0; i < g.n; ++i) EXPECT_NEAR(lin.plus.diag[i] - lin.minus.diag[i], -2.0 * phi[i] * phi[i], 1e-12);
}

TEST(Model, ResidualIsGradientOfAction)
{
    const Grid g = build_grid(10.0, 400);
    const ModelSpec m = double_well();
    const Field phi = random_field(g, 7);
    const Field v = random_field(g, 8);
    const double e = 0.8;
    auto action = [&](double t) {
        Field p(g.n);
        for (int i = 0; i < g.n; ++i) p[i] = phi[i] + t * v[i];
        const auto f = energy(g, m, p);
        return f.energy + e * f.charge;
    };
    const double step = 1e-4;
    const double fd = (action(step) - action(-step)) / (2 * step);
    const double pairing = inner_product(g, residual(g, m, phi, e), v);
    EXPECT_NEAR(fd, pairing, 1e-7 * std::abs(pairing));
}

TEST(Model, ResidualIsEvenForEvenStates)
{
    const Grid g = build_grid(10.0, 401);
    const ModelSpec m = double_well();
    Field phi(g.n), odd(g.n);
    for (int i = 0; i < g.n; ++i) {
        phi[i] = std::exp(-g.x[i] * g.x[i]);
        odd[i] = g.x[i] * phi[i];
    }
    const Field r = residual(g, m, phi, 1.0), ro = residual(g, m, odd, 1.0);
    const Field mr = mirror(r), mro = mirror(ro);
    for (int i = 0; i < g.n; ++i) {
        EXPECT_NEAR(mr[i], r[i], 1e-12);
        EXPECT_NEAR(mro[i], -ro[i], 1e-12);
    }
}

TEST(Model, SolitonResidualConvergesAtSecondOrder)
{
    ModelSpec m;
    double prev = 0.0;
    for (int n : {999, 1999, 3999}) {
        const Grid g = build_grid(20.0, n);
        const double r = sup_norm(residual(g, m, soliton_field(g, 1.0, m.gamma, m.power), 1.0));
        if (prev > 0.0) EXPECT_NEAR(prev / r, 4.0, 0.2);
        prev = r;
    }
}

TEST(Model, PohozaevOfSolitonVanishesAtSecondOrder)
{
    ModelSpec m;
    double prev = 0.0;
    for (int n : {499, 999, 1999}) {
        const Grid g = build_grid(20.0, n);
        const double r = std::abs(pohozaev_residual(g, m, soliton_field(g, 1.0, m.gamma, m.power), 1.0));
        if (prev > 0.0) EXPECT_GT(prev / r, 3.5);
        prev = r;
    }
    EXPECT_LT(prev, 1e-4);
    EXPECT_EQ(pohozaev_residual(build_grid(5.0, 10), m, Field(10, 0.0), 1.0), 0.0);
}

TEST(Model, SolitonClosedForm)
{
    // p=2, gamma=-1: sqrt(2E) sech(sqrt(E) x); charge 2 sqrt(E).
    EXPECT_NEAR(soliton_profile(0.0, 4.0, -1.0, 2.0), std::sqrt(8.0), 1e-14);
    EXPECT_NEAR(soliton_profile(0.5, 4.0, -1.0, 2.0), std::sqrt(8.0) / std::cosh(1.0), 1e-14);
    const Grid g = build_grid(20.0, 8000);
    EXPECT_NEAR(charge(g, soliton_field(g, 4.0, -1.0, 2.0)), 4.0, 1e-5);
}

TEST(Model, FunctionalsAddUp)
{
    const Grid g = build_grid(10.0, 300);
    const ModelSpec m = double_well();
    const Field phi = random_field(g, 9);
    const auto f = energy(g, m, phi);
    EXPECT_NEAR(f.energy, f.kinetic + f.potential + f.nonlinear, 1e-12);
    double s4 = 0.0;
    for (double v : phi) s4 += v * v * v * v;
    EXPECT_NEAR(f.nonlinear, -0.25 * g.h * s4, 1e-12);
}
