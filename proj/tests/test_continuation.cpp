#include <gtest/gtest.h>

#include <cmath>

#include "nlsbif/continuation.hpp"

using namespace nlsbif;

namespace {

Branch free_branch(double e_max, const Grid& g)
{
    ModelSpec m;
    ContinuationControls c;
    c.E_max = e_max;
    c.E_min = 0.5;
    c.ds_max = 0.5;
    c.spectral.translation_invariant = true;
    const auto sol = newton_fixed_E(g, m, soliton_field(g, 1.0, m.gamma, m.power), 1.0);
    return trace_branch(g, m, make_point(g, m, sol.phi, 1.0, c.spectral), 1, c);
}

} // namespace

TEST(Trace, FreeSolitonFamily)
{
    const Grid g = build_grid(15.0, 1500);
    const Branch b = free_branch(4.0, g);
    ASSERT_GE(b.points.size(), 5u);
    EXPECT_EQ(b.termination, Termination::e_max_reached);
    EXPECT_DOUBLE_EQ(b.points.back().E, 4.0);
    for (std::size_t i = 0; i < b.points.size(); ++i) {
        const auto& p = b.points[i];
        EXPECT_NEAR(p.Q(), 2.0 * std::sqrt(p.E), 2e-3 * p.Q());
        EXPECT_EQ(p.spectral.morse_plus, 1);
        EXPECT_EQ(p.spectral.morse_minus, 0);
        EXPECT_LE(p.residual_norm, 1e-8);
        EXPECT_LT(p.asymmetry, 1e-8);
        if (i > 0) {
            EXPECT_GT(p.E, b.points[i - 1].E);
            EXPECT_GT(p.arclength, b.points[i - 1].arclength);
        }
        // dQ/dE = 1/sqrt(E) for the exact family.
        EXPECT_NEAR(p.slope_dQdE, 1.0 / std::sqrt(p.E), 5e-3);
    }
}

TEST(Trace, StepsRespectControls)
{
    const Grid g = build_grid(15.0, 1500);
    const Branch b = free_branch(3.0, g);
    for (std::size_t i = 1; i < b.points.size(); ++i) EXPECT_LE(extended_distance(g, b.points[i - 1], b.points[i]), 0.5 * 1.05);
}

TEST(Trace, BackwardStopsAtEMin)
{
    const Grid g = build_grid(15.0, 1500);
    ModelSpec m;
    ContinuationControls c;
    c.E_min = 0.5;
    c.spectral.translation_invariant = true;
    const auto sol = newton_fixed_E(g, m, soliton_field(g, 1.0, m.gamma, m.power), 1.0);
    const Branch b = trace_branch(g, m, make_point(g, m, sol.phi, 1.0, c.spectral), -1, c);
    EXPECT_EQ(b.termination, Termination::e_min_reached);
    EXPECT_DOUBLE_EQ(b.points.back().E, 0.5);
}

TEST(Trace, PointAtExactE)
{
    const Grid g = build_grid(15.0, 1500);
    const Branch b = free_branch(3.0, g);
    ContinuationControls c;
    const auto p = point_at_E(g, ModelSpec{}, b, 2.345, c);
    EXPECT_DOUBLE_EQ(p.E, 2.345);
    EXPECT_NEAR(p.Q(), 2.0 * std::sqrt(2.345), 3e-3);
}

TEST(Trace, ControlsValidation)
{
    ContinuationControls c;
    c.ds_min = 1.0;
    c.ds_init = 0.1;
    EXPECT_THROW(c.validate(), Error);
}

TEST(Points, ZeroFieldAndAsymmetry)
{
    EXPECT_TRUE(is_zero_field(Field(5, 0.0)));
    EXPECT_FALSE(is_zero_field(Field{0.0, 1e-3, 0.0}));
    const Grid g = build_grid(5.0, 101);
    Field e(g.n), s(g.n);
    for (int i = 0; i < g.n; ++i) {
        e[i] = std::exp(-g.x[i] * g.x[i]);
        s[i] = std::exp(-(g.x[i] - 2) * (g.x[i] - 2));
    }
    EXPECT_LT(asymmetry_of(g, e), 1e-12);
    EXPECT_GT(asymmetry_of(g, s), 1.0);
    EXPECT_LE(asymmetry_of(g, s), std::sqrt(2.0) + 1e-12);
}
