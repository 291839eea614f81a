#include <gtest/gtest.h>

#include <cmath>

#include "nlsbif/diagram.hpp"
#include "nlsbif/suites.hpp"
#include "oracles.hpp"

using namespace nlsbif;

namespace {

struct Small {
    Grid g = build_grid(20.0, 800);
    ModelSpec m;
    Diagram d;
    Small()
    {
        m.potential = {PotentialKind::double_gaussian_well, 2.0, 2.0, 1.0};
        DiagramOptions o;
        o.controls.E_max = 5.0;
        d = run_diagram(g, m, o);
    }
};

const Small& small()
{
    static const Small s;
    return s;
}

} // namespace

TEST(Diagram, TrivialEventAtLowestLinearLevel)
{
    const auto& s = small();
    ASSERT_FALSE(s.d.failure.has_value());
    const auto ev = oracle::eigenvalues(schrodinger_operator(s.g, potential_eval(s.m.potential, s.g), 0.0));
    EXPECT_NEAR(s.d.e0, -ev(0), 1e-10);
    int found = 0;
    for (const auto& e : s.d.events) {
        if (e.kind == EventKind::trivial_branch_pitchfork && e.crossing_index == 0) {
            ++found;
            EXPECT_NEAR(e.refined.E, -ev(0), 1e-7);
            EXPECT_EQ(e.kernel_parity, Parity::even);
        }
    }
    EXPECT_EQ(found, 1);
}

TEST(Diagram, OneOddPitchforkOnTheSymmetricBranch)
{
    const auto& s = small();
    const auto roles = identify_roles(s.d);
    ASSERT_GE(roles.symmetric, 0);
    ASSERT_GE(roles.pitchfork_event, 0);
    const auto& ev = s.d.events[roles.pitchfork_event];
    EXPECT_EQ(ev.kind, EventKind::pitchfork_symmetry_breaking);
    EXPECT_EQ(ev.kernel_parity, Parity::odd);
    EXPECT_EQ(ev.crossing, CrossingOperator::l_plus);
    EXPECT_NEAR(ev.crossing_eigenvalue, 0.0, 1e-6);
    EXPECT_EQ(ev.child_branches.size(), 2u);
    ASSERT_EQ(roles.asymmetric.size(), 2u);
    // Symmetric branch stays even; children break the symmetry.
    for (const auto& p : s.d.branches[roles.symmetric].points) EXPECT_LT(p.asymmetry, 1e-6);
    for (int id : roles.asymmetric) EXPECT_GT(s.d.branches[id].points.back().asymmetry, 0.5);
}

TEST(Diagram, ChildrenAreMirrorImages)
{
    const auto& s = small();
    const auto roles = identify_roles(s.d);
    ASSERT_EQ(roles.asymmetric.size(), 2u);
    const auto& a = s.d.branches[roles.asymmetric[0]];
    const auto& b = s.d.branches[roles.asymmetric[1]];
    ASSERT_EQ(a.points.size(), b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        EXPECT_NEAR(a.points[i].E, b.points[i].E, 1e-8);
        const Field mb = mirror(b.points[i].phi);
        double d = 0.0;
        for (int k = 0; k < s.g.n; ++k) d = std::max(d, std::abs(mb[k] - a.points[i].phi[k]));
        EXPECT_LT(d, 1e-6);
    }
}

TEST(Diagram, SwitchSeedsSolveTheEquation)
{
    const auto& s = small();
    const auto roles = identify_roles(s.d);
    const auto& ev = s.d.events[roles.pitchfork_event];
    ASSERT_EQ(ev.seeds.size(), 2u);
    for (const auto& seed : ev.seeds) EXPECT_LE(sup_norm(residual(s.g, s.m, seed.phi, seed.E)), 1e-8);
}

TEST(Diagram, BudgetLimitsBranches)
{
    const Grid g = build_grid(20.0, 800);
    ModelSpec m;
    m.potential = {PotentialKind::double_gaussian_well, 2.0, 2.0, 1.0};
    DiagramOptions o;
    o.controls.E_max = 3.0;
    o.budget = 2;
    const auto d = run_diagram(g, m, o);
    EXPECT_LE(d.branches.size(), 2u);
    EXPECT_TRUE(d.budget_exhausted);
}

TEST(Diagram, NoBoundStateIsReported)
{
    const Grid g = build_grid(10.0, 200);
    try {
        run_diagram(g, ModelSpec{}, DiagramOptions{});
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::no_linear_bound_state);
    }
}

TEST(Detect, MorseChangesAndReversals)
{
    Branch b;
    const double es[] = {1.0, 1.1, 1.2, 1.15, 1.1};
    const int mp[] = {1, 1, 2, 2, 2};
    for (int i = 0; i < 5; ++i) {
        BranchPoint p;
        p.E = es[i];
        p.spectral.morse_plus = mp[i];
        b.points.push_back(p);
    }
    const auto br = detect_events(b);
    ASSERT_EQ(br.size(), 1u);
    EXPECT_EQ(br[0].index_lo, 1);
    EXPECT_EQ(br[0].index_hi, 2);
    EXPECT_EQ(br[0].op, CrossingOperator::l_plus);
    EXPECT_EQ(br[0].crossing_index, 1);
    EXPECT_TRUE(br[0].tangent_flip);

    b.points[2].spectral.morse_plus = 1;
    b.points[3].spectral.morse_plus = 1;
    b.points[4].spectral.morse_plus = 1;
    const auto fold = detect_events(b);
    ASSERT_EQ(fold.size(), 1u);
    EXPECT_TRUE(fold[0].tangent_flip);
    EXPECT_EQ(fold[0].op, CrossingOperator::none);
}
