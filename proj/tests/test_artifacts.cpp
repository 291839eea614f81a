#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "nlsbif/artifacts.hpp"

using namespace nlsbif;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("nlsbif_test_" + name);
    fs::remove_all(p);
    return p;
}

RunConfig small_config()
{
    RunConfig c;
    c.L = 20.0;
    c.N = 600;
    c.controls.E_max = 3.0;
    c.profile_stride = 4;
    return c;
}

} // namespace

TEST(Csv, NumbersRoundTripExactly)
{
    for (double v : {0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0, -0.0, 1e308}) EXPECT_EQ(parse_double(fmt(v)), v);
    EXPECT_TRUE(std::isnan(parse_double(fmt(std::numeric_limits<double>::quiet_NaN()))));
    EXPECT_EQ(parse_double(fmt(std::numeric_limits<double>::infinity())), std::numeric_limits<double>::infinity());
    EXPECT_THROW(parse_double("1.5x"), Error);
    EXPECT_THROW(parse_double(""), Error);
}

TEST(Csv, BranchHeaderIsFixed)
{
    EXPECT_STREQ(kBranchHeader, "index,E,Q,energy,kinetic,potential,nonlinear,morse_plus,morse_minus,lambda_min_plus,"
                                "lambda_min_minus,slope_dQdE,pohozaev,asymmetry,stability");
}

TEST(Csv, BranchAndProfileRoundTrip)
{
    const RunConfig c = small_config();
    const Diagram d = run_diagram(c.grid(), c.model, c.diagram_options());
    ASSERT_GE(d.branches.size(), 2u);
    for (const auto& b : d.branches) {
        const std::string text = branch_csv(b);
        const auto pts = parse_branch_csv(text);
        ASSERT_EQ(pts.size(), b.points.size());
        Branch again = b;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            EXPECT_EQ(pts[i].E, b.points[i].E);
            EXPECT_EQ(pts[i].Q(), b.points[i].Q());
            EXPECT_EQ(pts[i].spectral.morse_plus, b.points[i].spectral.morse_plus);
            EXPECT_EQ(pts[i].stability.value, b.points[i].stability.value);
            again.points[i] = pts[i];
        }
        EXPECT_EQ(branch_csv(again), text);
    }
    const Grid g = c.grid();
    const Field& phi = d.branches[1].points.back().phi;
    const Profile p = parse_profile_csv(profile_csv(g, phi));
    EXPECT_EQ(p.phi, phi);
    EXPECT_EQ(profile_on_grid(p, g), phi);
}

TEST(Csv, ProfileOnAnotherGridIsInterpolated)
{
    const Grid a = build_grid(10.0, 999), b = build_grid(10.0, 1999);
    Field f(a.n);
    for (int i = 0; i < a.n; ++i) f[i] = std::exp(-a.x[i] * a.x[i]);
    const Field on_b = profile_on_grid(parse_profile_csv(profile_csv(a, f)), b);
    // Linear interpolation: error below h^2/8 max|f''| = 1e-4.
    for (int i = 0; i < b.n; ++i) EXPECT_NEAR(on_b[i], std::exp(-b.x[i] * b.x[i]), 1e-4);
}

TEST(Csv, MalformedInputIsRejected)
{
    EXPECT_THROW(parse_branch_csv("index,E\n0,1\n"), Error);
    EXPECT_THROW(parse_profile_csv("x,phi\n0.0\n"), Error);
}

TEST(Diagram, WriteAndLoad)
{
    const RunConfig c = small_config();
    const Diagram d = run_diagram(c.grid(), c.model, c.diagram_options());
    const fs::path dir = scratch("roundtrip");
    write_diagram(dir, d, c);
    EXPECT_TRUE(fs::exists(dir / "events.json"));
    EXPECT_TRUE(fs::exists(dir / "diagram_summary.csv"));
    EXPECT_FALSE(fs::exists(dir / "failure.json"));
    const auto ld = load_diagram(dir);
    ASSERT_EQ(ld.branches.size(), d.branches.size());
    ASSERT_EQ(ld.events.size(), d.events.size());
    EXPECT_EQ(ld.e0, d.e0);
    for (std::size_t b = 0; b < d.branches.size(); ++b) {
        const auto& src = d.branches[b];
        const auto& got = ld.branches[b];
        ASSERT_EQ(got.points.size(), src.points.size());
        EXPECT_TRUE(ld.has_profile[b][0]);
        EXPECT_TRUE(ld.has_profile[b].back());
        for (std::size_t i = 0; i < src.points.size(); ++i) {
            if (ld.has_profile[b][i]) EXPECT_EQ(got.points[i].phi, src.points[i].phi);
            // Stability changes keep the profiles on both sides.
            if (i > 0 && src.points[i].stability.value != src.points[i - 1].stability.value) {
                EXPECT_TRUE(ld.has_profile[b][i]);
                EXPECT_TRUE(ld.has_profile[b][i - 1]);
            }
        }
        EXPECT_EQ(got.parent_event, src.parent_event);
    }
    for (std::size_t e = 0; e < d.events.size(); ++e) {
        EXPECT_EQ(ld.events[e].kind, d.events[e].kind);
        EXPECT_EQ(ld.events[e].refined.E, d.events[e].refined.E);
    }
    const auto pb = profiled_branches(ld);
    for (const auto& b : pb) {
        for (const auto& p : b.points) EXPECT_EQ(static_cast<int>(p.phi.size()), ld.grid.n);
    }
}

TEST(Diagram, LoadWithoutArtifactsIsAMissingPrerequisite)
{
    try {
        load_diagram(scratch("missing"));
        FAIL() << "expected an error";
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
    }
}

TEST(Diagram, AtomicWriteLeavesNoTemporaries)
{
    const fs::path dir = scratch("atomic");
    atomic_write(dir / "a" / "b.txt", "hello\n");
    EXPECT_EQ(read_text(dir / "a" / "b.txt"), "hello\n");
    int files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "a")) ++files;
    EXPECT_EQ(files, 1);
}

TEST(Config, DefaultsRoundTrip)
{
    const RunConfig c;
    const json j = to_json(c);
    EXPECT_EQ(to_json(config_from_json(j)), j);
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, UnknownKeysAreRejected)
{
    EXPECT_THROW(config_from_json(json::parse(R"({"grid": {"L": 30, "n": 100}})")), Error);
    EXPECT_THROW(config_from_json(json::parse(R"({"gird": {}})")), Error);
    EXPECT_THROW(config_from_json(json::parse(R"({"model": {"potential": {"kind": "harmonic"}}})")), Error);
}

TEST(Config, WrongTypesAreRejected)
{
    EXPECT_THROW(config_from_json(json::parse(R"({"grid": {"N": "many"}})")), Error);
    EXPECT_THROW(config_from_json(json::parse(R"({"budget": [1]})")), Error);
}

TEST(Config, SeedsAreExclusive)
{
    EXPECT_THROW(config_from_json(json::parse(R"({"seeds": {"soliton": {"E": 1.0}}})")), Error);
    RunConfig c = config_from_json(json::parse(R"({"seeds": {"trivial": false, "soliton": {"E": 2.0, "center": 1.0}}})"));
    EXPECT_NO_THROW(c.validate());
    EXPECT_EQ(*c.seeds.soliton_E, 2.0);
    EXPECT_THROW(config_from_json(json::parse(R"({"seeds": {"trivial": false}})")), Error);
}

TEST(Config, ValuesAreRead)
{
    const auto c = config_from_json(json::parse(
        R"({"grid": {"L": 12.5, "N": 77}, "model": {"potential": {"kind": "single_gaussian_well", "a": 3}, "gamma": -2, "p": 3},
            "continuation": {"E_max": 9}, "budget": 3, "seed": 99, "output": {"profile_stride": 2}})"));
    EXPECT_EQ(c.L, 12.5);
    EXPECT_EQ(c.N, 77);
    EXPECT_EQ(c.model.potential.kind, PotentialKind::single_gaussian_well);
    EXPECT_EQ(c.model.potential.depth, 3.0);
    EXPECT_EQ(c.model.gamma, -2.0);
    EXPECT_EQ(c.model.power, 3.0);
    EXPECT_EQ(c.controls.E_max, 9.0);
    EXPECT_EQ(c.budget, 3);
    EXPECT_EQ(c.seed, 99u);
    EXPECT_EQ(c.profile_stride, 2);
    EXPECT_EQ(c.probe_options().seed, 99u);
    EXPECT_EQ(c.diagram_options().budget, 3);
}

TEST(Reports, OverallVerdict)
{
    EXPECT_TRUE(report_json("s", {{"a", true, ""}})["pass"].get<bool>());
    EXPECT_FALSE(report_json("s", {{"a", true, ""}, {"b", false, "x"}})["pass"].get<bool>());
}
