#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>

#include "plastsym/diegeom.hpp"
#include "plastsym/figures.hpp"
#include "plastsym/solutions.hpp"

using namespace plastsym;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("plastsym_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int count_substr(const std::string& hay, const std::string& needle) {
    int n = 0;
    for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
    return n;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(FlowLines, RigidRotationClosesAfterOneTurn) {
    auto s = make_solution("RIGID");
    const int n = 6284;
    auto p = trace_flow_line(s, {1.0, 0.0}, 2 * std::numbers::pi / n, n);
    ASSERT_EQ(p.points.size(), static_cast<std::size_t>(n + 1));
    for (const auto& q : p.points) EXPECT_NEAR(std::hypot(q[0], q[1]), 1.0, 1e-12);
    EXPECT_LT(std::hypot(p.points.back()[0] - 1.0, p.points.back()[1]), 1e-10);
    // clockwise: u = y, v = -x
    EXPECT_LT(p.points[1][1], 0.0);
}

TEST(FlowLines, MulCFollowsCircles) {
    auto s = make_solution("SIM_C1Z_MUL_C");
    auto p = trace_flow_line(s, {1.0, 0.5}, 1e-3, 1500);
    const double r0 = std::hypot(1.0, 0.5);
    for (const auto& q : p.points) EXPECT_NEAR(std::hypot(q[0], q[1]), r0, 1e-9);
    EXPECT_LT(tangency_error(p, s), 1e-6);
}

TEST(FlowLines, KPisSquaredRadiusIsLinearInAngle) {
    // with c4 = c5 = 0: dr/dt = c2/r, dphi/dt = -c3, so r^2 + phi stays fixed for c2 = -1, c3 = -2
    auto s = make_solution("K_PIS", {{"c4", 0.0}, {"c5", 0.0}});
    auto p = trace_flow_line(s, {1.0, 0.3}, 1e-3, 600);
    double phi = std::atan2(0.3, 1.0), prev = phi;
    const double c0 = 1.09 + phi;
    for (const auto& q : p.points) {
        double a = std::atan2(q[1], q[0]);
        while (a - prev > std::numbers::pi) a -= 2 * std::numbers::pi;
        while (a - prev < -std::numbers::pi) a += 2 * std::numbers::pi;
        prev = a;
        EXPECT_NEAR(q[0] * q[0] + q[1] * q[1] + a, c0, 1e-9);
    }
}

TEST(FlowLines, StagnationAndDomainErrors) {
    auto s = make_solution("RIGID");
    EXPECT_THROW(trace_flow_line(s, {0.0, 0.0}, 1e-2, 10), TraceError);
    auto k = make_solution("K_PIS");
    EXPECT_THROW(trace_flow_line(k, {0.0, 0.0}, 1e-2, 10), TraceError);
    EXPECT_THROW(trace_flow_line(s, {1.0, 0.0}, 1e-2, 10, 0), std::invalid_argument);
}

TEST(FlowLines, BackwardRunsAgainstVelocity) {
    auto s = make_solution("RIGID");
    auto p = trace_flow_line(s, {1.0, 0.0}, 1e-2, 5, -1);
    EXPECT_GT(p.points[1][1], 0.0);
}

TEST(LimitCurves, NearStagnationAtStart) {
    auto s = make_solution("RIGID");
    // velocity at (-1, 1) is (1, 1)
    EXPECT_THROW(trace_plasticity_limit(s, {1.0, 1.0}, {-1.0, 1.0}, 1e-2, 10), NearStagnation);
    EXPECT_THROW(trace_plasticity_limit(s, {0.0, 0.0}, {1.0, 1.0}, 1e-2, 10), std::invalid_argument);
}

TEST(LimitCurves, StillMaterialGivesStraightLineAlongFeed) {
    auto s = make_solution("RIGID", {{"b1", 0.0}});
    auto p = trace_plasticity_limit(s, {1.0, 1.0}, {0.2, -0.1}, 1e-2, 100);
    for (const auto& q : p.points) EXPECT_NEAR(q[1] - q[0], -0.3, 1e-13);
    EXPECT_LT(limit_slope_residual(p, s, {1.0, 1.0}), 1e-12);
}

TEST(LimitCurves, SlopeMatchesRelativeVelocity) {
    auto s = make_solution("K_PIS");
    FeedVelocity f{5.5, 0.0};
    auto p = trace_plasticity_limit(s, f, {-0.5, -0.8}, 1e-3, 500);
    EXPECT_LT(limit_slope_residual(p, s, f), 1e-8);
}

TEST(SlipLines, BranchesAreOrthogonal) {
    auto s = make_solution("K_PIS");
    const Vec2 start{0.8, 0.6};
    auto a = trace_slip_line(s, start, SlipBranch::A, 1e-3, 20);
    auto b = trace_slip_line(s, start, SlipBranch::B, 1e-3, 20);
    auto ta = tangent_at(a, 0), tb = tangent_at(b, 0);
    EXPECT_NEAR((ta[0] * tb[0] + ta[1] * tb[1]) / (std::hypot(ta[0], ta[1]) * std::hypot(tb[0], tb[1])), 0.0, 1e-9);
}

TEST(SlipLines, UniformQuarterPiFieldGivesDiagonals) {
    auto s = make_solution("RIGID", {{"theta0", std::numbers::pi / 4}});
    auto a = trace_slip_line(s, {0.0, 0.0}, SlipBranch::A, 1e-2, 50);
    auto b = trace_slip_line(s, {0.0, 0.0}, SlipBranch::B, 1e-2, 50);
    for (const auto& q : a.points) EXPECT_NEAR(q[1], q[0], 1e-13);
    for (const auto& q : b.points) EXPECT_NEAR(q[1], -q[0], 1e-13);
    EXPECT_NEAR(a.length(), 0.5, 1e-12);
}

TEST(SlipLines, RadialForPolarAngleField) {
    auto s = make_solution("SIM_C1Z_ADD_A");
    auto a = trace_slip_line(s, {1.0, 0.5}, SlipBranch::A, 1e-3, 400);
    for (const auto& q : a.points) EXPECT_NEAR(q[1] / q[0], 0.5, 1e-10);
    auto b = trace_slip_line(s, {1.0, 0.5}, SlipBranch::B, 1e-3, 400);
    for (const auto& q : b.points) EXPECT_NEAR(std::hypot(q[0], q[1]), std::hypot(1.0, 0.5), 1e-9);
}

TEST(Intersections, CrossingDiagonals) {
    Polyline a, b;
    a.points = {{-1, -1}, {0, 0}, {1, 1}};
    b.points = {{-1, 1}, {1, -1}};
    auto c = intersections(a, b);
    ASSERT_EQ(c.size(), 1u);
    EXPECT_NEAR(c[0].point[0], 0.0, 1e-15);
    EXPECT_NEAR(distance_to(a, {1.0, 0.0}), std::sqrt(0.5), 1e-15);
}

TEST(Export, CsvRoundTripIsBitExact) {
    auto dir = scratch_dir("csv");
    auto s = make_solution("K_PIS");
    auto p = trace_flow_line(s, {0.5, 0.5}, 1e-3, 200);
    p.id = "fl";
    Polyline two;
    two.id = "two";
    two.kind = CurveKind::limit;
    two.points = {{0.1, 1.0 / 3.0}, {std::numbers::pi, -1e-300}};
    export_csv({p, two}, (dir / "a.csv").string());
    auto back = read_csv((dir / "a.csv").string());
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].points, p.points);
    EXPECT_EQ(back[1].points, two.points);
    EXPECT_EQ(back[1].kind, CurveKind::limit);
    export_csv({two}, (dir / "two.csv").string());
    EXPECT_EQ(count_substr(slurp(dir / "two.csv"), "\n"), 3);
}

TEST(Export, SvgHasOnePathPerCurve) {
    auto dir = scratch_dir("svg");
    Polyline a, b, c;
    a.id = "a";
    b.id = "b";
    c.id = "c";
    a.points = {{0, 0}, {1, 1}};
    b.points = {{0, 1}, {1, 0}};
    c.points = {{0.5, 0}, {0.5, 1}, {0.2, 0.2}};
    export_geometry(std::vector<Polyline>{a, b, c}, ExportFormat::svg, (dir / "x.svg").string());
    auto txt = slurp(dir / "x.svg");
    EXPECT_EQ(count_substr(txt, "<path "), 3);
    EXPECT_NE(txt.find("</svg>"), std::string::npos);
    EXPECT_THROW(export_svg({}, (dir / "y.svg").string()), std::invalid_argument);
}

TEST(Assembly, SeedOutsideDomainThrows) {
    auto s = make_solution("K_PIS");
    DieSpec d;
    d.inner_seed = {0.0, 0.0};
    d.outer_seed = {1.0, 1.0};
    d.entry_seed = {1.0, 1.0};
    d.exit_seed = {1.0, 1.0};
    EXPECT_THROW(assemble_die(s, d), AssemblyError);
}

TEST(Figures, SetupsEchoTheirParameters) {
    auto f4 = figure_setup(4);
    ASSERT_TRUE(f4.die.has_value());
    EXPECT_DOUBLE_EQ(f4.die->feed.V0, -0.94);
    EXPECT_EQ(f4.solution.functions.at("F").name, "cn_bump");
    auto f2 = figure_setup(2);
    EXPECT_FALSE(f2.die.has_value());
    bool region = false;
    for (const auto& [k, v] : f2.echo) region |= k == "region" && v == "[-1, 1] x [-1, 1]";
    EXPECT_TRUE(region);
    EXPECT_THROW(figure_setup(6), std::invalid_argument);
}

TEST(Figures, VelocityGridSkipsTheOrigin) {
    auto s = make_solution("K_PIS");
    auto g = velocity_grid(s);
    EXPECT_EQ(g.size(), 41u * 41u - 1u);
}

TEST(Figures, ExtrusionDieAssemblesAndWritesFiles) {
    auto dir = scratch_dir("fig5");
    auto r = reproduce_figure(5, dir.string());
    EXPECT_TRUE(r.ok());
    ASSERT_TRUE(r.die.has_value());
    for (const auto& [k, v] : r.die->gaps) EXPECT_LT(v, 1e-3) << k;
    EXPECT_EQ(r.files.size(), 10u);
    for (const auto& f : r.files) EXPECT_GT(fs::file_size(f), 0u) << f;
}
