#pragma once

#include <cmath>
#include <filesystem>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "callables.hpp"
#include "diegeom.hpp"
#include "solutions.hpp"

namespace plastsym {

struct FigureCheck {
    std::string name;
    double value = 0.0;
    double tol = 0.0;
    bool pass = false;
};

struct FigureResult {
    int id = 0;
    std::string title;
    std::optional<DieGeometry> die;
    std::vector<Polyline> polylines;
    std::vector<std::pair<std::string, std::string>> params;  // echoed parameters, in order
    std::vector<std::string> files;
    std::vector<FigureCheck> checks;

    bool ok() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return true;
    }
};

struct FigureSetup {
    SolutionSpec solution;
    std::optional<DieSpec> die;
    std::vector<std::pair<std::string, std::string>> echo;
};

namespace detail {

inline std::string fmt(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}
inline std::string fmt(Vec2 p) { return "(" + fmt(p[0]) + ", " + fmt(p[1]) + ")"; }
inline std::string fmt(FeedVelocity f) { return "(" + fmt(f.U0) + ", " + fmt(f.V0) + ")"; }

inline void echo_solution(FigureSetup& f) {
    f.echo.emplace_back("family", f.solution.family);
    for (const auto& [k, v] : f.solution.params) f.echo.emplace_back(k, fmt(v));
    for (const auto& [k, c] : f.solution.functions) f.echo.emplace_back(k, c.spec());
}

inline void echo_die(FigureSetup& f) {
    const auto& d = *f.die;
    f.echo.emplace_back("feed", fmt(d.feed));
    f.echo.emplace_back("extract", fmt(d.extract));
    f.echo.emplace_back("inner_seed", fmt(d.inner_seed));
    f.echo.emplace_back("outer_seed", fmt(d.outer_seed));
    f.echo.emplace_back("C1_seed", fmt(d.entry_seed));
    f.echo.emplace_back("C2_seed", fmt(d.exit_seed));
    f.echo.emplace_back("ds", fmt(d.ds));
    f.echo.emplace_back("n_steps", std::to_string(d.n_steps));
    f.echo.emplace_back("snap_tol", fmt(d.snap_tol));
}

}  // namespace detail

// Parameters for figures 1-5. Seeds the source leaves open are chosen here
// (see README) so that both limit curves cross both contours transversally.
inline FigureSetup figure_setup(int id) {
    FigureSetup f;
    DieSpec d;
    switch (id) {
        case 1:
            // Upper arcsin branch: the only one whose domain holds all three quoted seeds.
            f.solution = {"B1_IMPLICIT", {{"c1", 5.0}, {"c2", 0.0}}, {{"T", callables::arcsin_half(1)}}};
            d.feed = {4.30, 2.55};
            d.extract = {-4.30, 2.55};
            d.inner_seed = {-0.5, -0.35};
            d.outer_seed = {-0.43, -0.46};
            d.entry_seed = {-0.5, -0.35};
            d.exit_seed = {-0.5, 0.35};
            break;
        case 2:
        case 3:
            f.solution = {"K_PIS", {{"c1", 0.0}, {"c2", -1.0}, {"c3", -2.0}, {"c4", 4.0}, {"c5", 1.0}}, {}};
            d.feed = {5.5, 0.0};
            d.extract = {3.0, 3.0};
            d.inner_seed = {-0.5, -0.8};
            d.outer_seed = {-0.7, -0.95};
            d.entry_seed = {-0.5, -0.8};
            d.exit_seed = {1.1, 0.3};
            break;
        case 4:
            f.solution = {"SIM_C1Z_ADD_A", {{"c2", 0.0}}, {{"F", callables::cn_bump(4 * std::numbers::pi, 0.5)}}};
            d.feed = {0.0, -0.94};
            d.extract = {0.0, -0.94};
            d.inner_seed = {0.5, 0.5};
            d.outer_seed = {0.7, 0.5};
            d.entry_seed = {0.6, 0.22};
            d.exit_seed = {0.6, -0.22};
            break;
        case 5:
            f.solution = {"SIM_C1Z_ADD_B",
                          {{"c1", 0.0}, {"c2", 0.0}},
                          {{"H", callables::exp_decay(2.0, 0.1)}, {"K", callables::identity()}}};
            d.feed = {1.05, 0.0};
            d.extract = {1.05, 0.0};
            d.inner_seed = {0.0, -1.75};
            d.outer_seed = {0.0, -2.3};
            d.entry_seed = {-4.5, 4.4};
            d.exit_seed = {4.5, 4.4};
            break;
        default:
            throw std::invalid_argument("figure id must be in 1..5");
    }
    detail::echo_solution(f);
    if (id == 2) {
        f.echo.emplace_back("region", "[-1, 1] x [-1, 1]");
        f.echo.emplace_back("grid", "41 x 41, origin skipped");
        f.echo.emplace_back("vector_scale", "0.01");
    } else {
        f.die = d;
        detail::echo_die(f);
    }
    return f;
}

// 41 x 41 samples of (u, v) on [-1, 1]^2; each sample is a two-point polyline
// from (x, y) to (x, y) + scale (u, v).
inline std::vector<Polyline> velocity_grid(const Solution& s, double lo = -1, double hi = 1, int n = 41,
                                           double scale = 0.01) {
    std::vector<Polyline> out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double x = lo + (hi - lo) * i / (n - 1), y = lo + (hi - lo) * j / (n - 1);
            if (!s.velocity_contains(x, y)) continue;
            auto v = s.velocity(x, y);
            Polyline p;
            p.kind = CurveKind::vector;
            p.id = "v" + std::to_string(i) + "_" + std::to_string(j);
            p.points = {{x, y}, {x + scale * v[0], y + scale * v[1]}};
            p.meta.start = {x, y};
            p.meta.family = s.family;
            out.push_back(std::move(p));
        }
    return out;
}

// Coordinate-wise max distance between two dies with the same point counts; inf otherwise.
inline double die_distance(const DieGeometry& a, const DieGeometry& b) {
    double m = 0.0;
    auto pa = die_polylines(a), pb = die_polylines(b);
    for (std::size_t k = 0; k < pa.size(); ++k) {
        if (pa[k].points.size() != pb[k].points.size()) return std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < pa[k].points.size(); ++i)
            m = std::max(m, std::hypot(pa[k].points[i][0] - pb[k].points[i][0], pa[k].points[i][1] - pb[k].points[i][1]));
    }
    return m;
}

inline std::vector<FigureCheck> die_checks(const Solution& s, const DieGeometry& g, const DieSpec& spec,
                                           bool reversal = true) {
    std::vector<FigureCheck> c;
    for (const auto& [k, v] : g.gaps) c.push_back({"gap_" + k, v, spec.snap_tol, v < spec.snap_tol});
    const double t = std::max(tangency_error(g.inner, s), tangency_error(g.outer, s));
    c.push_back({"contour_tangency_rad", t, 1e-6, t < 1e-6});
    const double l = std::max(limit_slope_residual(g.entry_limit, s, g.feed), limit_slope_residual(g.exit_limit, s, g.extract));
    c.push_back({"limit_slope_residual", l, 1e-6, l < 1e-6});
    double spacing = 0.0;
    for (const auto& p : die_polylines(g))
        for (std::size_t i = 1; i < p.points.size(); ++i) {
            const double d = std::hypot(p.points[i][0] - p.points[i - 1][0], p.points[i][1] - p.points[i - 1][1]);
            spacing = std::max(spacing, d / spec.ds);
            if (d == 0.0) spacing = std::numeric_limits<double>::infinity();
        }
    c.push_back({"spacing_over_ds", spacing, 2.0, spacing <= 2.0});
    if (reversal) {
        DieSpec r = spec;
        r.contour_direction = -spec.contour_direction;
        const double d = die_distance(g, assemble_die(s, r));
        c.push_back({"reversal_invariance", d, 1e-9, d < 1e-9});
    }
    return c;
}

inline FigureResult reproduce_figure(int id, const std::string& out_dir) {
    auto setup = figure_setup(id);
    FigureResult r;
    r.id = id;
    r.params = setup.echo;
    Solution s = make_solution(setup.solution);
    std::filesystem::create_directories(out_dir);
    const std::string stem = (std::filesystem::path(out_dir) / ("figure" + std::to_string(id))).string();
    auto emit = [&](const std::vector<Polyline>& lines, const std::string& curve) {
        for (auto fmt : {ExportFormat::csv, ExportFormat::svg}) {
            const std::string path = stem + "_" + curve + (fmt == ExportFormat::csv ? ".csv" : ".svg");
            export_geometry(lines, fmt, path);
            r.files.push_back(path);
        }
    };
    if (id == 2) {
        r.title = "velocity field";
        r.polylines = velocity_grid(s);
        r.checks.push_back({"vector_count", static_cast<double>(r.polylines.size()), 41 * 41 - 1,
                            r.polylines.size() == 41 * 41 - 1});
        emit(r.polylines, "vectors");
        return r;
    }
    r.title = "extrusion die";
    DieGeometry g = assemble_die(s, *setup.die);
    r.checks = die_checks(s, g, *setup.die);
    r.polylines = die_polylines(g);
    r.die = std::move(g);
    emit(r.polylines, "die");
    for (const auto& p : r.polylines) emit({p}, p.id);
    return r;
}

}  // namespace plastsym
