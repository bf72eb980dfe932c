#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "plastsym/diegeom.hpp"
#include "plastsym/figures.hpp"
#include "plastsym/solutions.hpp"
#include "plastsym/suites.hpp"
#include "report.hpp"

using namespace plastsym;
namespace fs = std::filesystem;

namespace {

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Split on commas that are not inside parentheses.
std::vector<std::string> split_top(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    int depth = 0;
    for (char c : s) {
        if (c == '(') ++depth;
        if (c == ')') --depth;
        if (c == ',' && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    try {
        std::size_t used = 0;
        double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw UsageError("bad number for " + what + ": '" + s + "'");
    }
}

std::map<std::string, double> parse_params(const std::string& s) {
    std::map<std::string, double> m;
    for (const auto& kv : split_top(s)) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("expected k=v in --params, got '" + kv + "'");
        m[kv.substr(0, eq)] = parse_double(kv.substr(eq + 1), kv.substr(0, eq));
    }
    return m;
}

std::map<std::string, Callable> parse_functions(const std::string& s) {
    std::map<std::string, Callable> m;
    for (const auto& kv : split_top(s)) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw UsageError("expected NAME=callable in --fn, got '" + kv + "'");
        m[kv.substr(0, eq)] = parse_callable(kv.substr(eq + 1));
    }
    return m;
}

Vec2 parse_pair(const std::string& s, const std::string& what) {
    auto parts = split_top(s);
    if (parts.size() != 2) throw UsageError(what + " expects two comma-separated numbers");
    return {parse_double(parts[0], what), parse_double(parts[1], what)};
}

Solution build_solution(const std::string& family, const std::string& params, const std::string& fns,
                        const std::string& variant) {
    if (!family_info().count(family)) throw UsageError("unknown family: " + family);
    if (variant != "corrected" && variant != "printed") throw UsageError("--variant must be corrected or printed");
    try {
        return make_solution(family, parse_params(params), parse_functions(fns),
                             variant == "printed" ? Variant::AsPrinted : Variant::Corrected);
    } catch (const UsageError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::string joined_argv(int argc, char** argv) {
    std::string s;
    for (int i = 1; i < argc; ++i) s += (i > 1 ? " " : "") + std::string(argv[i]);
    return s;
}

struct Globals {
    std::uint64_t seed = 42;
    std::string errata_file = "ERRATA.md";
    std::string inject;  // synthetic check status, for exit-code tests
    bool verbose = false;
};

// Writes the requested artifacts, prints the summary, returns the exit code.
int finish(const Globals& g, const std::string& command, const std::string& title, SuiteResult r,
           std::chrono::steady_clock::time_point t0, const std::string& started, const std::string& json_path,
           const std::string& csv_path, double budget_s = 0.0) {
    if (!g.inject.empty()) {
        Status st = g.inject == "fail" ? Status::FAIL : g.inject == "skip" ? Status::SKIP : Status::PASS;
        r.checks.push_back({"inject.synthetic", st, 0.0, 0.0, "injected", ""});
    }
    r.sort();
    report::Timing t{std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), started};
    if (!json_path.empty()) {
        if (auto parent = fs::path(json_path).parent_path(); !parent.empty()) fs::create_directories(parent);
        report::write_json(report::to_json(command, g.seed, r, t, budget_s), json_path);
    }
    if (!csv_path.empty()) report::write_csv(r, csv_path);
    if (!g.errata_file.empty() && !r.errata.empty()) report::append_errata(r, g.errata_file);
    report::print_summary(title, r, g.verbose);
    std::printf("  wall time %.2f s\n", t.wall_s);
    if (budget_s > 0 && t.wall_s >= budget_s) std::printf("  over the %.0f s budget\n", budget_s);
    return r.ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"plastsym: symmetry, exact-solution and die-geometry checks for ideal plane plasticity"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand
    Globals g;
    app.add_option("--seed", g.seed, "seed for all quasi-random sampling")->capture_default_str();
    app.add_option("--errata-file", g.errata_file, "markdown errata ledger to append to (empty: off)")
        ->capture_default_str();
    app.add_flag("-v,--verbose", g.verbose, "list every check");
    app.add_option("--inject-check", g.inject, "append a synthetic check")
        ->check(CLI::IsMember({"pass", "fail", "skip"}))
        ->group("");

    const std::string command = joined_argv(argc, argv);
    const std::string started = report::utc_now();
    const auto t0 = std::chrono::steady_clock::now();
    std::string json_path, csv_path;

    // verify
    auto* verify = app.add_subcommand("verify", "run one verification suite");
    verify->require_subcommand(1);
    verify->add_option("--report", json_path, "write the JSON report here");
    verify->add_option("--csv", csv_path, "write the check table as CSV here");

    AlgebraOptions ao;
    auto* v_alg = verify->add_subcommand("algebra", "structure tables, Jacobi, automorphisms, infinite families");
    v_alg->add_option("--table", ao.table, "L, S or both")->check(CLI::IsMember({"L", "S", "both"}));
    v_alg->add_option("--samples", ao.samples, "sample points per cell")->check(CLI::PositiveNumber);
    v_alg->add_option("--tol", ao.tol, "coefficient and span tolerance")->check(CLI::PositiveNumber);

    CatalogOptions co;
    auto* v_cat = verify->add_subcommand("catalog", "subalgebra closure of the catalog rows");
    v_cat->add_option("--file", co.file, "one catalog file (default: every shipped catalog)");
    v_cat->add_option("--errata", co.errata_file, "corrected readings (default: errata.txt next to the catalog)");

    SolutionsOptions so;
    auto* v_sol = verify->add_subcommand("solutions", "PDE residual gates and reduced equations");
    v_sol->add_option("--family", so.family, "family id or all");
    v_sol->add_option("--samples", so.samples, "interior sample points")->check(CLI::PositiveNumber);

    SymmetryOptions yo;
    auto* v_sym = verify->add_subcommand("symmetry", "flows of generators applied to solutions");
    v_sym->add_option("--samples", yo.samples, "sample points")->check(CLI::PositiveNumber);

    GeometryOptions go;
    auto* v_geo = verify->add_subcommand("geometry", "tracing properties and figure regeneration");
    v_geo->add_option("--out", go.out_dir, "directory for the figure files")->capture_default_str();

    // eval
    std::string family, params, fns, variant = "corrected", at, start, feed, branch = "A", out;
    auto* eval = app.add_subcommand("eval", "evaluate a solution family at a point");
    eval->add_option("--family", family, "family id")->required();
    eval->add_option("--params", params, "k=v,...");
    eval->add_option("--fn", fns, "NAME=callable,... e.g. T=arcsin_half(1)");
    eval->add_option("--variant", variant, "corrected or printed");
    eval->add_option("--at", at, "x,y")->required();

    // trace
    double ds = 1e-3;
    int steps = 10000, direction = 1;
    auto* trace = app.add_subcommand("trace", "trace a flow line, plasticity limit or slip line");
    trace->require_subcommand(1);
    std::vector<CLI::App*> trace_kinds;
    for (const char* k : {"flow", "limit", "slip"}) {
        auto* t = trace->add_subcommand(k, std::string("trace a ") + k + " curve");
        t->add_option("--family", family, "family id")->required();
        t->add_option("--params", params, "k=v,...");
        t->add_option("--fn", fns, "NAME=callable,...");
        t->add_option("--variant", variant, "corrected or printed");
        t->add_option("--start", start, "x,y")->required();
        if (std::string(k) == "limit") t->add_option("--feed", feed, "U0,V0")->required();
        if (std::string(k) == "slip") t->add_option("--branch", branch, "A or B")->check(CLI::IsMember({"A", "B"}));
        t->add_option("--ds", ds, "arc-length step")->check(CLI::PositiveNumber);
        t->add_option("--steps", steps, "maximum number of steps")->check(CLI::PositiveNumber);
        t->add_option("--direction", direction, "+1 or -1")->check(CLI::IsMember({-1, 1}));
        t->add_option("--out", out, "output .csv or .svg")->required();
        trace_kinds.push_back(t);
    }

    // figure
    int figure_id = 0;
    std::string figure_dir = ".";
    auto* figure = app.add_subcommand("figure", "regenerate one of the five figures");
    figure->add_option("id", figure_id, "1..5")->required()->check(CLI::Range(1, 5));
    figure->add_option("--out", figure_dir, "output directory")->capture_default_str();

    // report
    std::string report_out = "report.json", report_figures;
    auto* rep = app.add_subcommand("report", "run every suite and write the full report");
    rep->add_option("--out", report_out, "JSON report path")->capture_default_str();
    rep->add_option("--figures", report_figures, "figure directory (default: figures/ next to the report)");
    rep->add_option("--csv", csv_path, "also write the check table as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (verify->parsed()) {
            SuiteResult r;
            std::string title;
            if (v_alg->parsed()) {
                ao.seed = g.seed;
                r = algebra_suite(ao);
                title = "verify algebra";
            } else if (v_cat->parsed()) {
                co.seed = g.seed;
                r = catalog_suite(co);
                title = "verify catalog";
            } else if (v_sol->parsed()) {
                so.seed = g.seed;
                if (so.family != "all" && !family_info().count(so.family)) throw UsageError("unknown family: " + so.family);
                r = solutions_suite(so);
                title = "verify solutions";
            } else if (v_sym->parsed()) {
                yo.seed = g.seed;
                r = symmetry_suite(yo);
                title = "verify symmetry";
            } else {
                r = geometry_suite(go);
                title = "verify geometry";
            }
            return finish(g, command, title, std::move(r), t0, started, json_path, csv_path);
        }

        if (eval->parsed()) {
            auto s = build_solution(family, params, fns, variant);
            auto p = parse_pair(at, "--at");
            if (!s.contains(p[0], p[1])) {
                std::fprintf(stderr, "error: (%g, %g) is outside the domain of %s (%s)\n", p[0], p[1], family.c_str(),
                             s.singular_sets.c_str());
                return 1;
            }
            auto j = s.jet(p[0], p[1]);
            std::printf("family %s at (%s, %s)\n", family.c_str(), format_g17(p[0]).c_str(), format_g17(p[1]).c_str());
            std::printf("sigma=%s\ntheta=%s\nu=%s\nv=%s\nresidual=%s\n", format_g17(j.state.sigma).c_str(),
                        format_g17(j.state.theta).c_str(), format_g17(j.state.u).c_str(), format_g17(j.state.v).c_str(),
                        format_g17(max_abs(pde_residual(j))).c_str());
            return 0;
        }

        if (trace->parsed()) {
            auto s = build_solution(family, params, fns, variant);
            const Vec2 p0 = parse_pair(start, "--start");
            Polyline line;
            if (trace_kinds[0]->parsed()) {
                line = trace_flow_line(s, p0, ds, steps, direction);
            } else if (trace_kinds[1]->parsed()) {
                auto f = parse_pair(feed, "--feed");
                line = trace_plasticity_limit(s, {f[0], f[1]}, p0, ds, steps, direction);
            } else {
                line = trace_slip_line(s, p0, branch == "A" ? SlipBranch::A : SlipBranch::B, ds, steps, direction);
            }
            line.id = to_string(line.kind);
            const auto ext = fs::path(out).extension().string();
            if (ext != ".csv" && ext != ".svg") throw UsageError("--out must end in .csv or .svg");
            if (auto parent = fs::path(out).parent_path(); !parent.empty()) fs::create_directories(parent);
            export_geometry(std::vector<Polyline>{line}, ext == ".csv" ? ExportFormat::csv : ExportFormat::svg, out);
            std::printf("%s: %zu points, length %.6g, stop %s, wrote %s\n", line.id.c_str(), line.points.size(),
                        line.length(), to_string(line.meta.stop_forward).c_str(), out.c_str());
            return 0;
        }

        if (figure->parsed()) {
            auto fr = reproduce_figure(figure_id, figure_dir);
            SuiteResult r;
            for (const auto& c : fr.checks)
                r.checks.push_back({"figure" + std::to_string(fr.id) + "." + c.name, c.pass ? Status::PASS : Status::FAIL,
                                    c.value, c.tol, "figure " + std::to_string(fr.id), ""});
            r.echo = fr.params;
            r.files = fr.files;
            std::printf("figure %d (%s)\n", fr.id, fr.title.c_str());
            for (const auto& [k, v] : fr.params) std::printf("  %-12s %s\n", k.c_str(), v.c_str());
            const std::string jp = (fs::path(figure_dir) / ("figure" + std::to_string(fr.id) + "_report.json")).string();
            return finish(g, command, "figure checks", std::move(r), t0, started, jp, csv_path);
        }

        if (rep->parsed()) {
            ReportOptions ro;
            ro.seed = g.seed;
            ro.figures_dir = report_figures.empty() ? (fs::path(report_out).parent_path() / "figures").string()
                                                    : report_figures;
            auto r = full_report(ro);
            return finish(g, command, "full report", std::move(r), t0, started, report_out, csv_path, 300.0);
        }
    } catch (const UsageError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
