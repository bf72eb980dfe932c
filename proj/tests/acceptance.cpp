// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "plastsym/liealg.hpp"
#include "plastsym/suites.hpp"

using namespace plastsym;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void criterion(int n, const std::string& what, bool ok, const std::string& detail) {
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", n, what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

bool starts_with(const std::string& s, const std::string& p) { return s.rfind(p, 0) == 0; }

struct Tally {
    int total = 0, pass = 0;
    double worst = 0.0;
    std::string first_bad;
    bool all() const { return total > 0 && pass == total; }
    std::string str(bool with_worst = true) const {
        char b[200];
        if (with_worst)
            std::snprintf(b, sizeof b, "%d/%d pass, worst %.3g", pass, total, worst);
        else
            std::snprintf(b, sizeof b, "%d/%d pass", pass, total);
        return first_bad.empty() ? b : std::string(b) + ", first failure " + first_bad;
    }
};

Tally tally(const json& arr, const std::function<bool(const std::string&)>& pick) {
    Tally t;
    for (const auto& c : arr) {
        const std::string id = c["id"];
        if (!pick(id)) continue;
        ++t.total;
        if (c["status"] == "PASS") {
            ++t.pass;
        } else if (c["status"] != "SKIP" && t.first_bad.empty()) {
            t.first_bad = id;
        }
        if (c["value"].is_number()) t.worst = std::max(t.worst, c["value"].get<double>());
    }
    return t;
}

const json* find_check(const json& arr, const std::string& id) {
    for (const auto& c : arr)
        if (c["id"] == id) return &c;
    return nullptr;
}

}  // namespace

int main() {
    // 1: structure tables, timed on their own
    {
        AlgebraOptions o;
        o.samples = 50;
        o.tol = 1e-8;
        const auto t0 = std::chrono::steady_clock::now();
        SuiteResult r = algebra_suite(o);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        int l = 0, s = 0, lp = 0, sp = 0;
        for (const auto& c : r.checks) {
            const bool cell = c.id.find(".[") != std::string::npos;
            if (!cell) continue;
            if (starts_with(c.id, "algebra.L.")) ++l, lp += c.status == Status::PASS;
            if (starts_with(c.id, "algebra.S.")) ++s, sp += c.status == Status::PASS;
        }
        char d[160];
        std::snprintf(d, sizeof d, "table L %d/%d, table S %d/%d cells, %.2f s", lp, l, sp, s, secs);
        criterion(1, "structure tables match numeric brackets", l == 196 && s == 49 && lp == l && sp == s && secs < 30,
                  d);
    }

    // Full report through the CLI; its JSON feeds the remaining criteria.
    const fs::path dir = fs::temp_directory_path() / "plastsym_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string cmd = std::string("\"") + PLASTSYM_CLI + "\" report --out \"" + (dir / "report.json").string() +
                            "\" --errata-file \"\" > \"" + (dir / "report.log").string() + "\" 2>&1";
    const auto t0 = std::chrono::steady_clock::now();
    const int st = std::system(cmd.c_str());
    const double report_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const int code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    json rep;
    try {
        std::ifstream f(dir / "report.json");
        rep = json::parse(f);
    } catch (const std::exception& e) {
        std::printf("FAIL report: cannot read report.json (%s), exit code %d\n", e.what(), code);
        return 1;
    }
    const json& checks = rep["checks"];
    const json& errata = rep["errata"];

    // 2
    {
        auto t = tally(checks, [](const std::string& id) { return id == "algebra.L.jacobi" || id == "algebra.S.jacobi"; });
        const auto L = table_L(), S = table_S();
        const auto jl = jacobi_check(L), js = jacobi_check(S);
        char d[120];
        std::snprintf(d, sizeof d, "%d + %d triples, %d failures", jl.triples, js.triples, jl.failures + js.failures);
        criterion(2, "exact Jacobi identity", t.total == 2 && t.all() && jl.pass() && js.pass() && jl.triples == 364 &&
                                                  js.triples == 35, d);
    }

    // 3
    {
        auto t = tally(checks, [](const std::string& id) { return starts_with(id, "algebra.L.automorphism."); });
        auto r1 = verify_automorphism(Automorphism::R1, table_L()), r2 = verify_automorphism(Automorphism::R2, table_L());
        criterion(3, "R1 and R2 preserve table L", t.total == 2 && t.all() && r1.pass() && r2.pass() && r1.cells == 196,
                  t.str());
    }

    // 4
    {
        auto t = tally(checks, [](const std::string& id) { return starts_with(id, "algebra.family."); });
        bool tol_ok = true;
        for (const auto& c : checks)
            if (starts_with(c["id"], "algebra.family.")) tol_ok &= c["tol"].get<double>() <= 1e-12;
        criterion(4, "infinite-family constraints", t.total == 8 && t.all() && tol_ok, t.str());
    }

    // 5
    {
        auto t = tally(checks, [](const std::string& id) { return starts_with(id, "catalog."); });
        // every verbatim failure must have a passing corrected check under the same id
        int resolved = 0, unresolved = 0;
        for (const auto& e : errata) {
            const std::string id = e["id"];
            if (!starts_with(id, "catalog.") || e["status"] != "FAIL") continue;
            const json* c = find_check(checks, id);
            (c && (*c)["status"] == "PASS") ? ++resolved : ++unresolved;
        }
        // draw counts: >= 3 unless the parameter domain is exhausted by fewer
        int thin = 0, rows = 0;
        std::set<int> dim2_rows;
        const std::string cat = catalog_dir();
        for (const char* f : {"L_dim1.txt", "S_dim1.txt", "S_dim2.txt", "L_dim2_partial.txt"}) {
            for (const auto& e : load_catalog(cat + "/" + f)) {
                ++rows;
                const auto n = parameter_draws(e).size();
                bool discrete = true;
                for (const auto& p : e.params) discrete &= p.second == ParamDomain::pm1;
                if (n < 3 && !discrete) ++thin;
                if (starts_with(e.id, "L_2,")) dim2_rows.insert(std::stoi(e.id.substr(4)));
            }
        }
        bool all_dim2 = dim2_rows.size() == 43 && *dim2_rows.begin() == 1 && *dim2_rows.rbegin() == 43;
        char d[200];
        std::snprintf(d, sizeof d, "%s; %d rows, %d errata resolved, %d unresolved, %d under-sampled, L_2,1-43 %s",
                      t.str().c_str(), rows, resolved, unresolved, thin, all_dim2 ? "present" : "incomplete");
        criterion(5, "catalog closure", t.all() && t.total == rows && unresolved == 0 && thin == 0 && all_dim2, d);
    }

    // 6
    {
        const std::vector<std::string> exact = {"RIGID",         "B1_IMPLICIT",   "K_PIS",         "SIM_C1Z_ADD_A",
                                                "SIM_C1Z_ADD_B", "SIM_C1Z_MUL_A", "SIM_C1Z_MUL_B", "SIM_C1Z_MUL_C"};
        const std::vector<std::string> quad = {"SIM_C1NZ_ADD_A", "SIM_C1NZ_ADD_B", "SIM_C1NZ_MUL_A", "SIM_C1NZ_MUL_B"};
        bool ok = true;
        std::string bad;
        auto need = [&](const std::string& id, double tol) {
            const json* c = find_check(checks, id);
            const bool good = c && (*c)["status"] == "PASS" && (*c)["tol"].get<double>() <= tol;
            if (!good && bad.empty()) bad = id;
            ok &= good;
        };
        for (const auto& f : exact) need("solutions." + f + ".residual", 1e-8);
        for (const auto& f : quad) {
            need("solutions." + f + ".residual", 1e-6);
            need("solutions." + f + ".first_integral", 1e-8);
            need("solutions." + f + ".sigma_mixed_partials", 1e-6);
        }
        int printed = 0;
        for (const auto& e : errata) {
            const std::string id = e["id"];
            if (!starts_with(id, "solutions.") || id.size() < 11 || id.substr(id.size() - 11) != ".as_printed") continue;
            if (id == "solutions.profile.as_printed") continue;  // profile relation, covered by first_integral
            ++printed;
            need(id.substr(0, id.size() - 11) + ".residual", 1e-6);
        }
        const std::string note = std::to_string(exact.size() + quad.size()) + " families, " + std::to_string(printed) +
                                 " as-printed errata with passing corrections" + (bad.empty() ? "" : ", failing " + bad);
        criterion(6, "solution residual gates", ok, note);
    }

    // 7
    {
        auto sp = tally(checks, [](const std::string& id) { return id == "solutions.B1_IMPLICIT.speed_conservation"; });
        auto dv = tally(checks, [](const std::string& id) {
            return starts_with(id, "solutions.") && id.size() > 11 && id.substr(id.size() - 11) == ".divergence";
        });
        criterion(7, "speed and incompressibility", sp.total == 1 && sp.all() && dv.total == 12 && dv.all(),
                  "speed " + sp.str() + "; divergence " + dv.str());
    }

    // 8
    {
        auto b1 = tally(checks, [](const std::string& id) { return starts_with(id, "solutions.reduced.B1."); });
        auto kx = tally(checks, [](const std::string& id) { return id == "solutions.reduced.K_xi.eps_plus"; });
        criterion(8, "reduced equations", b1.total == 3 && b1.all() && kx.all(), "B1 " + b1.str() + "; K_xi " + kx.str());
    }

    // 9
    {
        auto lin = tally(checks, [](const std::string& id) {
            return starts_with(id, "symmetry.RIGID.") || starts_with(id, "symmetry.K_PIS.");
        });
        auto k = tally(checks, [](const std::string& id) { return starts_with(id, "symmetry.SIM_C1Z_ADD_A.K."); });
        criterion(9, "symmetry action on solutions", lin.total == 36 && lin.all() && k.total == 2 && k.all(),
                  "linear flows " + lin.str() + "; K flow " + k.str());
    }

    // 10
    {
        auto g = tally(checks, [](const std::string& id) { return starts_with(id, "geometry."); });
        bool echoed = rep.contains("echo");
        for (int i = 1; echoed && i <= 5; ++i) {
            const std::string p = "figure" + std::to_string(i) + ".";
            echoed &= rep["echo"].contains(p + "family");
            if (i != 2) echoed &= rep["echo"].contains(p + "feed") && rep["echo"].contains(p + "extract");
        }
        bool files = rep.contains("files") && !rep["files"].empty();
        if (files)
            for (const auto& f : rep["files"]) files &= fs::exists(f.get<std::string>()) && fs::file_size(f.get<std::string>()) > 0;
        const bool summary = rep["summary"]["status"] == "PASS" && code == 0;
        char d[240];
        std::snprintf(d, sizeof d, "%s; parameters %s; %zu files; report exit %d in %.1f s", g.str(false).c_str(),
                      echoed ? "echoed" : "missing", rep.contains("files") ? rep["files"].size() : 0, code, report_secs);
        criterion(10, "geometry and full report", g.all() && echoed && files && summary && report_secs < 300, d);
    }

    std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
    return failures ? 1 : 0;
}
