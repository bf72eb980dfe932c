#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "plastsym/diegeom.hpp"
#include "plastsym/suites.hpp"

namespace plastsym::report {

using ojson = nlohmann::ordered_json;

inline ojson number(double v) {
    if (!std::isfinite(v)) return std::isnan(v) ? ojson("nan") : ojson(v > 0 ? "inf" : "-inf");
    return v;
}

inline ojson check_json(const Check& c) {
    ojson j;
    j["id"] = c.id;
    j["status"] = to_string(c.status);
    j["value"] = number(c.value);
    j["tol"] = number(c.tol);
    j["ref"] = c.ref;
    if (!c.note.empty()) j["note"] = c.note;
    return j;
}

struct Timing {
    double wall_s = 0.0;
    std::string started_utc;
};

inline std::string utc_now() {
    std::time_t t = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

// Everything except "timing" depends only on argv and the seed.
inline ojson to_json(const std::string& command, std::uint64_t seed, const SuiteResult& r, const Timing& t,
                     double budget_s = 0.0) {
    ojson j;
    j["command"] = command;
    j["seed"] = seed;
    j["summary"] = {{"pass", r.count(Status::PASS)},
                    {"fail", r.count(Status::FAIL)},
                    {"skip", r.count(Status::SKIP)},
                    {"errata", r.errata.size()},
                    {"status", r.ok() ? "PASS" : "FAIL"}};
    j["checks"] = ojson::array();
    for (const auto& c : r.checks) j["checks"].push_back(check_json(c));
    j["errata"] = ojson::array();
    for (const auto& c : r.errata) j["errata"].push_back(check_json(c));
    if (!r.echo.empty()) {
        ojson e = ojson::object();
        for (const auto& [k, v] : r.echo) e[k] = v;
        j["echo"] = e;
    }
    if (!r.files.empty()) j["files"] = r.files;
    j["timing"] = {{"wall_s", t.wall_s}, {"started_utc", t.started_utc}};
    if (budget_s > 0) {
        j["timing"]["budget_s"] = budget_s;
        j["timing"]["within_budget"] = t.wall_s < budget_s;
    }
    return j;
}

inline void write_json(const ojson& j, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << j.dump(2) << '\n';
}

// id,status,value,tol,ref; no timing, so identical runs give identical bytes.
inline void write_csv(const SuiteResult& r, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << "section,id,status,value,tol,ref\n";
    auto row = [&](const char* sec, const Check& c) {
        f << sec << ',' << c.id << ',' << to_string(c.status) << ',' << format_g17(c.value) << ','
          << format_g17(c.tol) << ",\"" << c.ref << "\"\n";
    };
    for (const auto& c : r.checks) row("check", c);
    for (const auto& c : r.errata) row("errata", c);
}

// Appends errata not yet listed (keyed by id) to a markdown ledger.
inline int append_errata(const SuiteResult& r, const std::string& path) {
    std::set<std::string> seen;
    bool exists = false;
    {
        std::ifstream in(path);
        exists = static_cast<bool>(in);
        std::string line;
        while (std::getline(in, line)) {
            auto a = line.find("- `");
            if (a != 0) continue;
            auto b = line.find('`', 3);
            if (b != std::string::npos) seen.insert(line.substr(3, b - 3));
        }
    }
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot write " + path);
    if (!exists)
        out << "# Errata\n\nAs-printed formulas, table cells and catalog rows that fail their check. The shipped code "
               "uses the corrected reading; the measured value is for the printed one.\n\n";
    int added = 0;
    for (const auto& c : r.errata) {
        if (seen.count(c.id)) continue;
        std::ostringstream v;
        v.precision(4);
        v << c.value;
        out << "- `" << c.id << "` [" << c.ref << "] " << to_string(c.status) << ", measured " << v.str();
        if (!c.note.empty()) out << ": " << c.note;
        out << '\n';
        ++added;
    }
    return added;
}

inline void print_summary(const std::string& title, const SuiteResult& r, bool verbose) {
    std::printf("%s\n", title.c_str());
    for (const auto& c : r.checks)
        if (verbose || c.status == Status::FAIL)
            std::printf("  %-4s %-52s %.3e (tol %.1e)%s%s\n", to_string(c.status).c_str(), c.id.c_str(), c.value, c.tol,
                        c.note.empty() ? "" : "  ", c.note.c_str());
    if (!r.errata.empty()) std::printf("  errata: %zu as-printed items measured (see report)\n", r.errata.size());
    std::printf("  %d passed, %d failed, %d skipped: %s\n", r.count(Status::PASS), r.count(Status::FAIL),
                r.count(Status::SKIP), r.ok() ? "PASS" : "FAIL");
}

}  // namespace plastsym::report
