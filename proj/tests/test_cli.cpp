#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

// Runs the CLI with stdout and stderr captured; errata ledger disabled.
Run cli(const std::string& args) {
    const std::string cmd = std::string("\"") + PLASTSYM_CLI + "\" " + args + " --errata-file \"\" 2>&1";
    Run r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    std::array<char, 4096> buf;
    while (auto n = std::fread(buf.data(), 1, buf.size(), p)) r.out.append(buf.data(), n);
    const int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

fs::path scratch_dir(const std::string& name) {
    auto d = fs::temp_directory_path() / ("plastsym_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(Cli, EvalRigid) {
    auto r = cli("eval --family RIGID --at 2,3");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("u=3\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("v=-2\n"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("residual=0\n"), std::string::npos) << r.out;
}

TEST(Cli, EvalWithParamsAndFunctions) {
    auto r = cli("eval --family B1_IMPLICIT --params c1=2 --fn \"T=poly(0,1)\" --at 0,0");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("u=2\n"), std::string::npos) << r.out;
}

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(cli("eval --family NOPE --at 1,1").code, 2);
    EXPECT_EQ(cli("eval --family RIGID --at 1,1 --bogus").code, 2);
    EXPECT_EQ(cli("eval --family RIGID --params zz=1 --at 1,1").code, 2);
    EXPECT_EQ(cli("figure 9 --out /tmp/plastsym_cli_nofig").code, 2);
    EXPECT_EQ(cli("").code, 2);
}

TEST(Cli, HelpExitsZero) { EXPECT_EQ(cli("--help").code, 0); }

TEST(Cli, VerifyAlgebraPasses) {
    auto r = cli("verify algebra --table L");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("0 failed"), std::string::npos) << r.out;
}

TEST(Cli, ExitCodeFollowsFailedChecks) {
    EXPECT_EQ(cli("verify algebra --table S --inject-check fail").code, 1);
    EXPECT_EQ(cli("verify algebra --table S --inject-check skip").code, 0);
    EXPECT_EQ(cli("verify algebra --table S --inject-check pass").code, 0);
}

TEST(Cli, JsonReportIsParseable) {
    auto d = scratch_dir("json");
    auto r = cli("verify symmetry --samples 5 --report " + (d / "r.json").string());
    ASSERT_EQ(r.code, 0) << r.out;
    auto j = nlohmann::json::parse(slurp(d / "r.json"));
    EXPECT_EQ(j["summary"]["status"], "PASS");
    EXPECT_EQ(j["summary"]["fail"], 0);
    EXPECT_GT(j["checks"].size(), 10u);
    EXPECT_TRUE(j["errata"].is_array());
}

TEST(Cli, FigureWritesFiles) {
    auto d = scratch_dir("fig");
    auto r = cli("figure 5 --out " + d.string());
    ASSERT_EQ(r.code, 0) << r.out;
    auto j = nlohmann::json::parse(slurp(d / "figure5_report.json"));
    EXPECT_EQ(j["summary"]["status"], "PASS");
    EXPECT_EQ(j["echo"]["family"], "SIM_C1Z_ADD_B");
    for (const char* c : {"inner", "outer", "C1", "C2", "die"}) {
        EXPECT_TRUE(fs::exists(d / (std::string("figure5_") + c + ".csv"))) << c;
        EXPECT_NE(slurp(d / (std::string("figure5_") + c + ".svg")).find("<svg"), std::string::npos) << c;
    }
}

TEST(Cli, TraceWritesCsv) {
    auto d = scratch_dir("trace");
    auto r = cli("trace flow --family RIGID --start 1,0 --ds 0.01 --steps 10 --out " + (d / "f.csv").string());
    ASSERT_EQ(r.code, 0) << r.out;
    auto txt = slurp(d / "f.csv");
    EXPECT_EQ(txt.rfind("curve_id,kind,x,y\n", 0), 0u);
    EXPECT_EQ(std::count(txt.begin(), txt.end(), '\n'), 12);
}

TEST(Cli, CsvReportsAreDeterministic) {
    auto d = scratch_dir("det");
    ASSERT_EQ(cli("verify solutions --family K_PIS --csv " + (d / "a.csv").string()).code, 0);
    ASSERT_EQ(cli("verify solutions --family K_PIS --csv " + (d / "b.csv").string()).code, 0);
    const auto a = slurp(d / "a.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(d / "b.csv"));
    ASSERT_EQ(cli("verify solutions --family K_PIS --seed 7 --csv " + (d / "c.csv").string()).code, 0);
    EXPECT_NE(a, slurp(d / "c.csv"));
}

TEST(Cli, ErrataLedgerIsDeduplicated) {
    auto d = scratch_dir("errata");
    const auto ledger = (d / "ERRATA.md").string();
    const std::string cmd = std::string("\"") + PLASTSYM_CLI + "\" verify algebra --table S --errata-file " + ledger +
                            " > /dev/null 2>&1";
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    const auto once = slurp(ledger);
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    EXPECT_EQ(once, slurp(ledger));
    EXPECT_NE(once.find("- `algebra.S.K_as_printed`"), std::string::npos);
}
