#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

/// Scratch directory per test, removed afterwards.
class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("isaacs_cli_" + std::string(info->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const json& j) const {
        const auto p = dir_ / name;
        std::ofstream(p) << j.dump(2);
        return p;
    }

    json preset(const std::string& name) const {
        std::ifstream in(std::string(ISAACS_PRESET_DIR) + "/" + name + ".json");
        return json::parse(in);
    }

    /// Runs the tool, capturing stdout and stderr; returns the exit status.
    int run(const std::string& args) {
        const auto log = dir_ / "log.txt";
        const std::string cmd = std::string(ISAACS_LAB) + " " + args + " > " + log.string() + " 2>&1";
        const int st = std::system(cmd.c_str());
        std::ifstream in(log);
        std::stringstream ss;
        ss << in.rdbuf();
        output_ = ss.str();
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
    std::string output_;
};

std::string preset_path(const std::string& name) { return std::string(ISAACS_PRESET_DIR) + "/" + name + ".json"; }

}  // namespace

TEST_F(Cli, ValidateShippedPresetPasses) {
    const auto cfg = write("c.json", {{"problem", preset_path("linear1d")}, {"out", "out"}});
    EXPECT_EQ(run("validate --config " + cfg.string()), 0) << output_;
    EXPECT_TRUE(fs::exists(dir_ / "out" / "summary.json"));
    EXPECT_TRUE(fs::exists(dir_ / "out" / "validation.csv"));
}

TEST_F(Cli, OverstatedEllipticityFailsAndIsNamed) {
    auto p = preset("linear1d");
    p["constants"]["delta"] = 0.9;
    write("p.json", p);
    const auto cfg = write("c.json", {{"problem", "p.json"}});
    EXPECT_EQ(run("validate --config " + cfg.string()), 1) << output_;
    EXPECT_NE(output_.find("FAIL ellipticity"), std::string::npos) << output_;
}

TEST_F(Cli, UsageAndConfigErrorsExitTwo) {
    const auto missing = write("m.json", {{"problem", "no_such_problem.json"}});
    EXPECT_EQ(run("validate --config " + missing.string()), 2);
    EXPECT_EQ(run("validate --config " + (dir_ / "absent.json").string()), 2);
    std::ofstream(dir_ / "broken.json") << "{\"problem\": ";
    EXPECT_EQ(run("solve --config " + (dir_ / "broken.json").string()), 2);
    const auto unknown = write("u.json", {{"problem", preset_path("linear1d")}, {"colour", "blue"}});
    EXPECT_EQ(run("solve --config " + unknown.string()), 2);
    EXPECT_EQ(run("solve"), 2);
    EXPECT_EQ(run("explode --config x"), 2);
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, RateStudyWithOneKWritesOneRow) {
    const auto cfg = write("c.json", {{"problem", preset_path("two_control1d")}, {"h", 0.03125}, {"K", {4}}});
    ASSERT_EQ(run("rate-study --config " + cfg.string()), 0) << output_;
    const auto csv = slurp(dir_ / "out" / "rate.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "K,e_K,weighted,ratio,iterations,wall_time_ms");
    const auto s = json::parse(slurp(dir_ / "out" / "summary.json"));
    EXPECT_TRUE(s["slope"].is_null());
    EXPECT_NE(output_.find("slope n/a"), std::string::npos);
}

TEST_F(Cli, RerunsAreByteIdentical) {
    const auto cfg = write("c.json", {{"problem", preset_path("game1d")},
                                      {"h", 0.0625},
                                      {"x0", {{0.2}}},
                                      {"epsilon", {0.0, 0.2}},
                                      {"n_paths", 300},
                                      {"dt", 0.004}});
    for (const char* out : {"a", "b"})
        ASSERT_EQ(run("simulate --config " + cfg.string() + " --threads 2 --out " + out), 0) << output_;
    EXPECT_EQ(slurp(dir_ / "a" / "simulate.csv"), slurp(dir_ / "b" / "simulate.csv"));
    ASSERT_EQ(run("rate-study --config " + write("r.json", {{"problem", preset_path("two_control1d")},
                                                            {"h", 0.0625},
                                                            {"K", {1, 2, 4}},
                                                            {"out", "r1"}})
                                               .string()),
              0);
    ASSERT_EQ(run("rate-study --config " + (dir_ / "r.json").string() + " --out r2"), 0);
    EXPECT_EQ(slurp(dir_ / "r1" / "rate.csv"), slurp(dir_ / "r2" / "rate.csv"));
    // A different seed changes the estimates; the flag lands in the embedded config.
    ASSERT_EQ(run("simulate --config " + cfg.string() + " --seed 99 --out c"), 0) << output_;
    EXPECT_NE(slurp(dir_ / "a" / "simulate.csv"), slurp(dir_ / "c" / "simulate.csv"));
    EXPECT_EQ(json::parse(slurp(dir_ / "c" / "summary.json"))["config"]["seed"], 99);
}

TEST_F(Cli, SimulateUnitTerminalCostGivesOne) {
    auto p = preset("linear1d");
    p["coefficient_preset"]["default"]["f"] = 0.0;
    p["terminal_cost_preset"] = 1.0;
    write("p.json", p);
    const auto cfg = write("c.json", {{"problem", "p.json"}, {"h", 0.0625}, {"n_paths", 200}, {"dt", 0.004}});
    ASSERT_EQ(run("simulate --config " + cfg.string()), 0) << output_;
    const auto s = json::parse(slurp(dir_ / "out" / "summary.json"));
    EXPECT_EQ(s["estimates"][0]["estimate"]["mean"], 1.0);
    EXPECT_EQ(s["estimates"][0]["estimate"]["stderr"], 0.0);
}

TEST_F(Cli, DppWithZeroHorizonHasZeroDiscrepancy) {
    const auto cfg = write("c.json", {{"problem", preset_path("wholespace1d")},
                                      {"h", 0.0625},
                                      {"gamma", 0.0},
                                      {"x0", {{0.0}, {1.5}}},
                                      {"n_paths", 10}});
    ASSERT_EQ(run("dpp-check --config " + cfg.string()), 0) << output_;
    const auto s = json::parse(slurp(dir_ / "out" / "summary.json"));
    for (const auto& c : s["checks"]) EXPECT_EQ(c["discrepancy"], 0.0);
}

TEST_F(Cli, LiftCheckOnLinearPresetPasses) {
    const auto cfg = write("c.json", {{"problem", preset_path("linear1d")},
                                      {"h", 0.0625},
                                      {"x0", {{0.0}, {0.4}, {0.995}}},
                                      {"n_paths", 500},
                                      {"dt", 0.004}});
    ASSERT_EQ(run("lift-check --config " + cfg.string()), 0) << output_;
    const auto csv = slurp(dir_ / "out" / "reduction.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')),
              "x0,psi,v_h,vbar_mean,vbar_stderr,difference,tolerance,refined,skipped,pass");
    EXPECT_NE(output_.find("SKIP reduction"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir_ / "out" / "equator.csv"));
    const auto g = write("g.json", {{"problem", preset_path("affine_g1d")}});
    EXPECT_EQ(run("lift-check --config " + g.string()), 2);
}
