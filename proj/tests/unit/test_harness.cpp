#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ustat/harness.hpp"

using namespace ustat;

namespace {

const char* kDonsker = R"({
  "scenario": "fclt_verify", "seed": 3,
  "distribution": {"kind": "finite", "atoms": [0, 1], "weights": [0.5, 0.5]},
  "kernel": {"kind": "sum", "order": 1},
  "n": 100, "replicates": 200, "cov_grid": [0.5, 1.0],
  "gates": {"cov_max_abs": 0.2}
})";

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

TEST(Config, HashIgnoresLayout) {
    const auto a = parse_config_text(R"({"scenario": "product_verify", "seed": 1, "instances": 2})");
    const auto b = parse_config_text("{\"instances\":2,\n \"seed\":1, \"scenario\":\"product_verify\"}");
    const auto c = parse_config_text(R"({"scenario": "product_verify", "seed": 2, "instances": 2})");
    EXPECT_EQ(a.hash, b.hash);
    EXPECT_NE(a.hash, c.hash);
    EXPECT_EQ(a.hash.size(), 64u);
}

TEST(Config, MalformedJsonRejected) { EXPECT_THROW(parse_config_text("{\"scenario\": "), ConfigError); }

TEST(Config, EveryProblemListed) {
    const auto cfg = parse_config_text(R"({
      "scenario": "fclt_verify", "seed": -1,
      "distribution": {"kind": "finite", "atoms": [0, 1], "weights": [0.5]},
      "kernel": {"kind": "nonsense"},
      "n": 0, "replicates": 10, "cov_grid": [1.5],
      "typo_field": 1
    })");
    try {
        validate_config(cfg);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_GE(e.problems().size(), 5u);
        bool typo = false;
        for (const auto& p : e.problems()) typo = typo || p.find("typo_field") != std::string::npos;
        EXPECT_TRUE(typo);
    }
}

TEST(Config, UnknownScenario) {
    EXPECT_THROW(validate_config(parse_config_text(R"({"scenario": "nope"})")), ConfigError);
}

TEST(Config, ShippedConfigsValidate) {
    for (const auto& entry : std::filesystem::directory_iterator(std::filesystem::path(USTAT_SOURCE_DIR) / "configs")) {
        if (entry.path().extension() != ".json") continue;
        EXPECT_NO_THROW(validate_config(load_config(entry.path()))) << entry.path();
    }
}

TEST(Cli, SubcommandMapping) {
    EXPECT_EQ(scenario_for_subcommand("check"), "condition_check");
    EXPECT_EQ(scenario_for_subcommand("verify-fclt"), "fclt_verify");
    EXPECT_EQ(scenario_for_subcommand("diag"), "diag_dominant");
    EXPECT_EQ(scenario_for_subcommand("product"), "product_verify");
    EXPECT_THROW(scenario_for_subcommand("bogus"), std::invalid_argument);
}

TEST(Output, DoubleFormatting) {
    EXPECT_EQ(format_double(0.25), "0.25");
    EXPECT_EQ(format_double(1e-300), "1e-300");
    EXPECT_EQ(std::stod(format_double(0.1 + 0.2)), 0.1 + 0.2);
    EXPECT_EQ(format_double(std::numeric_limits<double>::quiet_NaN()), "nan");
}

TEST(Run, SmallDonskerPasses) {
    const auto cfg = parse_config_text(kDonsker);
    const Artifacts a = run_experiment(cfg, 2);
    EXPECT_TRUE(a.pass());
    EXPECT_EQ(a.report.at("config_hash"), cfg.hash);
    EXPECT_TRUE(a.report.contains("module_versions"));
    EXPECT_EQ(a.paths.size() % 200, 0u);
    EXPECT_FALSE(a.cov.empty());
}

TEST(Run, ProductScenario) {
    const auto cfg = parse_config_text(R"({"scenario": "product_verify", "seed": 5, "instances": 3,
      "max_pq": 3, "max_m": 4, "max_atoms": 3})");
    const Artifacts a = run_experiment(cfg, 1);
    EXPECT_TRUE(a.pass());
    EXPECT_FALSE(a.checks.empty());
}

TEST(Run, WorkerCountDoesNotChangeFiles) {
    const auto cfg = parse_config_text(kDonsker);
    const auto base = std::filesystem::temp_directory_path() / "ustat_harness_test";
    write_artifacts(run_experiment(cfg, 1), base / "w1");
    write_artifacts(run_experiment(cfg, 3), base / "w3");
    for (const char* f : {"report.json", "cov.csv", "checks.csv", "paths.csv"})
        EXPECT_EQ(slurp(base / "w1" / f), slurp(base / "w3" / f)) << f;
    EXPECT_EQ(slurp(base / "w1" / "cov.csv").substr(0, 24), "s,t,empirical,target,se\n");
    std::filesystem::remove_all(base);
}
