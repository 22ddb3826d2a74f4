#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace ustat {

using Json = nlohmann::json;

// Raised when a config fails validation; `problems` lists every violated field.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> problems);
    const std::vector<std::string>& problems() const { return problems_; }

private:
    std::vector<std::string> problems_;
};

struct ExperimentConfig {
    std::string scenario;  // condition_check | fclt_verify | rgg | changepoint | diag_dominant | product_verify
    Json body;
    std::string hash;      // SHA-256 of the canonical serialisation
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Throws ConfigError listing every problem found (scenario-specific checks included).
void validate_config(const ExperimentConfig& cfg);

// Maps a CLI subcommand (check, verify-fclt, rgg, changepoint, diag, product) to its scenario.
std::string scenario_for_subcommand(const std::string& sub);

struct CovRow {
    double s, t, empirical, target, se;
};
struct CheckRow {
    std::string id;
    std::size_t n;
    double value;
};
struct PathRow {
    std::size_t replicate;
    double t;
    double value;
};

struct Artifacts {
    Json report;
    std::vector<CovRow> cov;
    std::vector<CheckRow> checks;
    std::vector<PathRow> paths;
    std::map<std::string, bool> gates;  // gate name -> passed
    bool pass() const;
};

const std::map<std::string, std::string>& module_versions();

// Runs the scenario end to end. Replicate loops use up to `workers` threads; the
// outputs do not depend on the worker count.
Artifacts run_experiment(const ExperimentConfig& cfg, std::size_t workers);

// report.json, cov.csv, checks.csv and paths.csv in long format.
void write_artifacts(const Artifacts& a, const std::filesystem::path& out_dir);

// Shortest round-trip decimal form, used for every number written to CSV.
std::string format_double(double x);

}  // namespace ustat
