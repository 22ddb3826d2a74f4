// Command-line front end: one subcommand per scenario, all driven by a JSON config.
#include <CLI11.hpp>

#include <iostream>

#include "ustat/errors.hpp"
#include "ustat/harness.hpp"

namespace {

struct Options {
    std::string config;
    std::string out = "out";
    std::size_t workers = 1;
};

int run(const std::string& sub, const Options& o) {
    try {
        const ustat::ExperimentConfig cfg = ustat::load_config(o.config);
        const std::string expected = ustat::scenario_for_subcommand(sub);
        if (cfg.scenario != expected) {
            std::cerr << "config scenario '" << cfg.scenario << "' does not match subcommand '" << sub
                      << "' (expects '" << expected << "')\n";
            return 2;
        }
        ustat::validate_config(cfg);
        const ustat::Artifacts art = ustat::run_experiment(cfg, o.workers);
        ustat::write_artifacts(art, o.out);
        for (const auto& [gate, ok] : art.gates) std::cout << (ok ? "PASS " : "FAIL ") << gate << '\n';
        std::cout << (art.pass() ? "all gates passed" : "some gates failed") << " (config " << cfg.hash.substr(0, 12)
                  << ", artifacts in " << o.out << ")\n";
        return art.pass() ? 0 : 1;
    } catch (const ustat::ConfigError& e) {
        std::cerr << e.what() << '\n';
        return 2;
    } catch (const ustat::Refusal& e) {
        std::cerr << "refused: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sequential U-statistic experiments"};
    app.require_subcommand(1);
    Options opts;
    const std::vector<std::pair<std::string, std::string>> subs{
        {"check", "FCLT condition checklists along an n grid"},
        {"verify-fclt", "simulate W_n and compare with the limit process"},
        {"rgg", "subgraph counts in random geometric graphs"},
        {"changepoint", "changepoint processes (U-statistic or edge count)"},
        {"diag", "diagonal-dominant kernels (Dirichlet, Haar)"},
        {"product", "exact product-formula battery"}};
    for (const auto& [name, help] : subs) {
        auto* sc = app.add_subcommand(name, help);
        sc->add_option("--config", opts.config, "JSON config file")->required()->check(CLI::ExistingFile);
        sc->add_option("--out", opts.out, "output directory")->capture_default_str();
        sc->add_option("--workers", opts.workers, "worker threads for replicate loops")
            ->capture_default_str()
            ->check(CLI::PositiveNumber);
    }
    CLI11_PARSE(app, argc, argv);
    for (const auto* sc : app.get_subcommands()) return run(sc->get_name(), opts);
    return 2;
}
