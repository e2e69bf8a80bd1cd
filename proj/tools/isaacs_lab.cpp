#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "isaacs/experiment.hpp"

namespace {

namespace fs = std::filesystem;

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    bool timing = false;
};

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw isaacs::ConfigError("cannot write " + p.string());
    f << text;
}

void write_outputs(const fs::path& dir, const isaacs::RunResult& r) {
    fs::create_directories(dir);
    write_file(dir / "summary.json", r.summary.dump(2) + "\n");
    for (const auto& [name, table] : r.tables) write_file(dir / name, table.str());
}

int run(const std::string& command, const Options& o) {
    isaacs::ExperimentConfig cfg;
    try {
        cfg = isaacs::load_config(o.config);
        if (!o.out.empty()) cfg.out = o.out;
        if (o.seed) cfg.seed = *o.seed;
        if (o.threads) cfg.threads = *o.threads;
        if (o.timing) cfg.timing = true;
        isaacs::check_config(cfg);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }
    const fs::path out = fs::path(cfg.out).is_absolute() ? fs::path(cfg.out) : fs::path(cfg.base_dir) / cfg.out;
    try {
        const auto r = isaacs::run_command(command, cfg);
        write_outputs(out, r);
        std::cout << r.report;
        std::cout << (r.exit_code == 0 ? "PASS " : "FAIL ") << command << " -> " << out.string() << "\n";
        return r.exit_code;
    } catch (const isaacs::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const isaacs::OutsideDomainError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const isaacs::NonConvergenceError& e) {
        std::cerr << "solver did not converge: " << e.what() << "\n";
        isaacs::RunResult r;
        r.exit_code = 1;
        r.summary = {{"schema_version", isaacs::kSchemaVersion},
                     {"tool_version", isaacs::kToolVersion},
                     {"command", command},
                     {"config", isaacs::to_json(cfg)},
                     {"error", e.what()},
                     {"residual_history", e.residual_history},
                     {"exit_code", 1}};
        write_outputs(out, r);
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Isaacs equation solver, simulator and surface-lift checks"};
    app.set_version_flag("--version", std::string(isaacs::kToolVersion));
    app.require_subcommand(1);
    Options o;
    const std::vector<std::pair<const char*, const char*>> commands{
        {"validate", "Check the structural assumptions and the barrier"},
        {"solve", "Solve the discrete Isaacs equation"},
        {"solve-reg", "Solve the regularized equation for each K"},
        {"rate-study", "Tabulate |v_K - v| against K"},
        {"simulate", "Monte Carlo payoff estimates"},
        {"dpp-check", "Dynamic programming identity on a whole-space problem"},
        {"lift-check", "Surface reduction and equator moment checks"}};
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", o.config, "Experiment config (JSON)")->required();
        sub->add_option("--out", o.out, "Output directory (overrides the config)");
        sub->add_option("--seed", o.seed, "Random seed (overrides the config)");
        sub->add_option("--threads", o.threads, "Worker threads (overrides the config)");
        sub->add_flag("--timing", o.timing, "Record wall times");
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return run(app.get_subcommands().front()->get_name(), o);
}
