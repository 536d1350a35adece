#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rbdo/experiment.hpp"

namespace {

int run_command(const std::string& config_path, const std::string& preset_name,
                std::optional<std::size_t> reps, std::optional<std::size_t> mc_n,
                std::optional<std::uint64_t> seed, std::optional<std::string> out_dir,
                int workers) {
    rbdo::ExperimentConfig cfg;
    if (!preset_name.empty()) {
        const rbdo::Preset* p = rbdo::find_preset(preset_name);
        if (p == nullptr) {
            std::cerr << "unknown preset '" << preset_name << "'\n";
            return 2;
        }
        cfg = rbdo::parse_experiment_config(p->text, "preset:" + preset_name);
    } else {
        cfg = rbdo::load_experiment_config(config_path);
    }
    if (reps) cfg.reps = *reps;
    if (mc_n) cfg.mc_n = *mc_n;
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    const std::vector<std::string> files = rbdo::run_experiment(cfg, workers);
    for (const std::string& f : files) std::cout << f << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Reliability-based design optimization experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment from a config file or preset");
    std::string config_path;
    std::string preset_name;
    std::optional<std::size_t> reps, mc_n;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    int workers = 1;
    auto* config_opt = run->add_option("--config", config_path, "Path to a config document");
    auto* preset_opt = run->add_option("--preset", preset_name, "Name of a bundled preset");
    run->add_option("--reps", reps, "Override replication count");
    run->add_option("--mc-n", mc_n, "Override Monte Carlo sample count");
    run->add_option("--seed", seed, "Override the random seed");
    run->add_option("--out", out_dir, "Override the output directory");
    run->add_option("--workers", workers, "Parallel replication workers")
        ->check(CLI::PositiveNumber);
    config_opt->excludes(preset_opt);

    auto* presets_cmd = app.add_subcommand("presets", "List bundled experiment presets");
    std::string dump_dir;
    presets_cmd->add_option("--dump", dump_dir, "Write the preset config files to a directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            if (config_path.empty() && preset_name.empty()) {
                std::cerr << "run: need --config or --preset\n";
                return 2;
            }
            return run_command(config_path, preset_name, reps, mc_n, seed, out_dir, workers);
        }
        if (presets_cmd->parsed()) {
            for (const rbdo::Preset& p : rbdo::presets()) {
                std::cout << p.name << "  -  " << p.description << "\n";
            }
            if (!dump_dir.empty()) {
                std::filesystem::create_directories(dump_dir);
                for (const rbdo::Preset& p : rbdo::presets()) {
                    const auto path = std::filesystem::path(dump_dir) / (p.name + ".json");
                    std::ofstream out(path, std::ios::binary);
                    out << p.text << "\n";
                }
            }
            return 0;
        }
    } catch (const rbdo::Error& e) {
        std::cerr << e.what() << "\n";
        return e.code() == rbdo::ErrorCode::kConfig ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 1;
    }
    return 0;
}
