#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rbdo/bench.hpp"

namespace rbdo {

// One strategy line of an experiment configuration.
struct StrategyEntry {
    Strategy strategy = Strategy::kPlugIn;
    double confidence = 0.95;  // margin confidence / CRI alpha
    BasisSpec basis{};         // basis-value strategies
};

enum class StudyKind { kEnsemble, kExpBias, kVarianceBalance };

struct ExperimentConfig {
    int schema_version = 1;
    ProblemKind problem = ProblemKind::kTension;
    StudyKind study = StudyKind::kEnsemble;
    std::vector<StrategyEntry> strategies;
    std::vector<double> targets;
    std::vector<std::size_t> m_grid;
    std::size_t reps = 100;
    std::size_t mc_n = 10000;
    std::size_t n_outer = 20000;
    std::size_t score_n = 100000;
    std::uint64_t seed = 0;
    std::string format = "csv";  // csv | json
    std::string out_dir = ".";
    OptimizerConfig optimizer{};
    // exp-bias study
    double alpha = 0.9;
    double failure_target = 0.01;
    // variance-balance study
    std::vector<std::size_t> n_grid;
};

// Parses and validates a configuration document (JSON; // and /* */ comments
// allowed). Throws Error(kConfig) with a line- or path-anchored message.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& source_name);
ExperimentConfig load_experiment_config(const std::string& path);

// Runs the configured experiment and writes the output files; returns the
// paths written. Identical config and seed produce byte-identical files for
// any worker count.
std::vector<std::string> run_experiment(const ExperimentConfig& config, int workers = 1);

// Bundled experiment presets.
struct Preset {
    std::string name;
    std::string description;
    std::string text;  // config document
};
const std::vector<Preset>& presets();
const Preset* find_preset(const std::string& name);

}  // namespace rbdo
