#include "rbdo/experiment.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rbdo {

namespace {

using nlohmann::json;

[[noreturn]] void config_fail(const std::string& source, const std::string& where,
                              const std::string& msg) {
    fail(ErrorCode::kConfig, source + ": " + where + ": " + msg);
}

std::pair<int, int> line_col_of(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

ProblemKind problem_from_name(const std::string& name, const std::string& source) {
    if (name == "tension") return ProblemKind::kTension;
    if (name == "beam") return ProblemKind::kBeam;
    if (name == "exponential") return ProblemKind::kExponential;
    config_fail(source, "$.problem", "unknown problem '" + name + "'");
}

StudyKind study_from_name(const std::string& name, const std::string& source) {
    if (name == "ensemble") return StudyKind::kEnsemble;
    if (name == "exp_bias") return StudyKind::kExpBias;
    if (name == "variance_balance") return StudyKind::kVarianceBalance;
    config_fail(source, "$.study", "unknown study '" + name + "'");
}

template <typename T>
T require_field(const json& j, const char* key, const std::string& source) {
    if (!j.contains(key)) {
        config_fail(source, std::string("$.") + key, "missing required field");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        config_fail(source, std::string("$.") + key, e.what());
    }
}

template <typename T>
T optional_field(const json& j, const char* key, T fallback, const std::string& source) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        config_fail(source, std::string("$.") + key, e.what());
    }
}

std::string fmt17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& source) {
    json j;
    try {
        j = json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::parse_error& e) {
        const auto [line, col] = line_col_of(text, e.byte > 0 ? e.byte - 1 : 0);
        fail(ErrorCode::kConfig, source + ":" + std::to_string(line) + ":" +
                                     std::to_string(col) + ": " + e.what());
    }
    if (!j.is_object()) config_fail(source, "$", "config must be a JSON object");

    ExperimentConfig cfg;
    cfg.schema_version = require_field<int>(j, "schema_version", source);
    if (cfg.schema_version != 1) {
        config_fail(source, "$.schema_version", "unsupported schema version");
    }
    cfg.problem = problem_from_name(require_field<std::string>(j, "problem", source), source);
    cfg.study = study_from_name(optional_field<std::string>(j, "study", "ensemble", source),
                                source);
    if (!j.contains("seed")) {
        config_fail(source, "$.seed", "missing required field (runs must pin a seed)");
    }
    cfg.seed = require_field<std::uint64_t>(j, "seed", source);
    cfg.reps = optional_field<std::size_t>(j, "reps", cfg.reps, source);
    cfg.mc_n = optional_field<std::size_t>(j, "mc_n", cfg.mc_n, source);
    cfg.n_outer = optional_field<std::size_t>(j, "n_outer", cfg.n_outer, source);
    cfg.score_n = optional_field<std::size_t>(j, "score_n", cfg.score_n, source);
    cfg.format = optional_field<std::string>(j, "format", cfg.format, source);
    if (cfg.format != "csv" && cfg.format != "json") {
        config_fail(source, "$.format", "format must be 'csv' or 'json'");
    }
    cfg.out_dir = optional_field<std::string>(j, "out_dir", cfg.out_dir, source);
    cfg.optimizer.cost_tolerance =
        optional_field<double>(j, "cost_tolerance", cfg.optimizer.cost_tolerance, source);
    cfg.optimizer.max_outer_iters =
        optional_field<int>(j, "max_outer_iters", cfg.optimizer.max_outer_iters, source);
    cfg.alpha = optional_field<double>(j, "alpha", cfg.alpha, source);
    cfg.failure_target = optional_field<double>(j, "failure_target", cfg.failure_target, source);

    if (cfg.study == StudyKind::kEnsemble) {
        if (!j.contains("strategies") || !j.at("strategies").is_array() ||
            j.at("strategies").empty()) {
            config_fail(source, "$.strategies", "need a nonempty strategy list");
        }
        std::size_t idx = 0;
        for (const json& s : j.at("strategies")) {
            const std::string where = "$.strategies[" + std::to_string(idx++) + "]";
            if (!s.is_object() || !s.contains("strategy")) {
                config_fail(source, where, "each entry needs a 'strategy' field");
            }
            StrategyEntry entry;
            const std::string name = s.at("strategy").get<std::string>();
            const auto strat = strategy_from_name(name);
            if (!strat.has_value()) {
                config_fail(source, where + ".strategy", "unknown strategy '" + name + "'");
            }
            entry.strategy = *strat;
            entry.confidence = optional_field<double>(s, "confidence", 0.95, source);
            entry.basis.pop_fraction = optional_field<double>(s, "pop_fraction", 0.99, source);
            entry.basis.confidence =
                optional_field<double>(s, "basis_confidence", 0.95, source);
            cfg.strategies.push_back(entry);
        }
        cfg.targets = require_field<std::vector<double>>(j, "targets", source);
        if (cfg.targets.empty()) config_fail(source, "$.targets", "need at least one target");
        for (double t : cfg.targets) {
            if (!(t > 0.0) || !(t < 1.0)) {
                config_fail(source, "$.targets", "targets must lie inside (0,1)");
            }
        }
        cfg.m_grid = require_field<std::vector<std::size_t>>(j, "m_grid", source);
        if (cfg.m_grid.empty()) config_fail(source, "$.m_grid", "need at least one m");
        if (cfg.reps < 1) config_fail(source, "$.reps", "reps must be >= 1");
    } else if (cfg.study == StudyKind::kExpBias) {
        if (cfg.problem != ProblemKind::kExponential) {
            config_fail(source, "$.study", "exp_bias study requires problem = exponential");
        }
        cfg.m_grid = require_field<std::vector<std::size_t>>(j, "m_grid", source);
        if (cfg.m_grid.empty()) config_fail(source, "$.m_grid", "need at least one m");
    } else {
        if (cfg.problem != ProblemKind::kTension) {
            config_fail(source, "$.study", "variance_balance study requires problem = tension");
        }
        cfg.m_grid = require_field<std::vector<std::size_t>>(j, "m_grid", source);
        cfg.n_grid = require_field<std::vector<std::size_t>>(j, "n_grid", source);
        if (cfg.m_grid.empty() || cfg.n_grid.empty()) {
            config_fail(source, "$.m_grid", "variance_balance needs m_grid and n_grid");
        }
        cfg.targets = optional_field<std::vector<double>>(j, "targets", {0.99}, source);
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::kConfig, path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str(), path);
}

namespace {

StrategyConfig strategy_config_of(const ExperimentConfig& cfg, const StrategyEntry& entry,
                                  double target) {
    StrategyConfig sc;
    sc.strategy = entry.strategy;
    sc.margin = MarginSpec{margin_kind_for(entry.strategy), entry.confidence};
    sc.reliability_target = target;
    sc.basis = entry.basis;
    sc.mc_n = cfg.mc_n;
    sc.n_outer = cfg.n_outer;
    sc.optimizer = cfg.optimizer;
    return sc;
}

struct OutputDoc {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

void write_doc(const OutputDoc& doc, const std::string& path, const std::string& format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::kConfig, path + ": cannot open output file");
    if (format == "csv") {
        for (std::size_t c = 0; c < doc.columns.size(); ++c) {
            out << (c ? "," : "") << doc.columns[c];
        }
        out << "\n";
        for (const auto& row : doc.rows) {
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << row[c];
            out << "\n";
        }
    } else {
        json arr = json::array();
        for (const auto& row : doc.rows) {
            json obj = json::object();
            for (std::size_t c = 0; c < doc.columns.size(); ++c) obj[doc.columns[c]] = row[c];
            arr.push_back(obj);
        }
        out << arr.dump(2) << "\n";
    }
}

}  // namespace

std::vector<std::string> run_experiment(const ExperimentConfig& cfg, int workers) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    const std::string ext = cfg.format == "csv" ? ".csv" : ".json";
    std::vector<std::string> written;

    BenchSetup setup;
    setup.kind = cfg.problem;
    setup.exp_rate = 1.0;
    setup.score_n = cfg.score_n;

    const SeededStream root{cfg.seed, 0};

    if (cfg.study == StudyKind::kExpBias) {
        const std::vector<ExpBiasRow> rows = exp_bias_study(
            setup.exp_rate, cfg.failure_target, cfg.alpha, cfg.m_grid, cfg.n_outer, root);
        OutputDoc doc;
        doc.columns = {"schema_version", "m", "m_eff_cri", "m_eff_mip"};
        for (const ExpBiasRow& r : rows) {
            doc.rows.push_back({std::to_string(cfg.schema_version), std::to_string(r.m),
                                fmt17(r.m_eff_cri), fmt17(r.m_eff_mip)});
        }
        const std::string path = (fs::path(cfg.out_dir) / ("exp_bias" + ext)).string();
        write_doc(doc, path, cfg.format);
        written.push_back(path);
        return written;
    }

    if (cfg.study == StudyKind::kVarianceBalance) {
        const std::vector<VarianceBalanceCell> cells = variance_balance_study(
            setup.tension, cfg.targets.empty() ? 0.99 : cfg.targets[0], cfg.m_grid,
            cfg.n_grid, cfg.reps, root, workers);
        OutputDoc doc;
        doc.columns = {"schema_version", "m", "n", "variance_ratio"};
        for (const VarianceBalanceCell& c : cells) {
            doc.rows.push_back({std::to_string(cfg.schema_version), std::to_string(c.m),
                                std::to_string(c.n), fmt17(c.ratio)});
        }
        const std::string path = (fs::path(cfg.out_dir) / ("variance_balance" + ext)).string();
        write_doc(doc, path, cfg.format);
        written.push_back(path);
        return written;
    }

    // Ensemble study over (target, strategy, m).
    std::size_t n_constraints = cfg.problem == ProblemKind::kBeam ? 2 : 1;
    OutputDoc records;
    records.columns = {"schema_version", "rep", "m", "strategy", "target", "cost", "m_eff"};
    for (std::size_t k = 1; k <= n_constraints; ++k) {
        records.columns.push_back("r_eff_" + std::to_string(k));
    }
    records.columns.insert(records.columns.end(), {"margin_value", "feasible", "error"});

    OutputDoc agg;
    agg.columns = {"schema_version", "strategy", "target", "m", "n_reps", "n_feasible",
                   "infeasible_fraction", "mean_cost", "mean_m_eff", "sd_m_eff",
                   "ci95_lo", "ci95_hi", "ci95_one_sided_lo", "ci95_one_sided_hi"};
    for (std::size_t k = 1; k <= n_constraints; ++k) {
        agg.columns.push_back("mean_r_eff_" + std::to_string(k));
    }
    agg.columns.insert(agg.columns.end(), {"coverage", "coverage_se"});

    for (std::size_t ti = 0; ti < cfg.targets.size(); ++ti) {
        const double target = cfg.targets[ti];
        setup.reliability_target = target;
        for (std::size_t mi = 0; mi < cfg.m_grid.size(); ++mi) {
            const std::size_t m = cfg.m_grid[mi];
            // Strategies share the cell stream, so they see the same data
            // draws (paired comparisons).
            const SeededStream cell = root.child(ti * 1000 + mi);
            for (const StrategyEntry& entry : cfg.strategies) {
                const StrategyConfig sc = strategy_config_of(cfg, entry, target);
                const EnsembleReport report = replicate(setup, sc, m, cfg.reps, cell, workers);
                for (const RepRecord& rec : report.records) {
                    std::vector<std::string> row = {
                        std::to_string(cfg.schema_version), std::to_string(rec.rep),
                        std::to_string(rec.m), strategy_name(rec.strategy), fmt17(target),
                        fmt17(rec.cost), fmt17(rec.m_eff)};
                    for (std::size_t k = 0; k < n_constraints; ++k) {
                        row.push_back(fmt17(k < rec.r_eff.size() ? rec.r_eff[k] : 0.0));
                    }
                    row.push_back(fmt17(rec.margin_value));
                    row.push_back(rec.feasible ? "1" : "0");
                    row.push_back(rec.error);
                    records.rows.push_back(std::move(row));
                }
                const Aggregate& a = report.aggregate;
                std::vector<std::string> row = {
                    std::to_string(cfg.schema_version), strategy_name(report.strategy),
                    fmt17(target), std::to_string(report.m), std::to_string(a.n_total),
                    std::to_string(a.n_feasible), fmt17(a.infeasible_fraction),
                    fmt17(a.mean_cost), fmt17(a.mean_m_eff), fmt17(a.sd_m_eff),
                    fmt17(a.ci_lo), fmt17(a.ci_hi), fmt17(a.one_sided_lo),
                    fmt17(a.one_sided_hi)};
                for (std::size_t k = 0; k < n_constraints; ++k) {
                    row.push_back(fmt17(k < a.mean_r_eff.size() ? a.mean_r_eff[k] : 0.0));
                }
                row.push_back(fmt17(a.coverage));
                row.push_back(fmt17(a.coverage_se));
                agg.rows.push_back(std::move(row));
            }
        }
    }

    const std::string rec_path = (fs::path(cfg.out_dir) / ("records" + ext)).string();
    const std::string agg_path = (fs::path(cfg.out_dir) / ("aggregate" + ext)).string();
    write_doc(records, rec_path, cfg.format);
    write_doc(agg, agg_path, cfg.format);
    written.push_back(rec_path);
    written.push_back(agg_path);
    return written;
}

}  // namespace rbdo
