#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rbdo/solve.hpp"

namespace rbdo {

// Runs fn(0..count-1) on up to `workers` threads. Each index must write only
// its own output slot; results are then independent of scheduling.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

enum class ProblemKind { kTension, kBeam, kExponential };

struct BenchSetup {
    ProblemKind kind = ProblemKind::kTension;
    TensionTruth tension{};
    BeamTruth beam{};
    double exp_rate = 1.0;
    double reliability_target = 0.99;  // tension / exponential (beam carries its own)
    std::size_t score_n = 100000;      // Monte Carlo size for effective reliabilities
};

struct RepRecord {
    int rep = 0;
    std::size_t m = 0;
    Strategy strategy = Strategy::kPlugIn;
    std::vector<double> d;
    double cost = 0.0;
    double m_eff = 0.0;
    std::vector<double> r_eff;
    double margin_value = 0.0;  // largest applied margin across constraints
    bool feasible = false;
    std::string error;  // error-code name; empty when the solve succeeded
};

struct Aggregate {
    std::size_t n_total = 0;
    std::size_t n_feasible = 0;
    double infeasible_fraction = 0.0;
    double mean_cost = 0.0;
    double mean_m_eff = 0.0;
    double sd_m_eff = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;                  // two-sided 95%
    double one_sided_lo = 0.0, one_sided_hi = 0.0;    // 95% one-sided bounds
    std::vector<double> mean_r_eff;
    double coverage = 0.0;     // all effective reliabilities at or above target
    double coverage_se = 0.0;  // binomial standard error over all replications
};

struct EnsembleReport {
    Strategy strategy = Strategy::kPlugIn;
    std::size_t m = 0;
    double cost_star = 0.0;
    std::vector<double> targets;
    std::vector<RepRecord> records;
    Aggregate aggregate;
};

// (cost - cost_star) / cost_star.
double effective_margin(double cost, double cost_star);

enum class ReliabilityMode { kAnalytic, kMonteCarlo };

// Per-constraint reliability of a design under the ground-truth laws.
std::vector<double> effective_reliability(const BenchSetup& setup, std::span<const double> d,
                                          ReliabilityMode mode, std::size_t n,
                                          SeededStream stream);

// Draw data from the truth, fit, solve, and score `reps` times; replication k
// derives its streams from stream id k.
EnsembleReport replicate(const BenchSetup& setup, const StrategyConfig& config,
                         std::size_t m, std::size_t reps, SeededStream stream,
                         int workers = 1);

// Fraction of replications whose design meets every reliability target at the
// truth; infeasible replications count against coverage.
double c2_coverage(const EnsembleReport& report, double target);

// ---------------------------------------------------------------------------
// Studies.
// ---------------------------------------------------------------------------

// Exponential-estimator bias study (one deterministic row per sample count):
// CRI solved against the exact sampling distribution of the rate estimate,
// MIP evaluated at the alpha-percentile realization, where its effective
// margin cancels to zero.
struct ExpBiasRow {
    std::size_t m = 0;
    double m_eff_cri = 0.0;
    double m_eff_mip = 0.0;
};
std::vector<ExpBiasRow> exp_bias_study(double rate, double failure_target, double alpha,
                                       std::span<const std::size_t> m_grid,
                                       std::size_t n_outer, SeededStream stream);

// Variance comparison between the Monte Carlo margin variance estimate and
// its analytic-gradient counterpart, across (m, n) cells. Both use the same
// fitted-parameter draws per m, so the ratio isolates the Monte Carlo noise
// in the gradient.
struct VarianceBalanceCell {
    std::size_t m = 0;
    std::size_t n = 0;
    double ratio = 0.0;  // Var[mc tau^2] / Var[analytic tau^2]
};
std::vector<VarianceBalanceCell> variance_balance_study(
    const TensionTruth& truth, double target, std::span<const std::size_t> m_grid,
    std::span<const std::size_t> n_grid, std::size_t reps, SeededStream stream,
    int workers = 1);

}  // namespace rbdo
