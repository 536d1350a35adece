#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rbdo/problems.hpp"

namespace rbdo {

struct ReliabilityEstimate {
    double r_hat = 0.0;
    std::vector<double> grad_theta;  // one entry per estimated parameter
    std::size_t n = 0;
    double std_err = 0.0;
};

struct LimitMeanGradient {
    double mean_g = 0.0;
    std::vector<double> grad_theta;
    std::size_t n = 0;
};

// ---------------------------------------------------------------------------
// Shared sample batch.
//
// One batch serves the reliability estimate, its likelihood-ratio gradient,
// the limit-mean gradient and every limit state of the problem, so margins
// reuse the samples already paid for by the reliability analysis. Scores are
// evaluated at the sampling (plug-in) parameters and cover only variables
// whose parameters are estimated.
// ---------------------------------------------------------------------------

struct McBatch {
    std::size_t n = 0;
    std::size_t n_vars = 0;
    std::size_t est_dim = 0;              // total estimated parameters
    std::vector<double> x;                // n * n_vars, row-major
    std::vector<double> scores;           // n * est_dim, row-major

    std::span<const double> sample_row(std::size_t i) const {
        return {x.data() + i * n_vars, n_vars};
    }
    std::span<const double> score_row(std::size_t i) const {
        return {scores.data() + i * est_dim, est_dim};
    }
};

// Plug-in sampling models: estimated variables take their fitted parameters,
// known variables keep the problem's law. `estimates` is indexed per random
// variable; entries for known variables must be empty.
std::vector<DistributionModel> sampling_models(
    const DesignProblem& problem,
    const std::vector<std::optional<ParamEstimate>>& estimates);

McBatch draw_batch(const std::vector<DistributionModel>& models,
                   const std::vector<bool>& estimated, std::size_t n,
                   SeededStream stream);
McBatch draw_batch(const DesignProblem& problem,
                   const std::vector<std::optional<ParamEstimate>>& estimates,
                   std::size_t n, SeededStream stream);

// g_k(d, x_i) for every sample of the batch.
std::vector<double> eval_limit_state(const DesignProblem& problem,
                                     std::size_t limit_index,
                                     std::span<const double> d, const McBatch& batch);

// ---------------------------------------------------------------------------
// Estimators. The *_from_batch forms consume a precomputed batch; the
// convenience forms draw their own.
// ---------------------------------------------------------------------------

ReliabilityEstimate mc_reliability_from_batch(const McBatch& batch,
                                              std::span<const double> g);

ReliabilityEstimate mc_reliability(const DesignProblem& problem, std::size_t limit_index,
                                   std::span<const double> d,
                                   const std::vector<std::optional<ParamEstimate>>& estimates,
                                   std::size_t n, SeededStream stream);

LimitMeanGradient mc_limit_mean_gradient_from_batch(const McBatch& batch,
                                                    std::span<const double> g);

LimitMeanGradient mc_limit_mean_gradient(const DesignProblem& problem,
                                         std::size_t limit_index, std::span<const double> d,
                                         const std::vector<std::optional<ParamEstimate>>& estimates,
                                         std::size_t n, SeededStream stream);

// Ascending empirical quantile at the ceil(q*n) order statistic (1-based),
// clamped to the sample range.
double empirical_quantile(std::span<const double> values, double q);

// Performance-measure-approach quantile: the ceil((1-target)*n) lower order
// statistic of the limit-state samples.
double pma_quantile(std::span<const double> g, double target);

}  // namespace rbdo
