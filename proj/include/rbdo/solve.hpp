#pragma once

#include <optional>
#include <span>
#include <vector>

#include "rbdo/margin.hpp"
#include "rbdo/problems.hpp"
#include "rbdo/reliability.hpp"
#include "rbdo/tolerance.hpp"

namespace rbdo {

enum class Strategy { kPlugIn, kRegulated, kMixedBv, kMil, kMip, kCri, kPri };

const char* strategy_name(Strategy s);
std::optional<Strategy> strategy_from_name(std::string_view name);
MarginKind margin_kind_for(Strategy s);

struct BasisSpec {
    double pop_fraction = 0.99;  // A-basis defaults
    double confidence = 0.95;
};

struct OptimizerConfig {
    int max_outer_iters = 100;
    double cost_tolerance = 1e-6;
    double damping = 0.5;     // fixed-point / margin-update damping
    int multistart = 5;
};

struct StrategyConfig {
    Strategy strategy = Strategy::kPlugIn;
    MarginSpec margin{MarginKind::kNone, 0.95};
    double reliability_target = 0.99;
    std::optional<BasisSpec> basis;  // required by Regulated / MixedBv
    std::size_t mc_n = 10000;        // inner Monte Carlo samples
    std::size_t n_outer = 20000;     // outer draws for semianalytic / bootstrap margins
    OptimizerConfig optimizer{};

    void validate() const;
};

struct DesignResult {
    std::vector<double> d;
    double cost = 0.0;
    std::vector<double> reliability;  // per-constraint estimated reliability
    std::vector<MarginValue> margins;
    bool feasible = false;
    int iterations = 0;
};

// ---------------------------------------------------------------------------
// Tension strategies. The estimated-reliability surface is analytic, so all
// of these are closed-form or one-dimensional root finds.
// ---------------------------------------------------------------------------

struct TensionLoad {
    double mean = 100.0;
    double variance = 100.0;
    double radius = 1.0;
};

TensionLoad load_of(const TensionTruth& truth);

DesignResult solve_tension_plugin(const ParamEstimate& strength, const TensionLoad& load,
                                  double target);

// Margin in limit applied as a mean shift inside the closed-form design. The
// default margin uses the plug-in standard deviation; pass `margin_override`
// to apply an externally computed margin (e.g. from the true parameters).
DesignResult solve_tension_mil(const ParamEstimate& strength, const TensionLoad& load,
                               double target, double confidence,
                               std::optional<double> margin_override = std::nullopt);

// Margin in probability, solved by damped fixed point. The margin quantile
// is taken over the exact sampling distribution of the estimator under
// `sampling_truth` (the semianalytic protocol).
DesignResult solve_tension_mip_semianalytic(const ParamEstimate& strength,
                                            const TensionTruth& sampling_truth,
                                            double target, double confidence,
                                            std::size_t n_outer, SeededStream stream,
                                            const OptimizerConfig& opt = {});

DesignResult solve_tension_pri(const ParamEstimate& strength, const TensionLoad& load,
                               double target);

// Conservative reliability index with parametric-bootstrap outer sampling
// around the fitted parameters.
DesignResult solve_tension_cri(const ParamEstimate& strength, const TensionLoad& load,
                               double target, double alpha, std::size_t n_outer,
                               SeededStream stream);

// Regulated sizing: A* = 1.5 * mean_load / B, independent of any reliability
// target.
DesignResult solve_regulated(const BasisValue& basis, double mean_load, double radius = 1.0);

// Mixed basis-value sizing: only the load is random, the material enters
// through its basis value. A* = (mean_load + Phi^{-1}(target) sd_load) / B.
// A zero load variance is allowed (deterministic load).
DesignResult solve_mixed_bv(const BasisValue& basis, double mean_load, double var_load,
                            double target, double radius = 1.0);
DesignResult solve_mixed_bv(const BasisValue& basis, const DistributionModel& load_model,
                            double target, double radius = 1.0);

// Strategy dispatcher used by the replication harness.
struct TensionSolveContext {
    ParamEstimate strength;
    TensionTruth truth;     // load parameters, outer-sampling law, exact margins
    SeededStream stream;    // consumed by MIP / CRI outer sampling
};
DesignResult solve_tension(const StrategyConfig& config, const TensionSolveContext& ctx);

// ---------------------------------------------------------------------------
// Exponential threshold strategies (one design variable, analytic failure
// probability exp(-rate * d)).
// ---------------------------------------------------------------------------

// Sampling distribution of the rate estimator 1/mean(m samples) with samples
// drawn at `reference_rate`.
struct ExpOuterDraws {
    std::vector<double> rates;
    double reference_rate = 1.0;
    std::size_t m = 0;
};
ExpOuterDraws exp_rate_outer_draws(double reference_rate, std::size_t m,
                                   std::size_t n_outer, SeededStream stream);

// CRI: d such that the alpha order statistic of the sampled failure chances
// equals the failure target (monotone bisection).
DesignResult solve_exp_cri_with_draws(const ExpOuterDraws& draws, double failure_target,
                                      double alpha);

// MIP: d solving F(center, d) + p(d) = failure_target with
// p(d) = alpha-quantile over the draws of F(reference, d) - F(rate_j, d),
// solved by monotone bisection on the coupled equation.
DesignResult solve_exp_mip_with_draws(double center_rate, const ExpOuterDraws& draws,
                                      double failure_target, double alpha);

// Practical surface: fits the rate from the data, then applies the requested
// strategy with parametric-bootstrap outer sampling around the fit.
DesignResult solve_exp_threshold(const StrategyConfig& config, std::span<const double> samples,
                                 double failure_target, double alpha, SeededStream stream);

// ---------------------------------------------------------------------------
// Monte Carlo RBDO outer loop for general problems (used for the beam).
//
// One frozen sample batch per solve drives the reliability analysis, the
// margin computation and every trial design, so the margin/design iteration
// is a deterministic map and converges to the configured cost tolerance.
// Margins are recomputed at the current design each outer iteration with
// damped updates.
// ---------------------------------------------------------------------------

DesignResult solve_rbdo_mc(const DesignProblem& problem,
                           const std::vector<std::optional<ParamEstimate>>& estimates,
                           const StrategyConfig& config, SeededStream stream);

}  // namespace rbdo
