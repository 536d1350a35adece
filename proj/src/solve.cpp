#include "rbdo/solve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace rbdo {

const char* strategy_name(Strategy s) {
    switch (s) {
        case Strategy::kPlugIn: return "plugin";
        case Strategy::kRegulated: return "regulated";
        case Strategy::kMixedBv: return "basis_value";
        case Strategy::kMil: return "mil";
        case Strategy::kMip: return "mip";
        case Strategy::kCri: return "cri";
        case Strategy::kPri: return "pri";
    }
    return "unknown";
}

std::optional<Strategy> strategy_from_name(std::string_view name) {
    if (name == "plugin") return Strategy::kPlugIn;
    if (name == "regulated") return Strategy::kRegulated;
    if (name == "basis_value" || name == "mixed_bv") return Strategy::kMixedBv;
    if (name == "mil") return Strategy::kMil;
    if (name == "mip") return Strategy::kMip;
    if (name == "cri") return Strategy::kCri;
    if (name == "pri") return Strategy::kPri;
    return std::nullopt;
}

MarginKind margin_kind_for(Strategy s) {
    switch (s) {
        case Strategy::kMil: return MarginKind::kMil;
        case Strategy::kMip: return MarginKind::kMip;
        case Strategy::kCri: return MarginKind::kCri;
        case Strategy::kPri: return MarginKind::kPri;
        default: return MarginKind::kNone;
    }
}

void StrategyConfig::validate() const {
    if (!(reliability_target > 0.0) || !(reliability_target < 1.0)) {
        fail(ErrorCode::kDomain, "StrategyConfig: reliability target must lie inside (0,1)");
    }
    if (!(margin.confidence > 0.0) || !(margin.confidence < 1.0)) {
        fail(ErrorCode::kDomain, "StrategyConfig: confidence must lie inside (0,1)");
    }
    if ((strategy == Strategy::kRegulated || strategy == Strategy::kMixedBv) &&
        !basis.has_value()) {
        fail(ErrorCode::kDomain, "StrategyConfig: basis-value strategies need a BasisSpec");
    }
    if (optimizer.max_outer_iters < 1 || !(optimizer.cost_tolerance > 0.0) ||
        !(optimizer.damping > 0.0) || optimizer.damping > 1.0 || optimizer.multistart < 1) {
        fail(ErrorCode::kDomain, "StrategyConfig: invalid optimizer settings");
    }
}

// ---------------------------------------------------------------------------
// Tension.
// ---------------------------------------------------------------------------

TensionLoad load_of(const TensionTruth& truth) {
    return TensionLoad{truth.mean_load, truth.sd_load * truth.sd_load, truth.radius};
}

namespace {

DesignResult tension_result(double area, const ParamEstimate& strength,
                            const TensionLoad& load, MarginValue margin, int iterations) {
    DesignResult r;
    const double t = thickness_from_area(area, load.radius);
    r.d = {t};
    r.cost = t;
    r.reliability = {tension_reliability(t, strength.theta[0], strength.theta[1], load.mean,
                                         load.variance, load.radius)};
    r.margins = {margin};
    r.feasible = true;
    r.iterations = iterations;
    return r;
}

}  // namespace

DesignResult solve_tension_plugin(const ParamEstimate& strength, const TensionLoad& load,
                                  double target) {
    const TensionDesign design = tension_exact_design(
        strength.theta[0], strength.theta[1], load.mean, load.variance, target, load.radius);
    return tension_result(design.area, strength, load, MarginValue{MarginKind::kNone, 0.0}, 1);
}

DesignResult solve_tension_mil(const ParamEstimate& strength, const TensionLoad& load,
                               double target, double confidence,
                               std::optional<double> margin_override) {
    const double margin =
        margin_override.has_value()
            ? *margin_override
            : mil_margin_exact_tension(std::sqrt(strength.theta[1]), strength.m, confidence)
                  .value;
    // Shifting the limit state by the margin shifts the strength mean.
    const TensionDesign design =
        tension_exact_design(strength.theta[0] - margin, strength.theta[1], load.mean,
                             load.variance, target, load.radius);
    return tension_result(design.area, strength, load, MarginValue{MarginKind::kMil, margin},
                          1);
}

DesignResult solve_tension_mip_semianalytic(const ParamEstimate& strength,
                                            const TensionTruth& sampling_truth,
                                            double target, double confidence,
                                            std::size_t n_outer, SeededStream stream,
                                            const OptimizerConfig& opt) {
    const TensionLoad load = load_of(sampling_truth);
    const std::size_t m = strength.m;
    if (m < 2) fail(ErrorCode::kInsufficientData, "solve_tension_mip_semianalytic: m < 2");

    // Exact sampling law of (mean, variance) estimates under the given truth.
    const double mu = sampling_truth.mean_strength;
    const double tau2 = sampling_truth.sd_strength * sampling_truth.sd_strength;
    CounterRng rng(stream);
    std::vector<double> means(n_outer), vars(n_outer);
    const double mean_sd = std::sqrt(tau2 / static_cast<double>(m));
    const double shape = 0.5 * static_cast<double>(m - 1);
    const double scale = tau2 / shape;  // chi^2_{m-1} * tau2 / (m-1)
    for (std::size_t j = 0; j < n_outer; ++j) {
        means[j] = mu + mean_sd * rng.next_normal();
        vars[j] = gamma_draw(rng, shape, scale);
    }

    std::vector<double> r_outer(n_outer);
    auto margin_at = [&](double t) {
        for (std::size_t j = 0; j < n_outer; ++j) {
            r_outer[j] = tension_reliability(t, means[j], vars[j], load.mean, load.variance,
                                             load.radius);
        }
        const double r_truth = tension_reliability(t, sampling_truth);
        return empirical_quantile(r_outer, confidence) - r_truth;
    };

    double working_target = target;
    double p = 0.0;
    double last_cost = -1.0;
    TensionDesign design{};
    int it = 0;
    bool converged = false;
    for (; it < opt.max_outer_iters; ++it) {
        design = tension_exact_design(strength.theta[0], strength.theta[1], load.mean,
                                      load.variance, working_target, load.radius);
        if (last_cost >= 0.0 && std::abs(design.thickness - last_cost) < opt.cost_tolerance) {
            converged = true;
            break;
        }
        last_cost = design.thickness;
        p = margin_at(design.thickness);
        const double proposal = target + p;
        if (proposal >= 1.0) {
            fail(ErrorCode::kIncompatibleMargin,
                 "solve_tension_mip_semianalytic: target plus margin reaches 1");
        }
        working_target += opt.damping * (proposal - working_target);
        if (working_target >= 1.0) {
            fail(ErrorCode::kIncompatibleMargin,
                 "solve_tension_mip_semianalytic: target plus margin reaches 1");
        }
    }
    DesignResult r = tension_result(design.area, strength, load,
                                    MarginValue{MarginKind::kMip, working_target - target},
                                    it + 1);
    r.feasible = converged;
    return r;
}

DesignResult solve_tension_pri(const ParamEstimate& strength, const TensionLoad& load,
                               double target) {
    const double z_target = normal_quantile(target);
    auto index_at = [&](double t) {
        const double r_hat = tension_reliability(t, strength.theta[0], strength.theta[1],
                                                 load.mean, load.variance, load.radius);
        if (r_hat <= 0.0 || r_hat >= 1.0) return r_hat <= 0.0 ? -1e9 : 1e9;
        const auto grad = tension_reliability_gradient(t, strength.theta[0], strength.theta[1],
                                                       load.mean, load.variance, load.radius);
        return pri_index(r_hat, grad, strength.cov).value;
    };
    double lo = 1e-4, hi = 2.0;
    if (index_at(hi) < z_target) {
        fail(ErrorCode::kInfeasibleTarget, "solve_tension_pri: index never reaches target");
    }
    if (index_at(lo) >= z_target) {
        hi = lo;
    }
    for (int k = 0; k < 100 && hi - lo > 1e-12 * (1.0 + hi); ++k) {
        const double mid = 0.5 * (lo + hi);
        if (index_at(mid) < z_target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double t = hi;
    DesignResult r = tension_result(tension_area(t, load.radius), strength, load,
                                    MarginValue{MarginKind::kPri, index_at(t)}, 1);
    return r;
}

DesignResult solve_tension_cri(const ParamEstimate& strength, const TensionLoad& load,
                               double target, double alpha, std::size_t n_outer,
                               SeededStream stream) {
    const std::size_t m = strength.m;
    if (m < 2) fail(ErrorCode::kInsufficientData, "solve_tension_cri: m < 2");
    CounterRng rng(stream);
    std::vector<double> means(n_outer), vars(n_outer);
    const double mean_sd = std::sqrt(strength.theta[1] / static_cast<double>(m));
    const double shape = 0.5 * static_cast<double>(m - 1);
    const double scale = strength.theta[1] / shape;
    for (std::size_t j = 0; j < n_outer; ++j) {
        means[j] = strength.theta[0] + mean_sd * rng.next_normal();
        vars[j] = gamma_draw(rng, shape, scale);
    }
    std::vector<double> r_outer(n_outer);
    auto quantile_at = [&](double t) {
        for (std::size_t j = 0; j < n_outer; ++j) {
            r_outer[j] = tension_reliability(t, means[j], vars[j], load.mean, load.variance,
                                             load.radius);
        }
        return empirical_quantile(r_outer, alpha);
    };
    double lo = 1e-4, hi = 2.0;
    if (quantile_at(hi) < target) {
        fail(ErrorCode::kInfeasibleTarget, "solve_tension_cri: quantile never reaches target");
    }
    if (quantile_at(lo) >= target) hi = lo;
    for (int k = 0; k < 100 && hi - lo > 1e-12 * (1.0 + hi); ++k) {
        const double mid = 0.5 * (lo + hi);
        if (quantile_at(mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double t = hi;
    return tension_result(tension_area(t, load.radius), strength, load,
                          MarginValue{MarginKind::kCri, quantile_at(t)}, 1);
}

DesignResult solve_regulated(const BasisValue& basis, double mean_load, double radius) {
    if (!(basis.value > 0.0)) {
        fail(ErrorCode::kNonphysicalBasis, "solve_regulated: basis value must be > 0");
    }
    const double area = 1.5 * mean_load / basis.value;
    DesignResult r;
    const double t = thickness_from_area(area, radius);
    r.d = {t};
    r.cost = t;
    r.reliability = {0.0};  // filled by callers that know the load law
    r.margins = {MarginValue{MarginKind::kNone, 0.0}};
    r.feasible = true;
    r.iterations = 1;
    return r;
}

DesignResult solve_mixed_bv(const BasisValue& basis, double mean_load, double var_load,
                            double target, double radius) {
    if (!(basis.value > 0.0)) {
        fail(ErrorCode::kNonphysicalBasis, "solve_mixed_bv: basis value must be > 0");
    }
    if (var_load < 0.0) fail(ErrorCode::kDomain, "solve_mixed_bv: negative load variance");
    const double z = normal_quantile(target);
    const double area = (mean_load + z * std::sqrt(var_load)) / basis.value;
    if (!(area > 0.0)) {
        fail(ErrorCode::kInfeasibleTarget, "solve_mixed_bv: nonpositive area");
    }
    DesignResult r;
    const double t = thickness_from_area(area, radius);
    r.d = {t};
    r.cost = t;
    // Reliability of the basis-value limit state, with only the load random.
    r.reliability = {var_load > 0.0
                         ? normal_cdf((basis.value * area - mean_load) / std::sqrt(var_load))
                         : 1.0};
    r.margins = {MarginValue{MarginKind::kNone, 0.0}};
    r.feasible = true;
    r.iterations = 1;
    return r;
}

DesignResult solve_mixed_bv(const BasisValue& basis, const DistributionModel& load_model,
                            double target, double radius) {
    if (load_model.family != Family::kNormal) {
        fail(ErrorCode::kUnsupportedMode, "solve_mixed_bv: load must be normal");
    }
    return solve_mixed_bv(basis, load_model.param0, load_model.param1, target, radius);
}

DesignResult solve_tension(const StrategyConfig& config, const TensionSolveContext& ctx) {
    config.validate();
    const TensionLoad load = load_of(ctx.truth);
    const double target = config.reliability_target;
    switch (config.strategy) {
        case Strategy::kPlugIn:
            return solve_tension_plugin(ctx.strength, load, target);
        case Strategy::kMil: {
            // Semianalytic protocol: the margin uses the exact material spread.
            const double margin =
                mil_margin_exact_tension(ctx.truth.sd_strength, ctx.strength.m,
                                         config.margin.confidence)
                    .value;
            return solve_tension_mil(ctx.strength, load, target, config.margin.confidence,
                                     margin);
        }
        case Strategy::kMip:
            return solve_tension_mip_semianalytic(ctx.strength, ctx.truth, target,
                                                  config.margin.confidence, config.n_outer,
                                                  ctx.stream, config.optimizer);
        case Strategy::kPri:
            return solve_tension_pri(ctx.strength, load, target);
        case Strategy::kCri:
            return solve_tension_cri(ctx.strength, load, target, config.margin.confidence,
                                     config.n_outer, ctx.stream);
        case Strategy::kRegulated: {
            const BasisValue b =
                basis_value(ctx.strength, config.basis->pop_fraction, config.basis->confidence);
            DesignResult r = solve_regulated(b, load.mean, load.radius);
            const double area = tension_area(r.d[0], load.radius);
            r.reliability = {normal_cdf((b.value * area - load.mean) / std::sqrt(load.variance))};
            r.margins = {MarginValue{MarginKind::kNone, b.k * std::sqrt(ctx.strength.theta[1])}};
            return r;
        }
        case Strategy::kMixedBv: {
            const BasisValue b =
                basis_value(ctx.strength, config.basis->pop_fraction, config.basis->confidence);
            const DistributionModel load_model =
                DistributionModel::normal(load.mean, load.variance);
            DesignResult r = solve_mixed_bv(b, load_model, target, load.radius);
            r.margins = {MarginValue{MarginKind::kNone, b.k * std::sqrt(ctx.strength.theta[1])}};
            return r;
        }
    }
    fail(ErrorCode::kUnsupportedMode, "solve_tension: unknown strategy");
}

// ---------------------------------------------------------------------------
// Exponential threshold.
// ---------------------------------------------------------------------------

ExpOuterDraws exp_rate_outer_draws(double reference_rate, std::size_t m,
                                   std::size_t n_outer, SeededStream stream) {
    if (!(reference_rate > 0.0)) {
        fail(ErrorCode::kDomain, "exp_rate_outer_draws: rate must be > 0");
    }
    if (m < 1 || n_outer < 100) {
        fail(ErrorCode::kDomain, "exp_rate_outer_draws: need m >= 1 and n_outer >= 100");
    }
    ExpOuterDraws draws;
    draws.reference_rate = reference_rate;
    draws.m = m;
    draws.rates.resize(n_outer);
    CounterRng rng(stream);
    const double shape = static_cast<double>(m);
    const double scale = 1.0 / (shape * reference_rate);
    for (std::size_t j = 0; j < n_outer; ++j) {
        // Sample mean of m exponentials is Gamma(m, 1/(m*rate)); the rate
        // estimate is its reciprocal.
        draws.rates[j] = 1.0 / gamma_draw(rng, shape, scale);
    }
    return draws;
}

DesignResult solve_exp_cri_with_draws(const ExpOuterDraws& draws, double failure_target,
                                      double alpha) {
    if (!(failure_target > 0.0) || !(failure_target < 1.0)) {
        fail(ErrorCode::kDomain, "solve_exp_cri_with_draws: failure target inside (0,1)");
    }
    // The alpha order statistic of the sampled rates carries the constrained
    // failure-chance quantile: F^alpha(d) = exp(-rate_q * d).
    const double rate_q = empirical_quantile(draws.rates, alpha);
    auto f_alpha = [&](double d) { return std::exp(-rate_q * d); };
    double lo = 0.0, hi = 1.0;
    while (f_alpha(hi) > failure_target) hi *= 2.0;
    for (int k = 0; k < 200 && hi - lo > 1e-13 * (1.0 + hi); ++k) {
        const double mid = 0.5 * (lo + hi);
        if (f_alpha(mid) > failure_target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double d = 0.5 * (lo + hi);
    DesignResult r;
    r.d = {d};
    r.cost = d;
    r.reliability = {1.0 - std::exp(-draws.reference_rate * d)};
    r.margins = {MarginValue{MarginKind::kCri, 1.0 - f_alpha(d)}};
    r.feasible = true;
    r.iterations = 1;
    return r;
}

DesignResult solve_exp_mip_with_draws(double center_rate, const ExpOuterDraws& draws,
                                      double failure_target, double alpha) {
    if (!(center_rate > 0.0)) {
        fail(ErrorCode::kDomain, "solve_exp_mip_with_draws: center rate must be > 0");
    }
    if (!(failure_target > 0.0) || !(failure_target < 1.0)) {
        fail(ErrorCode::kDomain, "solve_exp_mip_with_draws: failure target inside (0,1)");
    }
    const double rate_q = empirical_quantile(draws.rates, alpha);
    const double ref = draws.reference_rate;
    // p(d) is the alpha quantile of F(ref,d) - F(rate_j,d); the differences
    // increase with the rate draw, so the same order statistic applies.
    auto p_of = [&](double d) { return std::exp(-ref * d) - std::exp(-rate_q * d); };
    auto h = [&](double d) { return std::exp(-center_rate * d) + p_of(d) - failure_target; };
    double lo = 0.0, hi = 1.0;
    while (h(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e9) {
            fail(ErrorCode::kIncompatibleMargin,
                 "solve_exp_mip_with_draws: constraint unattainable");
        }
    }
    for (int k = 0; k < 200 && hi - lo > 1e-13 * (1.0 + hi); ++k) {
        const double mid = 0.5 * (lo + hi);
        if (h(mid) > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    const double d = 0.5 * (lo + hi);
    DesignResult r;
    r.d = {d};
    r.cost = d;
    r.reliability = {1.0 - std::exp(-center_rate * d)};
    r.margins = {MarginValue{MarginKind::kMip, p_of(d)}};
    r.feasible = true;
    r.iterations = 1;
    return r;
}

DesignResult solve_exp_threshold(const StrategyConfig& config, std::span<const double> samples,
                                 double failure_target, double alpha, SeededStream stream) {
    const ParamEstimate fit = fit_exponential_rate(samples);
    const double rate = fit.theta[0];
    switch (config.strategy) {
        case Strategy::kPlugIn: {
            const double d = exp_exact_design(1.0 - failure_target, rate);
            DesignResult r;
            r.d = {d};
            r.cost = d;
            r.reliability = {1.0 - failure_target};
            r.margins = {MarginValue{MarginKind::kNone, 0.0}};
            r.feasible = true;
            r.iterations = 1;
            return r;
        }
        case Strategy::kCri: {
            const ExpOuterDraws draws =
                exp_rate_outer_draws(rate, samples.size(), config.n_outer, stream);
            return solve_exp_cri_with_draws(draws, failure_target, alpha);
        }
        case Strategy::kMip: {
            const ExpOuterDraws draws =
                exp_rate_outer_draws(rate, samples.size(), config.n_outer, stream);
            return solve_exp_mip_with_draws(rate, draws, failure_target, alpha);
        }
        default:
            fail(ErrorCode::kUnsupportedMode,
                 "solve_exp_threshold: strategy not defined for this problem");
    }
}

// ---------------------------------------------------------------------------
// Monte Carlo RBDO outer loop.
// ---------------------------------------------------------------------------

namespace {

constexpr double kPenaltyWeight = 1e3;

double halton(std::size_t index, unsigned base) {
    double f = 1.0, r = 0.0;
    while (index > 0) {
        f /= base;
        r += f * (index % base);
        index /= base;
    }
    return r;
}

std::vector<std::vector<double>> multistart_points(
    const std::vector<std::pair<double, double>>& bounds, int count) {
    static const unsigned primes[] = {2, 3, 5, 7, 11, 13};
    std::vector<std::vector<double>> pts;
    pts.reserve(count);
    for (int s = 0; s < count; ++s) {
        std::vector<double> d(bounds.size());
        for (std::size_t j = 0; j < bounds.size(); ++j) {
            const double frac = (s == 0) ? 0.5 : halton(s, primes[j % 6]);
            d[j] = bounds[j].first + frac * (bounds[j].second - bounds[j].first);
        }
        pts.push_back(std::move(d));
    }
    return pts;
}

struct BootstrapModels {
    // per draw, per estimated variable: plug-in resampled model
    std::vector<std::vector<DistributionModel>> models;
};

BootstrapModels bootstrap_plugin_models(const std::vector<const ParamEstimate*>& estimates,
                                        const std::vector<Family>& families,
                                        std::size_t n_boot, SeededStream stream) {
    BootstrapModels out;
    out.models.resize(n_boot);
    CounterRng rng(stream);
    for (std::size_t b = 0; b < n_boot; ++b) {
        out.models[b].reserve(estimates.size());
        for (std::size_t v = 0; v < estimates.size(); ++v) {
            const ParamEstimate& e = *estimates[v];
            const auto m = static_cast<double>(e.m);
            if (families[v] == Family::kNormal) {
                // Sufficient statistics of a fresh size-m fit under the
                // plug-in law.
                const double mean = e.theta[0] + std::sqrt(e.theta[1] / m) * rng.next_normal();
                const double shape = 0.5 * (m - 1.0);
                const double var = gamma_draw(rng, shape, e.theta[1] / shape);
                out.models[b].push_back(DistributionModel::normal(mean, var));
            } else {
                const double mean_draw = gamma_draw(rng, m, 1.0 / (m * e.theta[0]));
                out.models[b].push_back(DistributionModel::exponential_rate(1.0 / mean_draw));
            }
        }
    }
    return out;
}

}  // namespace

DesignResult solve_rbdo_mc(const DesignProblem& problem,
                           const std::vector<std::optional<ParamEstimate>>& estimates,
                           const StrategyConfig& config, SeededStream stream) {
    config.validate();
    if (config.mc_n < 1000) fail(ErrorCode::kDomain, "solve_rbdo_mc: mc_n must be >= 1000");
    if (problem.design_dim == 0 || problem.bounds.size() != problem.design_dim) {
        fail(ErrorCode::kShapeMismatch, "solve_rbdo_mc: inconsistent design dimensions");
    }
    const MarginKind kind = margin_kind_for(config.strategy);
    if (config.strategy == Strategy::kRegulated || config.strategy == Strategy::kMixedBv) {
        fail(ErrorCode::kUnsupportedMode,
             "solve_rbdo_mc: basis-value strategies are handled by problem-specific paths");
    }

    const McBatch batch = draw_batch(problem, estimates, config.mc_n, stream.child(0));
    const std::size_t n = batch.n;
    const std::size_t K = problem.limit_states.size();

    std::vector<const ParamEstimate*> est_list;
    std::vector<Family> est_families;
    std::vector<std::size_t> est_var_index;
    for (std::size_t v = 0; v < problem.random_vars.size(); ++v) {
        if (problem.random_vars[v].estimated) {
            est_list.push_back(&*estimates[v]);
            est_families.push_back(problem.random_vars[v].model.family);
            est_var_index.push_back(v);
        }
    }
    std::vector<ParamEstimate> est_copy;
    est_copy.reserve(est_list.size());
    for (const ParamEstimate* e : est_list) est_copy.push_back(*e);
    const BlockCov cov = block_covariance(est_copy);

    // Plug-in sampling models (for CRI reweighting denominators).
    const std::vector<DistributionModel> models = sampling_models(problem, estimates);

    // CRI outer draws are capped: each reweighted quantile costs
    // n_boot * mc_n density evaluations per constraint and iteration.
    BootstrapModels boot;
    const std::size_t n_boot = std::min<std::size_t>(config.n_outer, 2000);
    if (kind == MarginKind::kCri) {
        boot = bootstrap_plugin_models(est_list, est_families, n_boot, stream.child(1));
    }

    const double z_pri_target = normal_quantile(config.reliability_target);

    // Mean score over the batch (zero in expectation). Margins use the
    // control-variate form (1[g>0] - r_hat) * score: same expectation as the
    // raw indicator-score product, but without the noise floor that inflates
    // the quadratic form when the failure chance is small.
    std::vector<double> mean_score(batch.est_dim, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < batch.est_dim; ++k) {
            mean_score[k] += batch.scores[i * batch.est_dim + k];
        }
    }
    for (double& s : mean_score) s /= static_cast<double>(n);

    std::vector<double> margin_state(K, 0.0);
    std::vector<double> scale(K, 1.0);
    bool margin_ready = false;

    auto cri_alpha_quantile = [&](std::span<const double> g) {
        // Reliability under each bootstrap parameter set via self-normalized
        // likelihood-ratio reweighting of the shared batch.
        std::vector<double> r_boot(n_boot);
        std::vector<double> logw(n);
        for (std::size_t b = 0; b < n_boot; ++b) {
            double max_logw = -1e300;
            for (std::size_t i = 0; i < n; ++i) {
                double lw = 0.0;
                for (std::size_t ev = 0; ev < est_var_index.size(); ++ev) {
                    const std::size_t v = est_var_index[ev];
                    const double x = batch.x[i * batch.n_vars + v];
                    lw += std::log(pdf(boot.models[b][ev], x)) - std::log(pdf(models[v], x));
                }
                logw[i] = lw;
                max_logw = std::max(max_logw, lw);
            }
            double wsum = 0.0, wsucc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double w = std::exp(logw[i] - max_logw);
                wsum += w;
                if (g[i] > 0.0) wsucc += w;
            }
            r_boot[b] = wsucc / wsum;
        }
        return empirical_quantile(r_boot, config.margin.confidence);
    };

    // Returns the largest normalized margin change; once this falls below the
    // Monte Carlo resolution the margins are frozen so the design step has a
    // fixed constraint surface to converge against.
    auto compute_margins = [&](std::span<const double> d) -> double {
        std::vector<double> fresh(K, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            const std::vector<double> g = eval_limit_state(problem, k, d, batch);
            double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(n);
            double var = 0.0;
            for (double gi : g) var += (gi - mean) * (gi - mean);
            var /= static_cast<double>(n);
            scale[k] = std::max(std::sqrt(var), 1e-12);
            switch (kind) {
                case MarginKind::kMil: {
                    const LimitMeanGradient lm = mc_limit_mean_gradient_from_batch(batch, g);
                    fresh[k] =
                        mil_margin_delta(lm.grad_theta, cov.data, config.margin.confidence)
                            .value;
                    break;
                }
                case MarginKind::kMip: {
                    const ReliabilityEstimate re = mc_reliability_from_batch(batch, g);
                    std::vector<double> grad = re.grad_theta;
                    for (std::size_t j = 0; j < grad.size(); ++j) {
                        grad[j] -= re.r_hat * mean_score[j];
                    }
                    const double p =
                        mip_margin_delta(grad, cov.data, config.margin.confidence).value;
                    if (problem.targets[k] + p >= 1.0) {
                        fail(ErrorCode::kIncompatibleMargin,
                             "solve_rbdo_mc: reliability target plus margin reaches 1");
                    }
                    fresh[k] = p;
                    break;
                }
                case MarginKind::kCri: {
                    const ReliabilityEstimate re = mc_reliability_from_batch(batch, g);
                    fresh[k] = re.r_hat - cri_alpha_quantile(g);
                    break;
                }
                default:
                    break;
            }
        }
        double max_change = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double norm = kind == MarginKind::kMil ? scale[k] : 1.0;
            max_change = std::max(max_change, std::abs(fresh[k] - margin_state[k]) / norm);
        }
        if (!margin_ready) {
            for (std::size_t k = 0; k < K; ++k) margin_state[k] = fresh[k];
            margin_ready = true;
        } else {
            for (std::size_t k = 0; k < K; ++k) {
                margin_state[k] += config.optimizer.damping * (fresh[k] - margin_state[k]);
            }
        }
        return max_change;
    };

    // Normalized constraint values; >= 0 is feasible.
    auto constraint_values = [&](std::span<const double> d, std::vector<double>& out) {
        out.assign(K, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            const std::vector<double> g = eval_limit_state(problem, k, d, batch);
            switch (kind) {
                case MarginKind::kNone:
                    out[k] = pma_quantile(g, problem.targets[k]) / scale[k];
                    break;
                case MarginKind::kMil:
                    out[k] = (pma_quantile(g, problem.targets[k]) - margin_state[k]) / scale[k];
                    break;
                case MarginKind::kMip:
                case MarginKind::kCri: {
                    double target = problem.targets[k] + margin_state[k];
                    const double n_d = static_cast<double>(n);
                    target = std::clamp(target, 1.0 / (n_d + 1.0), 1.0 - 1e-12);
                    out[k] = pma_quantile(g, target) / scale[k];
                    break;
                }
                case MarginKind::kPri: {
                    const ReliabilityEstimate re = mc_reliability_from_batch(batch, g);
                    std::vector<double> grad = re.grad_theta;
                    for (std::size_t j = 0; j < grad.size(); ++j) {
                        grad[j] -= re.r_hat * mean_score[j];
                    }
                    const double n_d = static_cast<double>(n);
                    const double r = std::clamp(re.r_hat, 0.5 / n_d, 1.0 - 0.5 / n_d);
                    const double index = pri_index(r, grad, cov.data).value;
                    out[k] = index - z_pri_target;
                    break;
                }
            }
        }
    };

    std::map<std::vector<double>, double> memo;
    std::vector<double> cval;
    auto penalized = [&](const std::vector<double>& d) {
        auto it = memo.find(d);
        if (it != memo.end()) return it->second;
        constraint_values(d, cval);
        double value = problem.cost(d);
        for (double c : cval) value += kPenaltyWeight * std::max(0.0, -c);
        memo.emplace(d, value);
        return value;
    };

    const auto starts = multistart_points(problem.bounds, config.optimizer.multistart);
    double min_width = 1e300;
    for (const auto& b : problem.bounds) min_width = std::min(min_width, b.second - b.first);
    const double step0 = std::min(0.5, 0.25 * min_width);
    const double step_min = std::max(1e-4, 1e-6 * min_width);

    auto design_step = [&]() {
        memo.clear();
        std::vector<double> best_d;
        double best_f = 1e300;
        for (const auto& start : starts) {
            std::vector<double> x = start;
            double fx = penalized(x);
            double h = step0;
            while (h > step_min) {
                bool improved = false;
                std::vector<double> cand = x;
                double fcand = fx;
                for (std::size_t j = 0; j < x.size(); ++j) {
                    for (double s : {1.0, -1.0}) {
                        std::vector<double> y = x;
                        y[j] = std::clamp(y[j] + s * h, problem.bounds[j].first,
                                          problem.bounds[j].second);
                        if (y[j] == x[j]) continue;
                        const double fy = penalized(y);
                        if (fy < fcand) {
                            fcand = fy;
                            cand = y;
                            improved = true;
                        }
                    }
                }
                if (improved) {
                    x = cand;
                    fx = fcand;
                } else {
                    h *= 0.5;
                }
            }
            if (fx < best_f) {
                best_f = fx;
                best_d = x;
            }
        }
        return best_d;
    };

    std::vector<double> d = starts[0];
    double last_cost = -1e300;
    bool converged = false;
    int it = 0;
    const bool has_margin_state = kind == MarginKind::kMil || kind == MarginKind::kMip ||
                                  kind == MarginKind::kCri;
    // The order-statistic constraint makes the fresh margin a step function
    // of the design, so the margin/design iteration can orbit instead of
    // settling. The damped state converges to the orbit mean; after a few
    // updates (or once the updates are below Monte Carlo resolution) it is
    // frozen and the design step converges against a fixed surface.
    constexpr int kMaxMarginUpdates = 6;
    bool margins_frozen = false;
    int margin_updates = 0;
    for (; it < config.optimizer.max_outer_iters; ++it) {
        // Margins need a current design, so the first pass runs plain.
        if (it > 0 && has_margin_state && !margins_frozen) {
            const double change = compute_margins(d);
            ++margin_updates;
            if (change <= 5e-5 || margin_updates >= kMaxMarginUpdates) margins_frozen = true;
        }
        d = design_step();
        const double cost = problem.cost(d);
        if (it > 0 && std::abs(cost - last_cost) < config.optimizer.cost_tolerance) {
            converged = true;
            ++it;
            break;
        }
        last_cost = cost;
    }

    DesignResult result;
    result.d = d;
    result.cost = problem.cost(d);
    result.iterations = it;
    constraint_values(d, cval);
    bool ok = true;
    for (double c : cval) ok = ok && c >= -1e-9;
    result.feasible = converged && ok;
    result.reliability.resize(K);
    result.margins.resize(K);
    for (std::size_t k = 0; k < K; ++k) {
        const std::vector<double> g = eval_limit_state(problem, k, d, batch);
        result.reliability[k] = mc_reliability_from_batch(batch, g).r_hat;
        result.margins[k] = MarginValue{kind, margin_state[k]};
    }
    return result;
}

}  // namespace rbdo
