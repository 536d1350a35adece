#include "rbdo/reliability.hpp"

#include <algorithm>
#include <cmath>

namespace rbdo {

std::vector<DistributionModel> sampling_models(
    const DesignProblem& problem,
    const std::vector<std::optional<ParamEstimate>>& estimates) {
    if (estimates.size() != problem.random_vars.size()) {
        fail(ErrorCode::kShapeMismatch, "sampling_models: one estimate slot per random variable");
    }
    std::vector<DistributionModel> models;
    models.reserve(problem.random_vars.size());
    for (std::size_t v = 0; v < problem.random_vars.size(); ++v) {
        const RandomVar& rv = problem.random_vars[v];
        if (rv.estimated) {
            if (!estimates[v].has_value()) {
                fail(ErrorCode::kDomain, "sampling_models: estimated variable lacks an estimate");
            }
            models.push_back(model_from_estimate(rv.model.family, *estimates[v]));
        } else {
            if (estimates[v].has_value()) {
                fail(ErrorCode::kDomain, "sampling_models: known variable carries an estimate");
            }
            models.push_back(rv.model);
        }
    }
    return models;
}

McBatch draw_batch(const std::vector<DistributionModel>& models,
                   const std::vector<bool>& estimated, std::size_t n,
                   SeededStream stream) {
    if (n < 1) fail(ErrorCode::kDomain, "draw_batch: n must be >= 1");
    if (models.size() != estimated.size()) {
        fail(ErrorCode::kShapeMismatch, "draw_batch: models/estimated size mismatch");
    }
    McBatch batch;
    batch.n = n;
    batch.n_vars = models.size();
    batch.est_dim = 0;
    for (std::size_t v = 0; v < models.size(); ++v) {
        models[v].validate();
        if (estimated[v]) batch.est_dim += static_cast<std::size_t>(models[v].param_count());
    }
    batch.x.resize(n * batch.n_vars);
    batch.scores.resize(n * batch.est_dim);

    CounterRng rng(stream);
    // Uniforms are addressed by (sample, variable) so a parameter change
    // keeps each variate coupled to the same underlying uniform.
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t sc = 0;
        for (std::size_t v = 0; v < batch.n_vars; ++v) {
            const double u = rng.uniform_at(i * batch.n_vars + v);
            const double value = quantile_transform(models[v], u);
            batch.x[i * batch.n_vars + v] = value;
            if (estimated[v]) {
                score(models[v], value, batch.scores.data() + i * batch.est_dim + sc);
                sc += static_cast<std::size_t>(models[v].param_count());
            }
        }
    }
    return batch;
}

McBatch draw_batch(const DesignProblem& problem,
                   const std::vector<std::optional<ParamEstimate>>& estimates,
                   std::size_t n, SeededStream stream) {
    std::vector<bool> est_flags;
    est_flags.reserve(problem.random_vars.size());
    for (const RandomVar& rv : problem.random_vars) est_flags.push_back(rv.estimated);
    return draw_batch(sampling_models(problem, estimates), est_flags, n, stream);
}

std::vector<double> eval_limit_state(const DesignProblem& problem, std::size_t limit_index,
                                     std::span<const double> d, const McBatch& batch) {
    if (limit_index >= problem.limit_states.size()) {
        fail(ErrorCode::kDomain, "eval_limit_state: limit index out of range");
    }
    std::vector<double> g(batch.n);
    const auto& ls = problem.limit_states[limit_index];
    for (std::size_t i = 0; i < batch.n; ++i) {
        g[i] = ls(d, batch.sample_row(i));
    }
    return g;
}

namespace {

// Fixed-block accumulation: partial sums are combined in block order, so the
// result does not depend on how blocks might be scheduled.
constexpr std::size_t kBlock = 4096;

template <typename Body>
double blocked_sum(std::size_t n, Body&& body) {
    double total = 0.0;
    for (std::size_t b = 0; b < n; b += kBlock) {
        const std::size_t hi = std::min(n, b + kBlock);
        double part = 0.0;
        for (std::size_t i = b; i < hi; ++i) part += body(i);
        total += part;
    }
    return total;
}

}  // namespace

ReliabilityEstimate mc_reliability_from_batch(const McBatch& batch,
                                              std::span<const double> g) {
    if (g.size() != batch.n) fail(ErrorCode::kShapeMismatch, "mc_reliability: g size mismatch");
    ReliabilityEstimate est;
    est.n = batch.n;
    est.grad_theta.assign(batch.est_dim, 0.0);
    const double inv_n = 1.0 / static_cast<double>(batch.n);

    est.r_hat = blocked_sum(batch.n, [&](std::size_t i) { return g[i] > 0.0 ? 1.0 : 0.0; }) * inv_n;
    for (std::size_t k = 0; k < batch.est_dim; ++k) {
        est.grad_theta[k] = blocked_sum(batch.n, [&](std::size_t i) {
                                return g[i] > 0.0 ? batch.scores[i * batch.est_dim + k] : 0.0;
                            }) *
                            inv_n;
    }
    est.std_err = std::sqrt(std::max(0.0, est.r_hat * (1.0 - est.r_hat)) * inv_n);
    return est;
}

namespace {

void check_in_bounds(const DesignProblem& problem, std::span<const double> d) {
    if (d.size() != problem.design_dim) {
        fail(ErrorCode::kShapeMismatch, "design vector has the wrong dimension");
    }
    for (std::size_t j = 0; j < d.size(); ++j) {
        if (d[j] < problem.bounds[j].first || d[j] > problem.bounds[j].second) {
            fail(ErrorCode::kDomain, "design point outside the problem bounds");
        }
    }
}

}  // namespace

ReliabilityEstimate mc_reliability(const DesignProblem& problem, std::size_t limit_index,
                                   std::span<const double> d,
                                   const std::vector<std::optional<ParamEstimate>>& estimates,
                                   std::size_t n, SeededStream stream) {
    check_in_bounds(problem, d);
    const McBatch batch = draw_batch(problem, estimates, n, stream);
    const std::vector<double> g = eval_limit_state(problem, limit_index, d, batch);
    return mc_reliability_from_batch(batch, g);
}

LimitMeanGradient mc_limit_mean_gradient_from_batch(const McBatch& batch,
                                                    std::span<const double> g) {
    if (g.size() != batch.n) {
        fail(ErrorCode::kShapeMismatch, "mc_limit_mean_gradient: g size mismatch");
    }
    LimitMeanGradient out;
    out.n = batch.n;
    const double inv_n = 1.0 / static_cast<double>(batch.n);
    out.mean_g = blocked_sum(batch.n, [&](std::size_t i) { return g[i]; }) * inv_n;
    out.grad_theta.assign(batch.est_dim, 0.0);
    for (std::size_t k = 0; k < batch.est_dim; ++k) {
        out.grad_theta[k] = blocked_sum(batch.n, [&](std::size_t i) {
                                return (g[i] - out.mean_g) * batch.scores[i * batch.est_dim + k];
                            }) *
                            inv_n;
    }
    return out;
}

LimitMeanGradient mc_limit_mean_gradient(const DesignProblem& problem, std::size_t limit_index,
                                         std::span<const double> d,
                                         const std::vector<std::optional<ParamEstimate>>& estimates,
                                         std::size_t n, SeededStream stream) {
    check_in_bounds(problem, d);
    const McBatch batch = draw_batch(problem, estimates, n, stream);
    const std::vector<double> g = eval_limit_state(problem, limit_index, d, batch);
    return mc_limit_mean_gradient_from_batch(batch, g);
}

double empirical_quantile(std::span<const double> values, double q) {
    if (values.empty()) fail(ErrorCode::kDomain, "empirical_quantile: empty sample");
    const auto n = static_cast<long>(values.size());
    // ceil with a small guard so exactly representable products do not bump
    // the index up by one through rounding.
    long k = static_cast<long>(std::ceil(q * static_cast<double>(n) - 1e-9));
    k = std::clamp(k, 1L, n);
    std::vector<double> copy(values.begin(), values.end());
    std::nth_element(copy.begin(), copy.begin() + (k - 1), copy.end());
    return copy[k - 1];
}

double pma_quantile(std::span<const double> g, double target) {
    if (g.empty()) fail(ErrorCode::kDomain, "pma_quantile: empty sample");
    if (!(target > 0.0) || !(target < 1.0)) {
        fail(ErrorCode::kDomain, "pma_quantile: target must lie inside (0,1)");
    }
    return empirical_quantile(g, 1.0 - target);
}

}  // namespace rbdo
