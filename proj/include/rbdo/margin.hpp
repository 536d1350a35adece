#pragma once

#include <functional>
#include <span>
#include <vector>

#include "rbdo/rngstat.hpp"

namespace rbdo {

enum class MarginKind { kNone, kMil, kMip, kCri, kPri };

const char* margin_kind_name(MarginKind kind);

struct MarginSpec {
    MarginKind kind = MarginKind::kNone;
    double confidence = 0.95;  // alpha for CRI
};

struct MarginValue {
    MarginKind kind = MarginKind::kNone;
    double value = 0.0;  // g units (MIL), probability units (MIP),
                         // index units (PRI), reliability quantile (CRI)
};

// x' C x for a row-major dim x dim matrix; rejects dimension mismatches and
// asymmetric or negative-diagonal inputs.
double quadratic_form(std::span<const double> x, std::span<const double> cov);

// Block-diagonal covariance assembled from independent estimates, ordered as
// the estimates are given.
struct BlockCov {
    std::size_t dim = 0;
    std::vector<double> data;  // row-major dim x dim
};
BlockCov block_covariance(std::span<const ParamEstimate> estimates);

// Margin in limit, delta model: Phi^{-1}(confidence) * sqrt(gradD' cov gradD).
MarginValue mil_margin_delta(std::span<const double> grad_mean_g,
                             std::span<const double> cov, double confidence);

// Margin in probability, delta model: Phi^{-1}(confidence) * sqrt(gradR' cov gradR).
// Consumers must check target + p < 1 before use.
MarginValue mip_margin_delta(std::span<const double> grad_reliability,
                             std::span<const double> cov, double confidence);

// Closed-form tension margin in limit: Phi^{-1}(confidence) * sd_strength / sqrt(m).
MarginValue mil_margin_exact_tension(double sd_strength, std::size_t m, double confidence);

// Variance-inflated reliability index: beta = Phi^{-1}(r_hat) / sqrt(1 + s2)
// with s2 = gradBeta' cov gradBeta and gradBeta = gradR / phi(Phi^{-1}(r_hat)).
MarginValue pri_index(double r_hat, std::span<const double> grad_reliability,
                      std::span<const double> cov);

// Empirical confidence-level quantile of a sampled reliability distribution:
// the ceil(alpha * n_outer) ascending order statistic, so a fraction
// (1 - alpha) of the sampled reliabilities exceed it.
using ReliabilitySampler = std::function<double(SeededStream)>;
MarginValue cri_quantile(const ReliabilitySampler& sampler, double alpha,
                         std::size_t n_outer, SeededStream stream);

}  // namespace rbdo
