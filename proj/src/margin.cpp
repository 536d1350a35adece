#include "rbdo/margin.hpp"

#include <cmath>

#include "rbdo/reliability.hpp"

namespace rbdo {

const char* margin_kind_name(MarginKind kind) {
    switch (kind) {
        case MarginKind::kNone: return "none";
        case MarginKind::kMil: return "mil";
        case MarginKind::kMip: return "mip";
        case MarginKind::kCri: return "cri";
        case MarginKind::kPri: return "pri";
    }
    return "unknown";
}

double quadratic_form(std::span<const double> x, std::span<const double> cov) {
    const std::size_t d = x.size();
    if (cov.size() != d * d) {
        fail(ErrorCode::kShapeMismatch, "quadratic_form: covariance must be dim x dim");
    }
    for (std::size_t i = 0; i < d; ++i) {
        if (cov[i * d + i] < 0.0) {
            fail(ErrorCode::kDomain, "quadratic_form: negative diagonal entry");
        }
        for (std::size_t j = i + 1; j < d; ++j) {
            const double a = cov[i * d + j];
            const double b = cov[j * d + i];
            if (std::abs(a - b) > 1e-12 * (1.0 + std::abs(a) + std::abs(b))) {
                fail(ErrorCode::kDomain, "quadratic_form: covariance not symmetric");
            }
        }
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < d; ++j) row += cov[i * d + j] * x[j];
        acc += x[i] * row;
    }
    return std::max(acc, 0.0);
}

BlockCov block_covariance(std::span<const ParamEstimate> estimates) {
    BlockCov out;
    for (const ParamEstimate& e : estimates) out.dim += e.dim();
    out.data.assign(out.dim * out.dim, 0.0);
    std::size_t off = 0;
    for (const ParamEstimate& e : estimates) {
        const std::size_t d = e.dim();
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) {
                out.data[(off + i) * out.dim + (off + j)] = e.cov_at(i, j);
            }
        }
        off += d;
    }
    return out;
}

MarginValue mil_margin_delta(std::span<const double> grad_mean_g,
                             std::span<const double> cov, double confidence) {
    if (!(confidence > 0.0) || !(confidence < 1.0)) {
        fail(ErrorCode::kDomain, "mil_margin_delta: confidence must lie inside (0,1)");
    }
    const double tau = std::sqrt(quadratic_form(grad_mean_g, cov));
    return MarginValue{MarginKind::kMil, normal_quantile(confidence) * tau};
}

MarginValue mip_margin_delta(std::span<const double> grad_reliability,
                             std::span<const double> cov, double confidence) {
    if (!(confidence > 0.0) || !(confidence < 1.0)) {
        fail(ErrorCode::kDomain, "mip_margin_delta: confidence must lie inside (0,1)");
    }
    const double tau = std::sqrt(quadratic_form(grad_reliability, cov));
    return MarginValue{MarginKind::kMip, normal_quantile(confidence) * tau};
}

MarginValue mil_margin_exact_tension(double sd_strength, std::size_t m, double confidence) {
    if (!(sd_strength > 0.0) || m < 1) {
        fail(ErrorCode::kDomain, "mil_margin_exact_tension: need sd > 0 and m >= 1");
    }
    const double value =
        normal_quantile(confidence) * sd_strength / std::sqrt(static_cast<double>(m));
    return MarginValue{MarginKind::kMil, value};
}

MarginValue pri_index(double r_hat, std::span<const double> grad_reliability,
                      std::span<const double> cov) {
    if (!(r_hat > 0.0) || !(r_hat < 1.0)) {
        fail(ErrorCode::kSaturatedProbability, "pri_index: r_hat must lie strictly inside (0,1)");
    }
    const double mu_beta = normal_quantile(r_hat);
    const double density = normal_pdf(mu_beta);
    std::vector<double> grad_beta(grad_reliability.begin(), grad_reliability.end());
    for (double& g : grad_beta) g /= density;
    const double s2 = quadratic_form(grad_beta, cov);
    return MarginValue{MarginKind::kPri, mu_beta / std::sqrt(1.0 + s2)};
}

MarginValue cri_quantile(const ReliabilitySampler& sampler, double alpha,
                         std::size_t n_outer, SeededStream stream) {
    if (!(alpha > 0.0) || !(alpha < 1.0)) {
        fail(ErrorCode::kDomain, "cri_quantile: alpha must lie inside (0,1)");
    }
    if (n_outer < 100) fail(ErrorCode::kDomain, "cri_quantile: need n_outer >= 100");
    std::vector<double> r(n_outer);
    for (std::size_t j = 0; j < n_outer; ++j) {
        r[j] = sampler(stream.child(j));
    }
    return MarginValue{MarginKind::kCri, empirical_quantile(r, alpha)};
}

}  // namespace rbdo
