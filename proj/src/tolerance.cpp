#include "rbdo/tolerance.hpp"

#include <algorithm>
#include <cmath>

namespace rbdo {

namespace {

// log of the density of W = chi_nu / sqrt(nu).
// W^2 * nu ~ chi^2_nu, so f_W(w) = 2 nu^{nu/2} w^{nu-1} e^{-nu w^2/2} /
// (2^{nu/2} Gamma(nu/2)).
double log_chi_scale_pdf(double w, double nu) {
    return std::log(2.0) + 0.5 * nu * std::log(nu) + (nu - 1.0) * std::log(w) -
           0.5 * nu * w * w - 0.5 * nu * std::log(2.0) - std::lgamma(0.5 * nu);
}

}  // namespace

double noncentral_t_cdf(double t, double nu, double delta) {
    if (!(nu >= 1.0)) fail(ErrorCode::kDomain, "noncentral_t_cdf: nu must be >= 1");
    // W concentrates around 1 with sd ~ 1/sqrt(2 nu); the bracket below keeps
    // the truncated tail mass far under the 1e-10 accuracy target.
    const double sd = 1.0 / std::sqrt(2.0 * nu);
    const double lo = std::max(0.0, 1.0 - 14.0 * sd);
    const double hi = 1.0 + 14.0 * sd;

    // Composite Simpson on a fixed grid; the integrand is smooth.
    const int n = 4096;  // even
    const double h = (hi - lo) / n;
    auto f = [&](double w) {
        if (w <= 0.0) return 0.0;
        return normal_cdf(t * w - delta) * std::exp(log_chi_scale_pdf(w, nu));
    };
    double sum = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) {
        sum += f(lo + i * h) * ((i % 2 == 1) ? 4.0 : 2.0);
    }
    double p = sum * h / 3.0;
    return std::clamp(p, 0.0, 1.0);
}

double noncentral_t_quantile(double p, double nu, double delta) {
    if (!(p > 0.0) || !(p < 1.0)) {
        fail(ErrorCode::kDomain, "noncentral_t_quantile: p must lie inside (0,1)");
    }
    // Bracket around the approximate location delta with a generous spread,
    // expanding if needed, then bisect.
    double spread = 10.0 * std::sqrt(1.0 + delta * delta / (2.0 * nu)) + 10.0;
    double lo = delta - spread;
    double hi = delta + spread;
    while (noncentral_t_cdf(lo, nu, delta) > p) {
        lo -= spread;
        spread *= 2.0;
    }
    while (noncentral_t_cdf(hi, nu, delta) < p) {
        hi += spread;
        spread *= 2.0;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (noncentral_t_cdf(mid, nu, delta) < p) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-11 * (1.0 + std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

double k_factor(double pop_fraction, double confidence, std::size_t m) {
    if (m < 2) fail(ErrorCode::kInsufficientData, "k_factor: need m >= 2");
    if (!(pop_fraction > 0.0) || !(pop_fraction < 1.0) || !(confidence > 0.0) ||
        !(confidence < 1.0)) {
        fail(ErrorCode::kDomain, "k_factor: fractions must lie inside (0,1)");
    }
    const double root_m = std::sqrt(static_cast<double>(m));
    const double delta = normal_quantile(pop_fraction) * root_m;
    const double nu = static_cast<double>(m - 1);
    return noncentral_t_quantile(confidence, nu, delta) / root_m;
}

BasisValue basis_value(const ParamEstimate& estimate, double pop_fraction,
                       double confidence) {
    if (estimate.dim() != 2) {
        fail(ErrorCode::kShapeMismatch, "basis_value: expected a normal fit (mean, variance)");
    }
    BasisValue b;
    b.pop_fraction = pop_fraction;
    b.confidence = confidence;
    b.m = estimate.m;
    b.k = k_factor(pop_fraction, confidence, estimate.m);
    b.value = estimate.theta[0] - b.k * std::sqrt(estimate.theta[1]);
    return b;
}

}  // namespace rbdo
