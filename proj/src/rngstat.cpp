#include "rbdo/rngstat.hpp"

#include <cmath>
#include <limits>

namespace rbdo {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::kDomain: return "domain";
        case ErrorCode::kSupport: return "support";
        case ErrorCode::kInsufficientData: return "insufficient_data";
        case ErrorCode::kDegenerateSample: return "degenerate_sample";
        case ErrorCode::kInfeasibleTarget: return "infeasible_target";
        case ErrorCode::kIncompatibleMargin: return "incompatible_margin";
        case ErrorCode::kNonphysicalBasis: return "nonphysical_basis";
        case ErrorCode::kSaturatedProbability: return "saturated_probability";
        case ErrorCode::kUnsupportedMode: return "unsupported_mode";
        case ErrorCode::kShapeMismatch: return "shape_mismatch";
        case ErrorCode::kConfig: return "config";
    }
    return "unknown";
}

namespace detail {

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
}

}  // namespace detail

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;
}

SeededStream SeededStream::child(std::uint64_t tag) const {
    return SeededStream{seed, detail::mix64(id * kGolden + 0x1F123BB5ull) ^
                                  detail::mix64(tag + kGolden)};
}

CounterRng::CounterRng(SeededStream stream)
    : base_(detail::mix64(detail::mix64(stream.seed + kGolden) ^
                          detail::mix64(stream.id * kGolden + 0xD6E8FEB86659FD93ull))) {}

std::uint64_t CounterRng::word_at(std::uint64_t i) const {
    return detail::mix64(base_ + (i + 1) * kGolden);
}

double CounterRng::uniform_at(std::uint64_t i) const {
    // 53-bit mantissa, offset half a step so 0 and 1 are never produced.
    return (static_cast<double>(word_at(i) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal_at(std::uint64_t i) const {
    return normal_quantile(uniform_at(i));
}

double gamma_draw(CounterRng& rng, double shape, double scale) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
        fail(ErrorCode::kDomain, "gamma_draw: shape and scale must be positive");
    }
    if (shape < 1.0) {
        const double u = rng.next_uniform();
        return gamma_draw(rng, shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = rng.next_normal();
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = rng.next_uniform();
        const double x2 = x * x;
        if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
        if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
}

// ---------------------------------------------------------------------------
// Models.
// ---------------------------------------------------------------------------

DistributionModel DistributionModel::normal(double mean, double variance) {
    DistributionModel m{Family::kNormal, mean, variance};
    m.validate();
    return m;
}

DistributionModel DistributionModel::exponential_rate(double rate) {
    DistributionModel m{Family::kExponentialRate, rate, 0.0};
    m.validate();
    return m;
}

void DistributionModel::validate() const {
    switch (family) {
        case Family::kNormal:
            if (!(param1 > 0.0) || !std::isfinite(param0) || !std::isfinite(param1)) {
                fail(ErrorCode::kDomain, "normal model requires finite mean and variance > 0");
            }
            break;
        case Family::kExponentialRate:
            if (!(param0 > 0.0) || !std::isfinite(param0)) {
                fail(ErrorCode::kDomain, "exponential model requires rate > 0");
            }
            break;
    }
}

double DistributionModel::mean() const {
    return family == Family::kNormal ? param0 : 1.0 / param0;
}

double DistributionModel::variance() const {
    return family == Family::kNormal ? param1 : 1.0 / (param0 * param0);
}

double pdf(const DistributionModel& model, double x) {
    model.validate();
    switch (model.family) {
        case Family::kNormal: {
            const double z = x - model.param0;
            return std::exp(-0.5 * z * z / model.param1) /
                   std::sqrt(2.0 * M_PI * model.param1);
        }
        case Family::kExponentialRate: {
            if (x < 0.0) return 0.0;
            return model.param0 * std::exp(-model.param0 * x);
        }
    }
    return 0.0;
}

void score(const DistributionModel& model, double x, double* out) {
    model.validate();
    switch (model.family) {
        case Family::kNormal: {
            // d/dmu log rho = (x - mu)/tau^2
            // d/dtau2 log rho = ((x - mu)^2 - tau^2) / (2 tau^4)
            const double z = x - model.param0;
            const double tau2 = model.param1;
            out[0] = z / tau2;
            out[1] = (z * z - tau2) / (2.0 * tau2 * tau2);
            return;
        }
        case Family::kExponentialRate: {
            if (x < 0.0) fail(ErrorCode::kSupport, "score: x outside exponential support");
            // log rho = log(rate) - rate * x
            out[0] = 1.0 / model.param0 - x;
            return;
        }
    }
}

std::vector<double> score(const DistributionModel& model, double x) {
    std::vector<double> out(static_cast<std::size_t>(model.param_count()));
    score(model, x, out.data());
    return out;
}

double quantile_transform(const DistributionModel& model, double u) {
    switch (model.family) {
        case Family::kNormal:
            return model.param0 + std::sqrt(model.param1) * normal_quantile(u);
        case Family::kExponentialRate:
            return -std::log1p(-u) / model.param0;
    }
    return 0.0;
}

std::vector<double> sample(const DistributionModel& model, std::size_t n,
                           SeededStream stream) {
    model.validate();
    if (n < 1) fail(ErrorCode::kDomain, "sample: n must be >= 1");
    CounterRng rng(stream);
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = quantile_transform(model, rng.uniform_at(i));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fits.
// ---------------------------------------------------------------------------

ParamEstimate fit_normal(std::span<const double> samples, VarianceConvention convention) {
    const std::size_t m = samples.size();
    if (m < 2) fail(ErrorCode::kInsufficientData, "fit_normal: need at least 2 samples");
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (double x : samples) {
        const double z = x - mean;
        ss += z * z;
    }
    const double s2 = ss / static_cast<double>(m - 1);
    if (!(s2 > 0.0)) fail(ErrorCode::kDegenerateSample, "fit_normal: zero sample variance");

    const double var_mean = s2 / static_cast<double>(m);
    const double var_s2 = (convention == VarianceConvention::kChiSquare)
                              ? 2.0 * s2 * s2 / static_cast<double>(m - 1)
                              : s2 * s2 / static_cast<double>(m - 1);
    ParamEstimate est;
    est.theta = {mean, s2};
    est.cov = {var_mean, 0.0, 0.0, var_s2};
    est.m = m;
    return est;
}

ParamEstimate fit_exponential_rate(std::span<const double> samples) {
    const std::size_t m = samples.size();
    if (m < 1) fail(ErrorCode::kInsufficientData, "fit_exponential_rate: need at least 1 sample");
    double mean = 0.0;
    for (double x : samples) {
        if (!(x > 0.0)) fail(ErrorCode::kSupport, "fit_exponential_rate: samples must be positive");
        mean += x;
    }
    mean /= static_cast<double>(m);
    const double rate = 1.0 / mean;
    ParamEstimate est;
    est.theta = {rate};
    est.cov = {rate * rate / static_cast<double>(m)};  // delta method on 1/Xbar
    est.m = m;
    return est;
}

DistributionModel model_from_estimate(Family family, const ParamEstimate& estimate) {
    switch (family) {
        case Family::kNormal:
            if (estimate.dim() != 2) fail(ErrorCode::kShapeMismatch, "normal estimate needs 2 parameters");
            return DistributionModel::normal(estimate.theta[0], estimate.theta[1]);
        case Family::kExponentialRate:
            if (estimate.dim() != 1) fail(ErrorCode::kShapeMismatch, "exponential estimate needs 1 parameter");
            return DistributionModel::exponential_rate(estimate.theta[0]);
    }
    fail(ErrorCode::kDomain, "unknown family");
}

// ---------------------------------------------------------------------------
// Standard normal helpers.
// ---------------------------------------------------------------------------

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
}

double normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0)) {
        fail(ErrorCode::kDomain, "normal_quantile: p must lie strictly inside (0,1)");
    }
    // Acklam's rational approximation, then one Halley refinement against the
    // erfc-based CDF; absolute error is far below the 1e-9 contract.
    static const double a[6] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                -2.759285104469687e+02, 1.383577518672690e+02,
                                -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[5] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                -1.556989798598866e+02, 6.680131188771972e+01,
                                -1.328068155288572e+01};
    static const double c[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                -2.400758277161838e+00, -2.549732539343734e+00,
                                4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                2.445134137142996e+00, 3.754408661907416e+00};
    const double p_low = 0.02425;
    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double err = normal_cdf(x) - p;
    const double u = err * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    x -= u / (1.0 + 0.5 * x * u);
    return x;
}

}  // namespace rbdo
