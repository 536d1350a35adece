#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rbdo/errors.hpp"

namespace rbdo {

// ---------------------------------------------------------------------------
// Counter-based random streams.
//
// Every random quantity in the library is a pure function of a (seed, stream
// id, counter) triple, so replications and Monte Carlo loops parallelize
// without any shared generator state: the i-th variate of a stream is the
// same no matter how calls interleave across workers.
// ---------------------------------------------------------------------------

struct SeededStream {
    std::uint64_t seed = 0;
    std::uint64_t id = 0;

    // Derives an independent substream. Children with distinct tags (and the
    // parent itself) never share counter sequences.
    SeededStream child(std::uint64_t tag) const;
};

namespace detail {
std::uint64_t mix64(std::uint64_t z);
}

// Stateless view of one stream; variates are addressable by index.
class CounterRng {
  public:
    explicit CounterRng(SeededStream stream);

    // i-th raw 64-bit word of the stream.
    std::uint64_t word_at(std::uint64_t i) const;
    // i-th uniform variate on the open interval (0, 1).
    double uniform_at(std::uint64_t i) const;
    // i-th standard normal variate (inverse-CDF transform; monotone in the
    // underlying uniform, which keeps common-random-number couplings smooth).
    double normal_at(std::uint64_t i) const;

    // Sequential interface for consumers that do not need random access.
    double next_uniform() { return uniform_at(next_++); }
    double next_normal() { return normal_at(next_++); }

  private:
    std::uint64_t base_;
    std::uint64_t next_ = 0;
};

// Gamma(shape, scale) variate drawn sequentially from `rng`
// (Marsaglia-Tsang; consumes a variable number of words).
double gamma_draw(CounterRng& rng, double shape, double scale);

// ---------------------------------------------------------------------------
// Parametric random-variable models.
// ---------------------------------------------------------------------------

enum class Family {
    kNormal,           // parameters (mean, variance)
    kExponentialRate,  // parameter (rate); law X ~ exp(1)/rate
};

struct DistributionModel {
    Family family = Family::kNormal;
    double param0 = 0.0;  // mean | rate
    double param1 = 1.0;  // variance | unused

    static DistributionModel normal(double mean, double variance);
    static DistributionModel exponential_rate(double rate);

    int param_count() const { return family == Family::kNormal ? 2 : 1; }
    double mean() const;
    double variance() const;

    void validate() const;
};

double pdf(const DistributionModel& model, double x);

// Gradient of the log-density with respect to the model parameters, in the
// same order as the parameter vector. Writes param_count() entries.
void score(const DistributionModel& model, double x, double* out);
std::vector<double> score(const DistributionModel& model, double x);

// Inverse-CDF transform of a uniform u in (0,1); monotone increasing in u.
double quantile_transform(const DistributionModel& model, double u);

std::vector<double> sample(const DistributionModel& model, std::size_t n,
                           SeededStream stream);

// ---------------------------------------------------------------------------
// Estimates.
// ---------------------------------------------------------------------------

struct ParamEstimate {
    std::vector<double> theta;  // estimated parameter vector
    std::vector<double> cov;    // row-major dim x dim sampling covariance
    std::size_t m = 0;          // sample count behind the estimate

    std::size_t dim() const { return theta.size(); }
    double cov_at(std::size_t i, std::size_t j) const {
        return cov[i * dim() + j];
    }
};

// Convention for the variance entry of the normal fit covariance. The
// chi-square sampling law of S^2 gives Var[S^2] = 2 tau^4/(m-1); the
// compatibility value tau^4/(m-1) reproduces a commonly printed variant.
enum class VarianceConvention { kChiSquare, kCompat };

ParamEstimate fit_normal(std::span<const double> samples,
                         VarianceConvention convention = VarianceConvention::kChiSquare);

ParamEstimate fit_exponential_rate(std::span<const double> samples);

DistributionModel model_from_estimate(Family family, const ParamEstimate& estimate);

// ---------------------------------------------------------------------------
// Standard normal helpers.
// ---------------------------------------------------------------------------

double normal_cdf(double x);
double normal_pdf(double x);

// Inverse standard normal CDF, accurate to well below 1e-9 over (0,1).
double normal_quantile(double p);

}  // namespace rbdo
