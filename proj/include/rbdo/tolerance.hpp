#pragma once

#include <cstddef>

#include "rbdo/rngstat.hpp"

namespace rbdo {

// One-sided tolerance bound ("basis value") realized from a normal fit:
// value = mean - k * sd, where k covers a population fraction at a
// confidence level for the given sample count.
struct BasisValue {
    double value = 0.0;
    double pop_fraction = 0.0;
    double confidence = 0.0;
    std::size_t m = 0;
    double k = 0.0;
};

// CDF of the noncentral t distribution with `nu` degrees of freedom and
// noncentrality `delta`, evaluated by integrating Phi(t*w - delta) against
// the chi_nu/sqrt(nu) scale density. Absolute accuracy ~1e-10.
double noncentral_t_cdf(double t, double nu, double delta);

// Quantile by bisection on the CDF above.
double noncentral_t_quantile(double p, double nu, double delta);

// k-factor for a one-sided normal tolerance interval:
// k = t'_{confidence; m-1, delta} / sqrt(m) with delta = Phi^{-1}(P) sqrt(m).
double k_factor(double pop_fraction, double confidence, std::size_t m);

// Basis value from a normal fit (theta = (mean, variance)).
BasisValue basis_value(const ParamEstimate& estimate, double pop_fraction,
                       double confidence);

}  // namespace rbdo
