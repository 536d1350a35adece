#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rbdo/tolerance.hpp"

using namespace rbdo;

TEST_CASE("central cases") {
    // delta = 0 and a median quantile: the central t median is zero.
    CHECK(std::abs(k_factor(0.5, 0.5, 7)) < 1e-9);
    CHECK(std::abs(k_factor(0.5, 0.5, 40)) < 1e-9);

    // Central Student-t quantile (delta = 0) agrees with the textbook value.
    CHECK(noncentral_t_quantile(0.975, 10.0, 0.0) == doctest::Approx(2.2281388520).epsilon(1e-6));
    CHECK_THROWS_AS(k_factor(0.99, 0.95, 1), Error);
    CHECK_THROWS_AS(k_factor(1.0, 0.95, 10), Error);
}

TEST_CASE("noncentral CDF sanity") {
    // (T <= delta at w=1) happens when Z <= 0 roughly; CDF at large t -> 1.
    CHECK(noncentral_t_cdf(1e6, 9.0, 3.0) == doctest::Approx(1.0));
    CHECK(noncentral_t_cdf(-1e6, 9.0, 3.0) == doctest::Approx(0.0));
    // Monotone in t.
    CHECK(noncentral_t_cdf(2.0, 9.0, 3.0) < noncentral_t_cdf(3.0, 9.0, 3.0));
}

TEST_CASE("k-factor reference values") {
    // Cross-checked against an independent noncentral-t implementation; the
    // m = 10 value is also the familiar tabulated one-sided factor.
    CHECK(k_factor(0.99, 0.95, 10) == doctest::Approx(3.981118).epsilon(1e-5));
    CHECK(k_factor(0.99, 0.95, 18) == doctest::Approx(3.370332).epsilon(1e-5));
    CHECK(k_factor(0.99, 0.95, 100) == doctest::Approx(2.683958).epsilon(1e-5));
    CHECK(k_factor(0.90, 0.95, 10) == doctest::Approx(2.354640).epsilon(1e-5));
}

TEST_CASE("k-factor monotonicity") {
    // Nonincreasing in m.
    double prev = 1e300;
    for (std::size_t m : {5, 10, 20, 50, 100, 500}) {
        const double k = k_factor(0.99, 0.95, m);
        CHECK(k < prev);
        CHECK(k > 0.0);
        prev = k;
    }
    // Nondecreasing in confidence and population fraction.
    CHECK(k_factor(0.99, 0.90, 18) < k_factor(0.99, 0.95, 18));
    CHECK(k_factor(0.90, 0.95, 18) < k_factor(0.99, 0.95, 18));
}

TEST_CASE("basis value composition") {
    ParamEstimate est;
    est.theta = {600.0, 3600.0};
    est.cov = {3600.0 / 10, 0, 0, 2.0 * 3600.0 * 3600.0 / 9};
    est.m = 10;
    const BasisValue median_basis = basis_value(est, 0.5, 0.5);
    CHECK(median_basis.value == doctest::Approx(600.0).epsilon(1e-9));

    est.m = 50;
    const BasisValue a_basis = basis_value(est, 0.99, 0.95);
    CHECK(a_basis.value ==
          doctest::Approx(600.0 - k_factor(0.99, 0.95, 50) * 60.0).epsilon(1e-12));
    CHECK(a_basis.k > 0.0);
}

TEST_CASE("coverage oracle at m = 18") {
    // Fraction of basis values below the true first percentile ~ confidence.
    const double mu = 600.0, tau = 60.0;
    const double true_quantile = mu - 2.3263478740408408 * tau;
    const std::size_t m = 18, reps = 4000;
    const double k = k_factor(0.99, 0.95, m);
    const DistributionModel law = DistributionModel::normal(mu, tau * tau);
    std::size_t below = 0;
    for (std::uint64_t r = 0; r < reps; ++r) {
        const auto xs = sample(law, m, SeededStream{99, r});
        const ParamEstimate est = fit_normal(xs);
        const double b = est.theta[0] - k * std::sqrt(est.theta[1]);
        if (b <= true_quantile) ++below;
    }
    const double coverage = static_cast<double>(below) / static_cast<double>(reps);
    const double se = std::sqrt(0.95 * 0.05 / static_cast<double>(reps));
    CHECK(std::abs(coverage - 0.95) < 4.0 * se);
}
