#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "rbdo/rngstat.hpp"

using namespace rbdo;

TEST_CASE("streams are deterministic and independent of interleaving") {
    const SeededStream s{42, 7};
    const auto a = sample(DistributionModel::normal(5.0, 1.0), 2, s);
    const auto b = sample(DistributionModel::normal(5.0, 1.0), 2, s);
    CHECK(a == b);

    // Random access equals sequential access.
    CounterRng rng(s);
    CounterRng rng2(s);
    const double u2 = rng.uniform_at(2);
    (void)rng2.next_uniform();
    (void)rng2.next_uniform();
    CHECK(rng2.next_uniform() == u2);

    // Distinct children do not collide.
    CHECK(CounterRng(s.child(0)).uniform_at(0) != CounterRng(s.child(1)).uniform_at(0));
}

TEST_CASE("sampling matches model moments") {
    const std::size_t n = 100000;
    const auto normal_draws =
        sample(DistributionModel::normal(600.0, 3600.0), n, SeededStream{1, 0});
    double mean = 0.0;
    for (double x : normal_draws) mean += x;
    mean /= static_cast<double>(n);
    CHECK(std::abs(mean - 600.0) < 1.0);  // ~5 sigma of the mean's sampling error

    const auto exp_draws =
        sample(DistributionModel::exponential_rate(2.0), n, SeededStream{1, 1});
    double exp_mean = 0.0;
    for (double x : exp_draws) {
        CHECK(x >= 0.0);
        exp_mean += x;
    }
    exp_mean /= static_cast<double>(n);
    CHECK(std::abs(exp_mean - 0.5) < 0.01);

    CHECK_THROWS_AS(sample(DistributionModel::normal(0.0, 1.0), 0, SeededStream{}), Error);
    CHECK_THROWS_AS(DistributionModel::normal(0.0, -1.0), Error);
    CHECK_THROWS_AS(DistributionModel::exponential_rate(0.0), Error);
}

TEST_CASE("densities") {
    CHECK(pdf(DistributionModel::normal(0.0, 1.0), 0.0) ==
          doctest::Approx(0.3989422804014327).epsilon(1e-12));
    CHECK(pdf(DistributionModel::exponential_rate(1.0), 0.0) == doctest::Approx(1.0));
    CHECK(pdf(DistributionModel::exponential_rate(1.0), -1.0) == 0.0);

    // Trapezoid integral of the density matches the CDF difference.
    const DistributionModel m = DistributionModel::normal(2.0, 4.0);
    const double a = 0.0, b = 5.0;
    const int steps = 4000;
    double integral = 0.5 * (pdf(m, a) + pdf(m, b));
    for (int i = 1; i < steps; ++i) {
        integral += pdf(m, a + (b - a) * i / steps);
    }
    integral *= (b - a) / steps;
    const double expected = normal_cdf((b - 2.0) / 2.0) - normal_cdf((a - 2.0) / 2.0);
    CHECK(std::abs(integral - expected) < 1e-3);
}

TEST_CASE("score functions") {
    const DistributionModel m = DistributionModel::normal(600.0, 3600.0);
    const auto g = score(m, 660.0);
    CHECK(g[0] == doctest::Approx(1.0 / 60.0).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(0.0));

    CHECK(score(m, 600.0)[0] == 0.0);

    const auto e = score(DistributionModel::exponential_rate(1.0), 1.0);
    CHECK(e[0] == doctest::Approx(0.0));
    CHECK_THROWS_AS(score(DistributionModel::exponential_rate(1.0), -0.5), Error);
}

TEST_CASE("score identity: Monte Carlo mean of the score is zero") {
    const std::size_t n = 100000;
    for (const DistributionModel& m : {DistributionModel::normal(600.0, 3600.0),
                                       DistributionModel::exponential_rate(2.0)}) {
        const auto xs = sample(m, n, SeededStream{3, 5});
        std::vector<double> acc(m.param_count(), 0.0);
        std::vector<double> acc2(m.param_count(), 0.0);
        std::vector<double> s(m.param_count());
        for (double x : xs) {
            score(m, x, s.data());
            for (int k = 0; k < m.param_count(); ++k) {
                acc[k] += s[k];
                acc2[k] += s[k] * s[k];
            }
        }
        for (int k = 0; k < m.param_count(); ++k) {
            const double mean = acc[k] / static_cast<double>(n);
            const double var = acc2[k] / static_cast<double>(n) - mean * mean;
            const double se = std::sqrt(var / static_cast<double>(n));
            CHECK(std::abs(mean) < 4.0 * se);
        }
    }
}

TEST_CASE("fit_normal") {
    const std::vector<double> xs = {1.0, 2.0, 3.0};
    const ParamEstimate est = fit_normal(xs);
    CHECK(est.theta[0] == doctest::Approx(2.0));
    CHECK(est.theta[1] == doctest::Approx(1.0));
    CHECK(est.cov_at(0, 0) == doctest::Approx(1.0 / 3.0));
    CHECK(est.cov_at(1, 1) == doctest::Approx(1.0));  // 2 S^4/(m-1)
    CHECK(est.m == 3);

    const ParamEstimate printed = fit_normal(xs, VarianceConvention::kCompat);
    CHECK(printed.cov_at(1, 1) == doctest::Approx(0.5));  // S^4/(m-1)

    const std::vector<double> flat = {4.0, 4.0};
    CHECK_THROWS_AS(fit_normal(flat), Error);
    const std::vector<double> one = {4.0};
    CHECK_THROWS_AS(fit_normal(one), Error);

    const auto draws = sample(DistributionModel::normal(600.0, 3600.0), 10000,
                              SeededStream{11, 0});
    const ParamEstimate big = fit_normal(draws);
    CHECK(std::abs(big.theta[0] - 600.0) < 3.0);
    CHECK(std::abs(big.theta[1] - 3600.0) < 180.0);
}

TEST_CASE("fit_normal consistency and covariance shrinkage") {
    const DistributionModel law = DistributionModel::normal(600.0, 3600.0);
    double prev_med_mean_err = 1e300;
    double prev_med_cov = 1e300;
    for (std::uint64_t m : {100u, 1000u, 10000u}) {
        std::vector<double> mean_errs, cov00;
        for (std::uint64_t r = 0; r < 100; ++r) {
            const auto xs = sample(law, m, SeededStream{17, 1000 * m + r});
            const ParamEstimate est = fit_normal(xs);
            mean_errs.push_back(std::abs(est.theta[0] - 600.0));
            cov00.push_back(est.cov_at(0, 0));
        }
        std::sort(mean_errs.begin(), mean_errs.end());
        std::sort(cov00.begin(), cov00.end());
        const double med_err = mean_errs[mean_errs.size() / 2];
        const double med_cov = cov00[cov00.size() / 2];
        CHECK(med_err < prev_med_mean_err);
        CHECK(med_cov < prev_med_cov);
        prev_med_mean_err = med_err;
        prev_med_cov = med_cov;
    }
}

TEST_CASE("fit_exponential_rate") {
    const std::vector<double> xs = {2.0, 2.0, 2.0};
    CHECK(fit_exponential_rate(xs).theta[0] == doctest::Approx(0.5));

    const std::vector<double> one = {1.0};
    const ParamEstimate est = fit_exponential_rate(one);
    CHECK(est.theta[0] == doctest::Approx(1.0));
    CHECK(est.cov_at(0, 0) == doctest::Approx(1.0));

    const std::vector<double> bad = {1.0, -2.0};
    CHECK_THROWS_AS(fit_exponential_rate(bad), Error);

    const auto draws =
        sample(DistributionModel::exponential_rate(1.0), 100000, SeededStream{13, 0});
    CHECK(std::abs(fit_exponential_rate(draws).theta[0] - 1.0) < 0.01);
}

TEST_CASE("normal quantile") {
    CHECK(normal_quantile(0.5) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-10));
    CHECK(normal_quantile(0.99865) == doctest::Approx(2.9999769927034015).epsilon(1e-8));
    CHECK_THROWS_AS(normal_quantile(0.0), Error);
    CHECK_THROWS_AS(normal_quantile(1.0), Error);

    // Round trip across the domain, including deep tails.
    for (double p : {1e-12, 1e-7, 0.001, 0.024, 0.3, 0.5, 0.7, 0.976, 0.999, 1.0 - 1e-7}) {
        CHECK(std::abs(normal_cdf(normal_quantile(p)) - p) < 1e-9 * std::max(p, 1.0 - p) + 1e-16);
    }
}

TEST_CASE("gamma draws reproduce chi-square moments") {
    CounterRng rng(SeededStream{23, 9});
    const double nu = 9.0;
    const std::size_t n = 50000;
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = gamma_draw(rng, nu / 2.0, 2.0);
        mean += x;
        m2 += x * x;
    }
    mean /= static_cast<double>(n);
    const double var = m2 / static_cast<double>(n) - mean * mean;
    CHECK(mean == doctest::Approx(nu).epsilon(0.02));
    CHECK(var == doctest::Approx(2.0 * nu).epsilon(0.1));
}
