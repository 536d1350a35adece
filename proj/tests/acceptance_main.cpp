// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Every tolerance is pinned in code. Run a single criterion with
// `acceptance <id>`.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rbdo/bench.hpp"
#include "rbdo/experiment.hpp"

using namespace rbdo;

namespace {

int g_workers = 2;

struct Criterion {
    int id;
    const char* name;
    std::function<bool(std::string&)> run;
};

const TensionTruth kTension{};

ParamEstimate truth_strength_estimate(std::size_t m) {
    ParamEstimate est;
    est.theta = {kTension.mean_strength, kTension.sd_strength * kTension.sd_strength};
    const double tau2 = est.theta[1];
    est.cov = {tau2 / static_cast<double>(m), 0.0, 0.0,
               2.0 * tau2 * tau2 / static_cast<double>(m - 1)};
    est.m = m;
    return est;
}

StrategyConfig make_strategy(Strategy kind, double target, double confidence = 0.95) {
    StrategyConfig c;
    c.strategy = kind;
    c.margin = MarginSpec{margin_kind_for(kind), confidence};
    c.reliability_target = target;
    c.basis = BasisSpec{0.99, 0.95};
    return c;
}

// --------------------------------------------------------------------------
// 1. Tension closed-form design and reliability round trip.
// --------------------------------------------------------------------------
bool criterion_tension_analytic(std::string& detail) {
    const TensionDesign d = tension_exact_design(kTension, 0.95);
    bool ok = std::abs(d.thickness - 0.033) <= 5e-4;
    double worst = 0.0;
    for (double r : {0.9, 0.99, 1.0 - 1e-7}) {
        const TensionDesign dr = tension_exact_design(kTension, r);
        worst = std::max(worst, std::abs(tension_reliability(dr.thickness, kTension) - r));
    }
    ok = ok && worst <= 1e-9;
    std::ostringstream ss;
    ss << "t* = " << d.thickness << " (target 0.033 +- 5e-4), max round-trip error = "
       << worst;
    detail = ss.str();
    return ok;
}

// --------------------------------------------------------------------------
// 2. Delta margin with the analytic gradient equals the closed form.
// --------------------------------------------------------------------------
bool criterion_mil_identity(std::string& detail) {
    double worst = 0.0;
    for (double c : {0.6, 0.75, 0.9, 0.95, 0.99}) {
        for (std::size_t m : {5, 10, 100, 1000}) {
            const ParamEstimate est = truth_strength_estimate(m);
            const std::vector<double> grad = {1.0, 0.0};
            const double delta = mil_margin_delta(grad, est.cov, c).value;
            const double exact = mil_margin_exact_tension(kTension.sd_strength, m, c).value;
            worst = std::max(worst, std::abs(delta - exact));
        }
    }
    std::ostringstream ss;
    ss << "max |delta - exact| = " << worst << " (<= 1e-12)";
    detail = ss.str();
    return worst <= 1e-12;
}

// --------------------------------------------------------------------------
// 3. Confidently conservative coverage of the semianalytic tension MIP.
// --------------------------------------------------------------------------
bool criterion_c2_coverage(std::string& detail) {
    BenchSetup setup;
    setup.kind = ProblemKind::kTension;
    setup.reliability_target = 0.99;
    StrategyConfig config = make_strategy(Strategy::kMip, 0.99, 0.95);
    config.n_outer = 20000;
    const EnsembleReport report =
        replicate(setup, config, 100, 1000, SeededStream{1001, 0}, g_workers);
    const double coverage = c2_coverage(report, 0.99);
    std::ostringstream ss;
    ss << "coverage = " << coverage << " (target 0.95 +- 0.03), infeasible fraction = "
       << report.aggregate.infeasible_fraction;
    detail = ss.str();
    return std::abs(coverage - 0.95) <= 0.03;
}

// --------------------------------------------------------------------------
// 4. Plug-in asymptote and the two basis-value failure directions.
// --------------------------------------------------------------------------
bool criterion_plugin_asymptote(std::string& detail) {
    BenchSetup setup;
    setup.kind = ProblemKind::kTension;
    setup.reliability_target = 0.99;
    const EnsembleReport plug = replicate(setup, make_strategy(Strategy::kPlugIn, 0.99),
                                          1000, 1000, SeededStream{1002, 0}, g_workers);
    const double plug_meff = plug.aggregate.mean_m_eff;

    const EnsembleReport bv_low = replicate(setup, make_strategy(Strategy::kMixedBv, 0.99),
                                            1000, 1000, SeededStream{1002, 1}, g_workers);

    BenchSetup strict = setup;
    strict.reliability_target = 1.0 - 1e-7;
    const EnsembleReport bv_high =
        replicate(strict, make_strategy(Strategy::kMixedBv, 1.0 - 1e-7), 1000, 1000,
                  SeededStream{1002, 2}, g_workers);

    const bool ok = std::abs(plug_meff) < 0.02 && bv_low.aggregate.mean_m_eff > 0.05 &&
                    bv_high.aggregate.mean_m_eff < 0.0;
    std::ostringstream ss;
    ss << "plug-in mean M_eff = " << plug_meff << " (|.| < 0.02), basis-value at 0.99 = "
       << bv_low.aggregate.mean_m_eff << " (> 0.05), at 1-1e-7 = "
       << bv_high.aggregate.mean_m_eff << " (< 0)";
    detail = ss.str();
    return ok;
}

// --------------------------------------------------------------------------
// 5. Exponential-estimator bias table.
// --------------------------------------------------------------------------
bool criterion_exp_bias(std::string& detail) {
    const std::vector<std::size_t> m_grid = {5, 10, 25, 50, 100, 500, 1000};
    const auto rows = exp_bias_study(1.0, 0.01, 0.9, m_grid, 100000, SeededStream{1003, 0});
    bool ok = std::abs(rows.front().m_eff_cri - (-0.496)) <= 0.02;
    double prev = 1e300;
    double worst_mip = 0.0;
    for (const ExpBiasRow& row : rows) {
        const double mag = std::abs(row.m_eff_cri);
        ok = ok && row.m_eff_cri < 0.0 && mag < prev;
        prev = mag;
        worst_mip = std::max(worst_mip, std::abs(row.m_eff_mip));
    }
    ok = ok && std::abs(rows.back().m_eff_cri - (-0.043)) <= 0.02 && worst_mip < 1e-6;
    std::ostringstream ss;
    ss << "CRI M_eff(m=5) = " << rows.front().m_eff_cri << " (-0.496 +- 0.02), M_eff(m=1000) = "
       << rows.back().m_eff_cri << " (-0.043 +- 0.02), max |MIP M_eff| = " << worst_mip
       << " (< 1e-6), magnitudes monotone";
    detail = ss.str();
    return ok;
}

// --------------------------------------------------------------------------
// 6. Beam desk-scale reproduction.
// --------------------------------------------------------------------------
bool criterion_beam(std::string& detail) {
    BenchSetup setup;
    setup.kind = ProblemKind::kBeam;
    setup.score_n = 100000;
    const double target = setup.beam.target;
    const SeededStream stream{1004, 0};

    auto run = [&](Strategy s) {
        StrategyConfig config = make_strategy(s, target, 0.95);
        config.mc_n = 10000;
        return replicate(setup, config, 100, 10, stream, g_workers);
    };
    const EnsembleReport plug = run(Strategy::kPlugIn);
    const EnsembleReport mil = run(Strategy::kMil);
    const EnsembleReport mip = run(Strategy::kMip);
    const EnsembleReport bv = run(Strategy::kMixedBv);

    const double c_plug = plug.aggregate.mean_cost;
    const double c_mil = mil.aggregate.mean_cost;
    const double c_mip = mip.aggregate.mean_cost;
    const double c_bv = bv.aggregate.mean_cost;

    bool ok = c_plug <= c_mil && c_mil <= c_mip && c_mip <= c_bv;
    ok = ok && std::abs(c_bv - 10.17) <= 0.05 * 10.17;
    ok = ok && std::abs(c_mip - 9.93) <= 0.05 * 9.93;

    std::size_t reliable = 0;
    for (const RepRecord& rec : mip.records) {
        if (rec.feasible && rec.r_eff[0] >= target && rec.r_eff[1] >= target) ++reliable;
    }
    ok = ok && reliable >= 8 && plug.aggregate.n_feasible == 10 &&
         mip.aggregate.n_feasible == 10;

    std::ostringstream ss;
    ss << "mean objectives: plug-in " << c_plug << " <= MIL " << c_mil << " <= MIP " << c_mip
       << " <= BV " << c_bv << "; BV within 5% of 10.17, MIP within 5% of 9.93; MIP reps at or"
       << " above target: " << reliable << "/10";
    detail = ss.str();
    return ok;
}

// --------------------------------------------------------------------------
// 7. Likelihood-ratio gradient against the analytic and CRN finite
//    difference oracles.
// --------------------------------------------------------------------------
bool criterion_lr_gradient(std::string& detail) {
    const DesignProblem problem = make_tension_problem(kTension, 0.95);
    const double t = tension_exact_design(kTension, 0.95).thickness;
    const std::vector<double> d = {t};
    const std::size_t n = 1000000;
    const SeededStream stream{1005, 0};
    const std::size_t m = 100;

    std::vector<std::optional<ParamEstimate>> estimates(2);
    estimates[0] = truth_strength_estimate(m);
    const ReliabilityEstimate est = mc_reliability(problem, 0, d, estimates, n, stream);

    const auto analytic = tension_reliability_gradient(
        t, kTension.mean_strength, kTension.sd_strength * kTension.sd_strength,
        kTension.mean_load, kTension.sd_load * kTension.sd_load);
    const double rel_mu_a = std::abs(est.grad_theta[0] - analytic[0]) / std::abs(analytic[0]);
    const double rel_v_a = std::abs(est.grad_theta[1] - analytic[1]) / std::abs(analytic[1]);

    auto r_at = [&](double mean, double var) {
        std::vector<std::optional<ParamEstimate>> e(2);
        ParamEstimate p = truth_strength_estimate(m);
        p.theta = {mean, var};
        e[0] = p;
        return mc_reliability(problem, 0, d, e, n, stream).r_hat;
    };
    const double mu = kTension.mean_strength;
    const double v = kTension.sd_strength * kTension.sd_strength;
    const double h_mu = 0.5;
    const double fd_mu = (r_at(mu + h_mu, v) - r_at(mu - h_mu, v)) / (2.0 * h_mu);
    const double h_v = 200.0;
    const double fd_v = (r_at(mu, v + h_v) - r_at(mu, v - h_v)) / (2.0 * h_v);
    const double rel_mu_fd = std::abs(est.grad_theta[0] - fd_mu) / std::abs(fd_mu);
    const double rel_v_fd = std::abs(est.grad_theta[1] - fd_v) / std::abs(fd_v);

    const bool ok = rel_mu_a < 0.05 && rel_v_a < 0.05 && rel_mu_fd < 0.05 && rel_v_fd < 0.05;
    std::ostringstream ss;
    ss << "relative errors: vs analytic (" << rel_mu_a << ", " << rel_v_a
       << "), vs CRN finite differences (" << rel_mu_fd << ", " << rel_v_fd << ") (< 0.05)";
    detail = ss.str();
    return ok;
}

// --------------------------------------------------------------------------
// 8. Delta-method margin scale against the estimator's sampling spread.
// --------------------------------------------------------------------------
bool criterion_delta_fidelity(std::string& detail) {
    const std::size_t m = 100;
    const double t = tension_exact_design(kTension, 0.99).thickness;
    const double mu = kTension.mean_strength;
    const double tau2 = kTension.sd_strength * kTension.sd_strength;

    const auto grad = tension_reliability_gradient(t, mu, tau2, kTension.mean_load,
                                                   kTension.sd_load * kTension.sd_load);
    const ParamEstimate truth_est = truth_strength_estimate(m);
    const double tau_r = std::sqrt(quadratic_form(grad, truth_est.cov));

    // Parametric draws of the estimator, scored through the analytic
    // reliability surface.
    CounterRng rng(SeededStream{1006, 0});
    const std::size_t reps = 10000;
    const double mean_sd = std::sqrt(tau2 / static_cast<double>(m));
    const double shape = 0.5 * static_cast<double>(m - 1);
    std::vector<double> r_vals(reps);
    for (std::size_t j = 0; j < reps; ++j) {
        const double mean_j = mu + mean_sd * rng.next_normal();
        const double var_j = gamma_draw(rng, shape, tau2 / shape);
        r_vals[j] = tension_reliability(t, mean_j, var_j, kTension.mean_load,
                                        kTension.sd_load * kTension.sd_load);
    }
    double mean_r = 0.0;
    for (double r : r_vals) mean_r += r;
    mean_r /= static_cast<double>(reps);
    double var_r = 0.0;
    for (double r : r_vals) var_r += (r - mean_r) * (r - mean_r);
    var_r /= static_cast<double>(reps - 1);
    const double empirical_sd = std::sqrt(var_r);

    const double rel = std::abs(tau_r - empirical_sd) / empirical_sd;
    std::ostringstream ss;
    ss << "delta sd = " << tau_r << ", empirical sd = " << empirical_sd
       << ", relative gap = " << rel << " (< 0.10)";
    detail = ss.str();
    return rel < 0.10;
}

// --------------------------------------------------------------------------
// 9. Margin decay in the sample count.
// --------------------------------------------------------------------------
bool criterion_margin_decay(std::string& detail) {
    const double t = tension_exact_design(kTension, 0.99).thickness;
    const DistributionModel law = DistributionModel::normal(
        kTension.mean_strength, kTension.sd_strength * kTension.sd_strength);

    std::vector<double> log_m, log_mil, log_mip;
    for (std::uint64_t m : {100u, 1000u, 10000u}) {
        std::vector<double> mil_vals, mip_vals;
        for (std::uint64_t r = 0; r < 100; ++r) {
            const auto xs = sample(law, m, SeededStream{1007, m * 1000 + r});
            const ParamEstimate est = fit_normal(xs);
            const std::vector<double> grad_mean = {1.0, 0.0};
            mil_vals.push_back(mil_margin_delta(grad_mean, est.cov, 0.95).value);
            const auto grad_r = tension_reliability_gradient(
                t, est.theta[0], est.theta[1], kTension.mean_load,
                kTension.sd_load * kTension.sd_load);
            mip_vals.push_back(mip_margin_delta(grad_r, est.cov, 0.95).value);
        }
        std::sort(mil_vals.begin(), mil_vals.end());
        std::sort(mip_vals.begin(), mip_vals.end());
        log_m.push_back(std::log(static_cast<double>(m)));
        log_mil.push_back(std::log(mil_vals[mil_vals.size() / 2]));
        log_mip.push_back(std::log(mip_vals[mip_vals.size() / 2]));
    }
    auto slope = [&](const std::vector<double>& y) {
        return (y.back() - y.front()) / (log_m.back() - log_m.front());
    };
    const double s_mil = slope(log_mil);
    const double s_mip = slope(log_mip);
    const bool ok = std::abs(s_mil + 0.5) <= 0.1 && std::abs(s_mip + 0.5) <= 0.1;
    std::ostringstream ss;
    ss << "log-log slopes: MIL " << s_mil << ", MIP " << s_mip << " (-0.5 +- 0.1)";
    detail = ss.str();
    return ok;
}

// --------------------------------------------------------------------------
// 10. Monte Carlo margin variance in excess of the analytic-gradient one.
// --------------------------------------------------------------------------
bool criterion_variance_balance(std::string& detail) {
    const std::vector<std::size_t> m_grid = {10, 40, 160};
    const std::vector<std::size_t> n_grid = {1000, 4000, 16000};
    const auto cells = variance_balance_study(kTension, 0.99, m_grid, n_grid, 200,
                                              SeededStream{1008, 0}, g_workers);
    bool ok = true;
    for (std::size_t mi = 0; mi < m_grid.size(); ++mi) {
        for (std::size_t nj = 0; nj < n_grid.size(); ++nj) {
            const double ratio = cells[mi * n_grid.size() + nj].ratio;
            ok = ok && ratio >= 1.0;
            if (nj > 0) ok = ok && ratio < cells[mi * n_grid.size() + nj - 1].ratio;
            if (mi > 0) ok = ok && ratio > cells[(mi - 1) * n_grid.size() + nj].ratio;
        }
    }
    // Large-n limit: the Monte Carlo noise contribution vanishes.
    const std::vector<std::size_t> m_one = {10};
    const std::vector<std::size_t> n_big = {1000000};
    const auto limit = variance_balance_study(kTension, 0.99, m_one, n_big, 100,
                                              SeededStream{1008, 1}, g_workers);
    ok = ok && std::abs(limit[0].ratio - 1.0) <= 0.10;

    std::ostringstream ss;
    ss << "ratios ";
    for (const auto& c : cells) ss << c.ratio << " ";
    ss << "(all >= 1, falling in n, rising in m); limit ratio = " << limit[0].ratio
       << " (1 +- 0.10)";
    detail = ss.str();
    return ok;
}

// --------------------------------------------------------------------------
// 11. One-sided tolerance-bound coverage.
// --------------------------------------------------------------------------
bool criterion_tolerance_coverage(std::string& detail) {
    const double mu = kTension.mean_strength;
    const double tau = kTension.sd_strength;
    const double true_quantile = mu + normal_quantile(0.01) * tau;
    const DistributionModel law = DistributionModel::normal(mu, tau * tau);
    const std::size_t reps = 10000;

    bool ok = true;
    std::ostringstream ss;
    ss << "coverage:";
    for (std::uint64_t m : {10u, 18u, 50u}) {
        const double k = k_factor(0.99, 0.95, m);
        std::vector<std::size_t> hits(reps, 0);
        parallel_for(reps, g_workers, [&](std::size_t r) {
            const auto xs = sample(law, m, SeededStream{1009, m * 100000 + r});
            const ParamEstimate est = fit_normal(xs);
            const double b = est.theta[0] - k * std::sqrt(est.theta[1]);
            hits[r] = b <= true_quantile ? 1 : 0;
        });
        std::size_t below = 0;
        for (std::size_t h : hits) below += h;
        const double coverage = static_cast<double>(below) / static_cast<double>(reps);
        ok = ok && std::abs(coverage - 0.95) <= 0.01;
        ss << " m=" << m << ": " << coverage;
    }
    ss << " (0.95 +- 0.01)";
    detail = ss.str();
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    if (argc > 1) only = std::atoi(argv[1]);
    g_workers = std::max(1u, std::min(4u, std::thread::hardware_concurrency()));

    const std::vector<Criterion> criteria = {
        {1, "tension analytic design and round trip", criterion_tension_analytic},
        {2, "delta margin matches the closed-form tension margin", criterion_mil_identity},
        {3, "tension MIP coverage at the confidence level", criterion_c2_coverage},
        {4, "plug-in asymptote and basis-value failure directions", criterion_plugin_asymptote},
        {5, "exponential estimator bias table", criterion_exp_bias},
        {6, "beam strategy ordering and objectives", criterion_beam},
        {7, "likelihood-ratio gradient oracles", criterion_lr_gradient},
        {8, "delta margin scale against sampling spread", criterion_delta_fidelity},
        {9, "margin decay in sample count", criterion_margin_decay},
        {10, "Monte Carlo margin variance balance", criterion_variance_balance},
        {11, "tolerance-bound coverage", criterion_tolerance_coverage},
    };

    int failures = 0;
    for (const Criterion& c : criteria) {
        if (only != 0 && c.id != only) continue;
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %2d %-55s (%.1fs) %s\n", ok ? "PASS" : "FAIL", c.id, c.name, secs,
                    detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    if (failures > 0) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
