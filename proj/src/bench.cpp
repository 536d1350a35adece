#include "rbdo/bench.hpp"

#include <atomic>
#include <cmath>
#include <thread>

namespace rbdo {

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    const int w = std::max(1, std::min<int>(workers, static_cast<int>(count)));
    if (w == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(w);
    for (int t = 0; t < w; ++t) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

double effective_margin(double cost, double cost_star) {
    if (!(cost_star > 0.0)) fail(ErrorCode::kDomain, "effective_margin: cost_star must be > 0");
    return (cost - cost_star) / cost_star;
}

namespace {

DesignProblem truth_problem(const BenchSetup& setup) {
    switch (setup.kind) {
        case ProblemKind::kTension:
            return make_tension_problem(setup.tension, setup.reliability_target);
        case ProblemKind::kBeam:
            return make_beam_problem(setup.beam);
        case ProblemKind::kExponential: {
            DesignProblem p;
            p.design_dim = 1;
            p.bounds = {{0.0, 1e6}};
            p.cost = [](std::span<const double> d) { return d[0]; };
            p.limit_states = {[](std::span<const double> d, std::span<const double> x) {
                return d[0] - x[0];
            }};
            p.random_vars = {{"x", DistributionModel::exponential_rate(setup.exp_rate), true}};
            p.targets = {setup.reliability_target};
            return p;
        }
    }
    fail(ErrorCode::kDomain, "unknown problem kind");
}

std::vector<std::optional<ParamEstimate>> no_estimates(const DesignProblem& problem) {
    return std::vector<std::optional<ParamEstimate>>(problem.random_vars.size());
}

// Exact parameter values dressed as estimates, for truth-parameter solves.
std::vector<std::optional<ParamEstimate>> truth_estimates(const DesignProblem& problem) {
    std::vector<std::optional<ParamEstimate>> out(problem.random_vars.size());
    for (std::size_t v = 0; v < problem.random_vars.size(); ++v) {
        const RandomVar& rv = problem.random_vars[v];
        if (!rv.estimated) continue;
        ParamEstimate e;
        if (rv.model.family == Family::kNormal) {
            e.theta = {rv.model.param0, rv.model.param1};
            e.cov.assign(4, 0.0);
        } else {
            e.theta = {rv.model.param0};
            e.cov.assign(1, 0.0);
        }
        e.m = 1000000;
        out[v] = std::move(e);
    }
    return out;
}

DesignProblem beam_basis_value_problem(const BeamTruth& truth, double modulus_bv,
                                       double yield_bv) {
    if (!(modulus_bv > 0.0) || !(yield_bv > 0.0)) {
        fail(ErrorCode::kNonphysicalBasis, "beam basis values must be positive");
    }
    DesignProblem p;
    p.design_dim = 2;
    p.bounds = {{truth.lower_bound, truth.upper_bound},
                {truth.lower_bound, truth.upper_bound}};
    p.cost = [](std::span<const double> d) { return d[0] * d[1]; };
    const double length = truth.length;
    const double d0 = truth.max_displacement;
    p.limit_states = {
        [yield_bv](std::span<const double> d, std::span<const double> x) {
            return 1.0 - beam_stress(d[0], d[1], x[0], x[1]) / yield_bv;
        },
        [modulus_bv, length, d0](std::span<const double> d, std::span<const double> x) {
            return 1.0 - beam_displacement(d[0], d[1], x[0], x[1], modulus_bv, length) / d0;
        },
    };
    p.random_vars = {
        {"lateral_load", truth.lateral_load, false},
        {"vertical_load", truth.vertical_load, false},
    };
    p.targets = {truth.target, truth.target};
    return p;
}

double beam_cost_star(const BenchSetup& setup, const StrategyConfig& config,
                      SeededStream stream) {
    const DesignProblem problem = make_beam_problem(setup.beam);
    StrategyConfig truth_config = config;
    truth_config.strategy = Strategy::kPlugIn;
    truth_config.margin.kind = MarginKind::kNone;
    const DesignResult r =
        solve_rbdo_mc(problem, truth_estimates(problem), truth_config, stream);
    return r.cost;
}

struct RepOutcome {
    DesignResult result;
    std::string error;
};

RepOutcome run_rep(const BenchSetup& setup, const StrategyConfig& config, std::size_t m,
                   SeededStream rep_stream) {
    RepOutcome out;
    try {
        switch (setup.kind) {
            case ProblemKind::kTension: {
                const DistributionModel strength_law = DistributionModel::normal(
                    setup.tension.mean_strength,
                    setup.tension.sd_strength * setup.tension.sd_strength);
                const std::vector<double> data = sample(strength_law, m, rep_stream.child(0));
                TensionSolveContext ctx{fit_normal(data), setup.tension, rep_stream.child(2)};
                out.result = solve_tension(config, ctx);
                break;
            }
            case ProblemKind::kBeam: {
                const DesignProblem problem = make_beam_problem(setup.beam);
                const std::vector<double> modulus_data =
                    sample(setup.beam.modulus, m, rep_stream.child(0));
                const std::vector<double> yield_data =
                    sample(setup.beam.yield_strength, m, rep_stream.child(1));
                const ParamEstimate fit_e = fit_normal(modulus_data);
                const ParamEstimate fit_y = fit_normal(yield_data);
                if (config.strategy == Strategy::kMixedBv) {
                    const BasisSpec basis = *config.basis;
                    const BasisValue bv_e =
                        basis_value(fit_e, basis.pop_fraction, basis.confidence);
                    const BasisValue bv_y =
                        basis_value(fit_y, basis.pop_fraction, basis.confidence);
                    const DesignProblem reduced =
                        beam_basis_value_problem(setup.beam, bv_e.value, bv_y.value);
                    StrategyConfig reduced_config = config;
                    reduced_config.strategy = Strategy::kPlugIn;
                    reduced_config.margin.kind = MarginKind::kNone;
                    out.result = solve_rbdo_mc(reduced, no_estimates(reduced), reduced_config,
                                               rep_stream.child(2));
                } else {
                    std::vector<std::optional<ParamEstimate>> estimates(4);
                    estimates[2] = fit_e;
                    estimates[3] = fit_y;
                    out.result =
                        solve_rbdo_mc(problem, estimates, config, rep_stream.child(2));
                }
                break;
            }
            case ProblemKind::kExponential: {
                const DistributionModel law = DistributionModel::exponential_rate(setup.exp_rate);
                const std::vector<double> data = sample(law, m, rep_stream.child(0));
                const double failure_target = 1.0 - setup.reliability_target;
                out.result = solve_exp_threshold(config, data, failure_target,
                                                 config.margin.confidence, rep_stream.child(2));
                break;
            }
        }
    } catch (const Error& e) {
        out.error = error_code_name(e.code());
        out.result.feasible = false;
    } catch (const std::exception&) {
        out.error = "error";
        out.result.feasible = false;
    }
    return out;
}

}  // namespace

std::vector<double> effective_reliability(const BenchSetup& setup, std::span<const double> d,
                                          ReliabilityMode mode, std::size_t n,
                                          SeededStream stream) {
    if (mode == ReliabilityMode::kAnalytic) {
        switch (setup.kind) {
            case ProblemKind::kTension:
                return {tension_reliability(d[0], setup.tension)};
            case ProblemKind::kExponential:
                return {exp_reliability(d[0], setup.exp_rate)};
            case ProblemKind::kBeam:
                fail(ErrorCode::kUnsupportedMode,
                     "effective_reliability: no analytic oracle for the beam");
        }
    }
    const DesignProblem problem = with_known_parameters(truth_problem(setup));
    const McBatch batch = draw_batch(problem, no_estimates(problem), n, stream);
    std::vector<double> out;
    out.reserve(problem.limit_states.size());
    for (std::size_t k = 0; k < problem.limit_states.size(); ++k) {
        const std::vector<double> g = eval_limit_state(problem, k, d, batch);
        out.push_back(mc_reliability_from_batch(batch, g).r_hat);
    }
    return out;
}

EnsembleReport replicate(const BenchSetup& setup, const StrategyConfig& config,
                         std::size_t m, std::size_t reps, SeededStream stream, int workers) {
    config.validate();
    if (reps < 1) fail(ErrorCode::kDomain, "replicate: reps must be >= 1");

    EnsembleReport report;
    report.strategy = config.strategy;
    report.m = m;
    switch (setup.kind) {
        case ProblemKind::kTension:
            report.cost_star =
                tension_exact_design(setup.tension, setup.reliability_target).thickness;
            report.targets = {setup.reliability_target};
            break;
        case ProblemKind::kBeam:
            report.cost_star = beam_cost_star(setup, config, stream.child(0x5742));
            report.targets = {setup.beam.target, setup.beam.target};
            break;
        case ProblemKind::kExponential:
            report.cost_star = exp_exact_design(setup.reliability_target, setup.exp_rate);
            report.targets = {setup.reliability_target};
            break;
    }

    report.records.resize(reps);
    parallel_for(reps, workers, [&](std::size_t k) {
        const SeededStream rep_stream = stream.child(k);
        RepRecord rec;
        rec.rep = static_cast<int>(k);
        rec.m = m;
        rec.strategy = config.strategy;
        RepOutcome outcome = run_rep(setup, config, m, rep_stream);
        rec.error = outcome.error;
        rec.feasible = outcome.error.empty() && outcome.result.feasible;
        if (rec.feasible) {
            rec.d = outcome.result.d;
            rec.cost = outcome.result.cost;
            rec.m_eff = effective_margin(rec.cost, report.cost_star);
            const ReliabilityMode mode = setup.kind == ProblemKind::kBeam
                                             ? ReliabilityMode::kMonteCarlo
                                             : ReliabilityMode::kAnalytic;
            rec.r_eff = effective_reliability(setup, rec.d, mode, setup.score_n,
                                              rep_stream.child(3));
            double worst = 0.0;
            for (const MarginValue& mv : outcome.result.margins) {
                worst = std::max(worst, mv.value);
            }
            rec.margin_value = worst;
        }
        report.records[k] = std::move(rec);
    });

    // Aggregates over feasible replications, infeasible fraction separate.
    Aggregate agg;
    agg.n_total = reps;
    const std::size_t n_constraints = report.targets.size();
    agg.mean_r_eff.assign(n_constraints, 0.0);
    double sum_cost = 0.0, sum_meff = 0.0, sum_meff2 = 0.0;
    std::size_t covered = 0;
    for (const RepRecord& rec : report.records) {
        if (!rec.feasible) continue;
        ++agg.n_feasible;
        sum_cost += rec.cost;
        sum_meff += rec.m_eff;
        sum_meff2 += rec.m_eff * rec.m_eff;
        bool all_ok = true;
        for (std::size_t k = 0; k < n_constraints; ++k) {
            agg.mean_r_eff[k] += rec.r_eff[k];
            all_ok = all_ok && rec.r_eff[k] >= report.targets[k];
        }
        if (all_ok) ++covered;
    }
    agg.infeasible_fraction =
        static_cast<double>(reps - agg.n_feasible) / static_cast<double>(reps);
    if (agg.n_feasible > 0) {
        const double nf = static_cast<double>(agg.n_feasible);
        agg.mean_cost = sum_cost / nf;
        agg.mean_m_eff = sum_meff / nf;
        const double var =
            agg.n_feasible > 1 ? (sum_meff2 - nf * agg.mean_m_eff * agg.mean_m_eff) / (nf - 1.0)
                               : 0.0;
        agg.sd_m_eff = std::sqrt(std::max(0.0, var));
        const double se = agg.sd_m_eff / std::sqrt(nf);
        agg.ci_lo = agg.mean_m_eff - 1.959963984540054 * se;
        agg.ci_hi = agg.mean_m_eff + 1.959963984540054 * se;
        agg.one_sided_lo = agg.mean_m_eff - 1.6448536269514722 * se;
        agg.one_sided_hi = agg.mean_m_eff + 1.6448536269514722 * se;
        for (double& r : agg.mean_r_eff) r /= nf;
    }
    agg.coverage = static_cast<double>(covered) / static_cast<double>(reps);
    agg.coverage_se =
        std::sqrt(std::max(0.0, agg.coverage * (1.0 - agg.coverage) / static_cast<double>(reps)));
    report.aggregate = agg;
    return report;
}

double c2_coverage(const EnsembleReport& report, double target) {
    if (report.records.empty()) fail(ErrorCode::kDomain, "c2_coverage: empty report");
    std::size_t covered = 0;
    for (const RepRecord& rec : report.records) {
        if (!rec.feasible) continue;
        bool all_ok = true;
        for (double r : rec.r_eff) all_ok = all_ok && r >= target;
        if (all_ok) ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(report.records.size());
}

std::vector<ExpBiasRow> exp_bias_study(double rate, double failure_target, double alpha,
                                       std::span<const std::size_t> m_grid,
                                       std::size_t n_outer, SeededStream stream) {
    if (m_grid.empty()) fail(ErrorCode::kDomain, "exp_bias_study: empty m grid");
    const double d_star = exp_exact_design(1.0 - failure_target, rate);
    std::vector<ExpBiasRow> rows;
    rows.reserve(m_grid.size());
    for (std::size_t i = 0; i < m_grid.size(); ++i) {
        const std::size_t m = m_grid[i];
        const ExpOuterDraws draws =
            exp_rate_outer_draws(rate, m, n_outer, stream.child(1000 + i));
        ExpBiasRow row;
        row.m = m;
        const DesignResult cri = solve_exp_cri_with_draws(draws, failure_target, alpha);
        row.m_eff_cri = effective_margin(cri.cost, d_star);
        // MIP scored at the alpha-percentile realization of the estimator.
        const double center = empirical_quantile(draws.rates, alpha);
        const DesignResult mip = solve_exp_mip_with_draws(center, draws, failure_target, alpha);
        row.m_eff_mip = effective_margin(mip.cost, d_star);
        rows.push_back(row);
    }
    return rows;
}

std::vector<VarianceBalanceCell> variance_balance_study(
    const TensionTruth& truth, double target, std::span<const std::size_t> m_grid,
    std::span<const std::size_t> n_grid, std::size_t reps, SeededStream stream, int workers) {
    if (m_grid.empty() || n_grid.empty()) {
        fail(ErrorCode::kDomain, "variance_balance_study: empty grid");
    }
    if (reps < 2) fail(ErrorCode::kDomain, "variance_balance_study: need reps >= 2");

    const DesignProblem problem = make_tension_problem(truth, target);
    const double t_star = tension_exact_design(truth, target).thickness;
    const std::vector<double> d = {t_star};
    const DistributionModel strength_law = DistributionModel::normal(
        truth.mean_strength, truth.sd_strength * truth.sd_strength);

    auto variance = [&](const std::vector<double>& v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double acc = 0.0;
        for (double x : v) acc += (x - mean) * (x - mean);
        return acc / static_cast<double>(v.size() - 1);
    };

    std::vector<VarianceBalanceCell> cells;
    for (std::size_t mi = 0; mi < m_grid.size(); ++mi) {
        const std::size_t m = m_grid[mi];
        const SeededStream m_stream = stream.child(mi);
        std::vector<double> analytic(reps);
        std::vector<std::vector<double>> mc(n_grid.size(), std::vector<double>(reps));
        parallel_for(reps, workers, [&](std::size_t r) {
            // The same fitted parameters serve every n, so the ratio along a
            // row responds only to the Monte Carlo gradient noise.
            const std::vector<double> data = sample(strength_law, m, m_stream.child(r));
            const ParamEstimate est = fit_normal(data);
            const auto grad = tension_reliability_gradient(
                t_star, est.theta[0], est.theta[1], truth.mean_load,
                truth.sd_load * truth.sd_load, truth.radius);
            analytic[r] = quadratic_form(grad, est.cov);
            std::vector<std::optional<ParamEstimate>> estimates(2);
            estimates[0] = est;
            for (std::size_t nj = 0; nj < n_grid.size(); ++nj) {
                const ReliabilityEstimate re =
                    mc_reliability(problem, 0, d, estimates, n_grid[nj],
                                   m_stream.child(1000000 + r * n_grid.size() + nj));
                mc[nj][r] = quadratic_form(re.grad_theta, est.cov);
            }
        });
        const double var_analytic = variance(analytic);
        for (std::size_t nj = 0; nj < n_grid.size(); ++nj) {
            VarianceBalanceCell cell;
            cell.m = m;
            cell.n = n_grid[nj];
            cell.ratio = variance(mc[nj]) / var_analytic;
            cells.push_back(cell);
        }
    }
    return cells;
}

}  // namespace rbdo
