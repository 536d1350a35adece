#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "rbdo/rngstat.hpp"

namespace rbdo {

// ---------------------------------------------------------------------------
// Generic design-problem description consumed by the Monte Carlo solver and
// the replication harness. Limit states use the convention g <= 0 is failure.
// ---------------------------------------------------------------------------

struct RandomVar {
    std::string name;
    DistributionModel model;  // ground-truth law
    bool estimated = false;   // parameters estimated from data (vs known exactly)
};

struct DesignProblem {
    std::size_t design_dim = 0;
    std::vector<std::pair<double, double>> bounds;  // per design variable
    std::function<double(std::span<const double>)> cost;
    std::vector<std::function<double(std::span<const double>, std::span<const double>)>>
        limit_states;  // g_k(d, x)
    std::vector<RandomVar> random_vars;
    std::vector<double> targets;  // per-limit-state reliability
};

// ---------------------------------------------------------------------------
// Hollow-cylinder tension sizing.
// ---------------------------------------------------------------------------

struct TensionTruth {
    double mean_strength = 600.0;
    double mean_load = 100.0;
    double sd_strength = 60.0;
    double sd_load = 10.0;
    double radius = 1.0;
};

double tension_area(double thickness, double radius = 1.0);
double thickness_from_area(double area, double radius = 1.0);

// g(t, U, F) = U - F / A(t).
double tension_limit_state(double thickness, double strength, double load,
                           double radius = 1.0);

struct TensionDesign {
    double area = 0.0;
    double thickness = 0.0;
};

// Closed-form solution of min t s.t. P[g > 0] >= target for independent
// normal strength and load.
TensionDesign tension_exact_design(double mean_strength, double var_strength,
                                   double mean_load, double var_load,
                                   double target, double radius = 1.0);
TensionDesign tension_exact_design(const TensionTruth& truth, double target);

// Exact reliability Phi((mu_u - mu_f/A) / sqrt(tau_u^2 + tau_f^2/A^2)).
double tension_reliability(double thickness, double mean_strength,
                           double var_strength, double mean_load, double var_load,
                           double radius = 1.0);
double tension_reliability(double thickness, const TensionTruth& truth);

// Gradient of the exact reliability with respect to the estimated strength
// parameters (mean, variance), at the given design.
std::array<double, 2> tension_reliability_gradient(double thickness,
                                                   double mean_strength,
                                                   double var_strength,
                                                   double mean_load,
                                                   double var_load,
                                                   double radius = 1.0);

DesignProblem make_tension_problem(const TensionTruth& truth, double target);

// ---------------------------------------------------------------------------
// Cantilever beam sizing (design variables w, t; random H, V, E, Y).
// ---------------------------------------------------------------------------

struct BeamTruth {
    DistributionModel lateral_load = DistributionModel::normal(500.0, 100.0 * 100.0);
    DistributionModel vertical_load = DistributionModel::normal(1000.0, 100.0 * 100.0);
    DistributionModel modulus = DistributionModel::normal(2.9e7, 1.45e6 * 1.45e6);
    DistributionModel yield_strength = DistributionModel::normal(4.0e4, 2.0e3 * 2.0e3);
    double length = 100.0;
    double max_displacement = 2.2535;
    double lower_bound = 1.0;
    double upper_bound = 4.0;
    double target = 0.99865;
};

struct BeamLimits {
    double stress_g = 0.0;       // 1 - S/Y
    double displacement_g = 0.0; // 1 - D/D0
};

double beam_stress(double w, double t, double lateral, double vertical);
double beam_displacement(double w, double t, double lateral, double vertical,
                         double modulus, double length);
BeamLimits beam_limit_states(double w, double t, double lateral, double vertical,
                             double modulus, double yield_strength,
                             double length = 100.0, double max_displacement = 2.2535);

DesignProblem make_beam_problem(const BeamTruth& truth);

// ---------------------------------------------------------------------------
// Exponential threshold sizing (biased-estimator example).
// ---------------------------------------------------------------------------

// Copy of the problem with every random variable marked exactly known (for
// truth-parameter evaluations).
DesignProblem with_known_parameters(DesignProblem problem);

// R(d) = P[d - X >= 0] = 1 - exp(-rate * d) for X ~ exp(1)/rate.
double exp_reliability(double threshold, double rate);

// d* = -log(1 - target) / rate.
double exp_exact_design(double target, double rate);

}  // namespace rbdo
