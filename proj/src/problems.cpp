#include "rbdo/problems.hpp"

#include <cmath>

namespace rbdo {

double tension_area(double thickness, double radius) {
    if (!(thickness > 0.0)) fail(ErrorCode::kDomain, "tension_area: thickness must be > 0");
    return M_PI * ((radius + thickness) * (radius + thickness) - radius * radius);
}

double thickness_from_area(double area, double radius) {
    if (!(area > 0.0)) fail(ErrorCode::kDomain, "thickness_from_area: area must be > 0");
    return std::sqrt(area / M_PI + radius * radius) - radius;
}

double tension_limit_state(double thickness, double strength, double load, double radius) {
    return strength - load / tension_area(thickness, radius);
}

TensionDesign tension_exact_design(double mean_strength, double var_strength,
                                   double mean_load, double var_load,
                                   double target, double radius) {
    if (!(target > 0.0) || !(target < 1.0)) {
        fail(ErrorCode::kDomain, "tension_exact_design: target must lie inside (0,1)");
    }
    const double z = normal_quantile(target);
    const double z2 = z * z;
    const double den = mean_strength * mean_strength - z2 * var_strength;
    if (!(den > 0.0)) {
        fail(ErrorCode::kInfeasibleTarget,
             "tension_exact_design: target unreachable (strength mean below quantile spread)");
    }
    const double disc = z2 * mean_strength * mean_strength * var_load +
                        z2 * mean_load * mean_load * var_strength -
                        z2 * z2 * var_strength * var_load;
    if (disc < 0.0) {
        fail(ErrorCode::kInfeasibleTarget, "tension_exact_design: negative discriminant");
    }
    // For targets below one half the mean limit state is negative at the
    // optimum, which selects the other root of the quadratic.
    const double root = std::sqrt(disc);
    const double num = (z >= 0.0) ? mean_strength * mean_load + root
                                  : mean_strength * mean_load - root;
    const double area = num / den;
    if (!(area > 0.0)) {
        fail(ErrorCode::kInfeasibleTarget, "tension_exact_design: nonpositive area");
    }
    return TensionDesign{area, thickness_from_area(area, radius)};
}

TensionDesign tension_exact_design(const TensionTruth& truth, double target) {
    return tension_exact_design(truth.mean_strength, truth.sd_strength * truth.sd_strength,
                                truth.mean_load, truth.sd_load * truth.sd_load, target,
                                truth.radius);
}

double tension_reliability(double thickness, double mean_strength, double var_strength,
                           double mean_load, double var_load, double radius) {
    const double area = tension_area(thickness, radius);
    const double sigma = std::sqrt(var_strength + var_load / (area * area));
    return normal_cdf((mean_strength - mean_load / area) / sigma);
}

double tension_reliability(double thickness, const TensionTruth& truth) {
    return tension_reliability(thickness, truth.mean_strength,
                               truth.sd_strength * truth.sd_strength, truth.mean_load,
                               truth.sd_load * truth.sd_load, truth.radius);
}

std::array<double, 2> tension_reliability_gradient(double thickness, double mean_strength,
                                                   double var_strength, double mean_load,
                                                   double var_load, double radius) {
    const double area = tension_area(thickness, radius);
    const double sigma2 = var_strength + var_load / (area * area);
    const double sigma = std::sqrt(sigma2);
    const double h = (mean_strength - mean_load / area) / sigma;
    const double phi = normal_pdf(h);
    return {phi / sigma, -phi * h / (2.0 * sigma2)};
}

DesignProblem make_tension_problem(const TensionTruth& truth, double target) {
    DesignProblem p;
    p.design_dim = 1;
    p.bounds = {{1e-4, 0.5}};
    p.cost = [](std::span<const double> d) { return d[0]; };
    const double radius = truth.radius;
    p.limit_states = {[radius](std::span<const double> d, std::span<const double> x) {
        return tension_limit_state(d[0], x[0], x[1], radius);
    }};
    p.random_vars = {
        {"strength",
         DistributionModel::normal(truth.mean_strength, truth.sd_strength * truth.sd_strength),
         true},
        {"load", DistributionModel::normal(truth.mean_load, truth.sd_load * truth.sd_load),
         false},
    };
    p.targets = {target};
    return p;
}

double beam_stress(double w, double t, double lateral, double vertical) {
    return 600.0 * vertical / (w * t * t) + 600.0 * lateral / (w * w * t);
}

double beam_displacement(double w, double t, double lateral, double vertical,
                         double modulus, double length) {
    const double a = vertical / (t * t);
    const double b = lateral / (w * w);
    return 4.0 * length * length * length / (modulus * w * t) * std::sqrt(a * a + b * b);
}

BeamLimits beam_limit_states(double w, double t, double lateral, double vertical,
                             double modulus, double yield_strength, double length,
                             double max_displacement) {
    if (!(w > 0.0) || !(t > 0.0) || !(modulus > 0.0) || !(yield_strength > 0.0)) {
        fail(ErrorCode::kDomain, "beam_limit_states: w, t, E, Y must be positive");
    }
    BeamLimits g;
    g.stress_g = 1.0 - beam_stress(w, t, lateral, vertical) / yield_strength;
    g.displacement_g =
        1.0 - beam_displacement(w, t, lateral, vertical, modulus, length) / max_displacement;
    return g;
}

DesignProblem make_beam_problem(const BeamTruth& truth) {
    DesignProblem p;
    p.design_dim = 2;
    p.bounds = {{truth.lower_bound, truth.upper_bound},
                {truth.lower_bound, truth.upper_bound}};
    p.cost = [](std::span<const double> d) { return d[0] * d[1]; };
    const double length = truth.length;
    const double d0 = truth.max_displacement;
    p.limit_states = {
        [](std::span<const double> d, std::span<const double> x) {
            return 1.0 - beam_stress(d[0], d[1], x[0], x[1]) / x[3];
        },
        [length, d0](std::span<const double> d, std::span<const double> x) {
            return 1.0 - beam_displacement(d[0], d[1], x[0], x[1], x[2], length) / d0;
        },
    };
    p.random_vars = {
        {"lateral_load", truth.lateral_load, false},
        {"vertical_load", truth.vertical_load, false},
        {"modulus", truth.modulus, true},
        {"yield_strength", truth.yield_strength, true},
    };
    p.targets = {truth.target, truth.target};
    return p;
}

DesignProblem with_known_parameters(DesignProblem problem) {
    for (RandomVar& rv : problem.random_vars) rv.estimated = false;
    return problem;
}

double exp_reliability(double threshold, double rate) {
    if (!(threshold >= 0.0)) fail(ErrorCode::kDomain, "exp_reliability: threshold must be >= 0");
    if (!(rate > 0.0)) fail(ErrorCode::kDomain, "exp_reliability: rate must be > 0");
    return 1.0 - std::exp(-rate * threshold);
}

double exp_exact_design(double target, double rate) {
    if (!(target > 0.0) || !(target < 1.0)) {
        fail(ErrorCode::kDomain, "exp_exact_design: target must lie inside (0,1)");
    }
    if (!(rate > 0.0)) fail(ErrorCode::kDomain, "exp_exact_design: rate must be > 0");
    return -std::log1p(-target) / rate;
}

}  // namespace rbdo
