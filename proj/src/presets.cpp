#include "rbdo/experiment.hpp"

namespace rbdo {

namespace {

// Desk-scale defaults; reps / mc_n / seed / out_dir are overridable from the
// command line to restore full scale.
const std::vector<Preset> kPresets = {
    {"fig1-tension-meff",
     "tension: effective margin of plug-in, basis-value and regulated sizing over m",
     R"json({
  // Effective margin against sample count for the tension problem.
  // Override --reps 1000 for full-scale ensembles.
  "schema_version": 1,
  "problem": "tension",
  "strategies": [
    {"strategy": "plugin"},
    {"strategy": "basis_value", "pop_fraction": 0.99, "basis_confidence": 0.95},
    {"strategy": "regulated", "pop_fraction": 0.99, "basis_confidence": 0.95}
  ],
  "targets": [0.99, 0.9999999],
  "m_grid": [10, 20, 50, 100, 200, 500, 1000],
  "reps": 100,
  "seed": 20240817,
  "out_dir": "out/fig1-tension-meff"
})json"},
    {"fig3-mil",
     "tension: margin-in-limit sizing against plug-in and basis value",
     R"json({
  "schema_version": 1,
  "problem": "tension",
  "strategies": [
    {"strategy": "plugin"},
    {"strategy": "basis_value"},
    {"strategy": "mil", "confidence": 0.95}
  ],
  "targets": [0.99, 0.9999999],
  "m_grid": [10, 20, 50, 100, 200, 500, 1000],
  "reps": 100,
  "seed": 20240817,
  "out_dir": "out/fig3-mil"
})json"},
    {"fig4-mip",
     "tension: margin-in-probability sizing; low-m infeasible records expected",
     R"json({
  "schema_version": 1,
  "problem": "tension",
  "strategies": [
    {"strategy": "plugin"},
    {"strategy": "basis_value"},
    {"strategy": "mip", "confidence": 0.95}
  ],
  "targets": [0.99, 0.9999999],
  "m_grid": [20, 50, 100, 200, 500, 1000],
  "reps": 100,
  "n_outer": 20000,
  "seed": 20240817,
  "out_dir": "out/fig4-mip"
})json"},
    {"table3-beam-m100",
     "beam at m = 100: plug-in, basis value, MIL and MIP objectives",
     R"json({
  // reps and mc_n are desk-scale; override e.g. --reps 40 --mc-n 100000
  // to restore full scale.
  "schema_version": 1,
  "problem": "beam",
  "strategies": [
    {"strategy": "plugin"},
    {"strategy": "basis_value"},
    {"strategy": "mil", "confidence": 0.95},
    {"strategy": "mip", "confidence": 0.95}
  ],
  "targets": [0.99865],
  "m_grid": [100],
  "reps": 10,
  "mc_n": 10000,
  "cost_tolerance": 1e-6,
  "seed": 20240817,
  "out_dir": "out/table3-beam-m100"
})json"},
    {"table4-beam-m1000",
     "beam at m = 1000: plug-in, basis value, MIL and MIP objectives",
     R"json({
  "schema_version": 1,
  "problem": "beam",
  "strategies": [
    {"strategy": "plugin"},
    {"strategy": "basis_value"},
    {"strategy": "mil", "confidence": 0.95},
    {"strategy": "mip", "confidence": 0.95}
  ],
  "targets": [0.99865],
  "m_grid": [1000],
  "reps": 10,
  "mc_n": 10000,
  "cost_tolerance": 1e-6,
  "seed": 20240817,
  "out_dir": "out/table4-beam-m1000"
})json"},
    {"table5-exp-bias",
     "exponential threshold: CRI bias versus MIP at the percentile design",
     R"json({
  "schema_version": 1,
  "problem": "exponential",
  "study": "exp_bias",
  "m_grid": [5, 10, 25, 50, 100, 500, 1000],
  "alpha": 0.9,
  "failure_target": 0.01,
  "n_outer": 100000,
  "seed": 20240817,
  "out_dir": "out/table5-exp-bias"
})json"},
    {"appD-variance-balance",
     "variance of the Monte Carlo margin estimate against its analytic counterpart",
     R"json({
  "schema_version": 1,
  "problem": "tension",
  "study": "variance_balance",
  "targets": [0.99],
  "m_grid": [10, 40, 160],
  "n_grid": [1000, 4000, 16000],
  "reps": 200,
  "seed": 20240817,
  "out_dir": "out/appD-variance-balance"
})json"},
};

}  // namespace

const std::vector<Preset>& presets() { return kPresets; }

const Preset* find_preset(const std::string& name) {
    for (const Preset& p : kPresets) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

}  // namespace rbdo
