#include "crx/calibrate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace crx {

namespace {

constexpr double kUnsettledPenalty = 1e9;

EmulatorConfig make_config(double kp, double vmax, double amax, double latency) {
  EmulatorConfig cfg;
  cfg.kp = JointVec::Constant(kp);
  cfg.vmax = JointVec::Constant(vmax);
  cfg.amax = JointVec::Constant(amax);
  cfg.command_latency = latency;
  return cfg;
}

struct Params {
  double kp, vmax, amax, latency;
};

double relative_residual(double value, double target) {
  return (value - target) / target;
}

}  // namespace

CalibrationTargets CalibrationTargets::reference() {
  CalibrationTargets t;
  t.steps = {{30.0, 0.51, 0.90}, {45.0, 0.64, 1.10}, {90.0, 1.22, 1.79}};
  t.sines = {{0.10, 3.72}, {0.25, 7.77}, {0.50, 18.26}};
  t.lag_seconds = 0.31;
  return t;
}

CalibrationGrid CalibrationGrid::reference() {
  CalibrationGrid g;
  g.kp = {9.0, 10.0, 11.0, 12.0};
  g.amax = {500.0, 600.0, 700.0};
  g.latency = {0.16, 0.18, 0.20, 0.22};
  return g;
}

CalibrationGrid CalibrationGrid::quick() {
  CalibrationGrid g;
  g.kp = {8.0, 10.0};
  g.amax = {600.0};
  g.latency = {0.16, 0.20};
  g.descent_rounds = 2;
  return g;
}

double calibration_objective(const EmulatorConfig& config,
                             const CalibrationTargets& targets) {
  using namespace metrics;
  double obj = 0.0;

  for (const auto& st : targets.steps) {
    ExperimentSpec spec;
    spec.kind = ExperimentSpec::Kind::kStep;
    spec.joint = targets.joint;
    spec.setpoint = st.setpoint;
    spec.duration = targets.step_duration;
    spec.stream_rate = targets.stream_rate;
    const ExperimentLog log = run_embedded(config, spec);
    try {
      const StepMetrics m = step_metrics(log, targets.joint - 1, st.setpoint);
      obj += std::pow(relative_residual(m.t_r, st.t_r), 2);
      obj += std::pow(relative_residual(m.T_s, st.T_s), 2);
    } catch (const UnsettledError&) {
      return kUnsettledPenalty;
    }
  }

  for (const auto& sn : targets.sines) {
    ExperimentSpec spec;
    spec.kind = ExperimentSpec::Kind::kSine;
    spec.joint = targets.joint;
    spec.amplitude = targets.amplitude;
    spec.frequency = sn.frequency;
    spec.duration = targets.sine_duration;
    spec.stream_rate = targets.stream_rate;
    spec.max_lag = targets.max_lag;
    const ExperimentLog log = run_embedded(config, spec);
    const int j = targets.joint - 1;
    const ArrayXd t = log_times(log);
    const ArrayXd cmd = log_cmd(log, j);
    const ArrayXd fb = log_fb(log, j);
    obj += std::pow(relative_residual(tracking_errors(cmd, fb).mae, sn.mae), 2);
    // Only the low-frequency runs carry delay information; the saturated run
    // does not correlate cleanly.
    if (sn.frequency <= 0.26) {
      try {
        const LagEstimate lag = xcorr_lag(t, cmd, fb, targets.max_lag);
        obj += std::pow(relative_residual(lag.tau_seconds, targets.lag_seconds), 2);
      } catch (const UndefinedLagError&) {
        return kUnsettledPenalty;
      }
    }
  }
  return obj;
}

CalibrationResult calibrate(const CalibrationTargets& targets,
                            const CalibrationGrid& grid) {
  if (grid.kp.empty() || grid.amax.empty() || grid.latency.empty())
    throw std::invalid_argument("calibration grid is empty");

  auto evaluate = [&](const Params& p) {
    return calibration_objective(make_config(p.kp, p.vmax, p.amax, p.latency), targets);
  };

  Params best{grid.kp.front(), grid.vmax0, grid.amax.front(), grid.latency.front()};
  double best_obj = std::numeric_limits<double>::infinity();
  for (double kp : grid.kp) {
    for (double amax : grid.amax) {
      for (double latency : grid.latency) {
        const Params p{kp, grid.vmax0, amax, latency};
        const double obj = evaluate(p);
        if (obj < best_obj) {
          best_obj = obj;
          best = p;
        }
      }
    }
  }

  // Coordinate descent with halving steps around the grid winner.
  double steps[4] = {1.0, 2.0, 100.0, 0.02};
  const double lo[4] = {2.0, 40.0, 100.0, 0.0};
  const double hi[4] = {30.0, 80.0, 2000.0, 0.6};
  auto get = [](Params& p, int i) -> double& {
    switch (i) {
      case 0: return p.kp;
      case 1: return p.vmax;
      case 2: return p.amax;
      default: return p.latency;
    }
  };
  for (int round = 0; round < grid.descent_rounds; ++round) {
    bool improved = false;
    for (int i = 0; i < 4; ++i) {
      for (double sign : {+1.0, -1.0}) {
        Params cand = best;
        double& v = get(cand, i);
        v = std::clamp(v + sign * steps[i], lo[i], hi[i]);
        if (v == get(best, i)) continue;
        const double obj = evaluate(cand);
        if (obj < best_obj - 1e-12) {
          best = cand;
          best_obj = obj;
          improved = true;
        }
      }
    }
    if (!improved)
      for (double& s : steps) s /= 2.0;
    if (std::max(steps[0] / 1.0, steps[3] / 0.02) < 0.2) break;
  }

  CalibrationResult result;
  result.best = make_config(best.kp, best.vmax, best.amax, best.latency);
  result.objective = best_obj;

  // Record per-target residuals for the winning parameters.
  using namespace metrics;
  for (const auto& st : targets.steps) {
    ExperimentSpec spec;
    spec.kind = ExperimentSpec::Kind::kStep;
    spec.joint = targets.joint;
    spec.setpoint = st.setpoint;
    spec.duration = targets.step_duration;
    spec.stream_rate = targets.stream_rate;
    const ExperimentLog log = run_embedded(result.best, spec);
    try {
      const StepMetrics m = step_metrics(log, targets.joint - 1, st.setpoint);
      const std::string key = "step" + std::to_string(static_cast<int>(st.setpoint));
      result.residuals[key + "_t_r"] = relative_residual(m.t_r, st.t_r);
      result.residuals[key + "_T_s"] = relative_residual(m.T_s, st.T_s);
    } catch (const UnsettledError&) {
      result.residuals["step" + std::to_string(static_cast<int>(st.setpoint))] =
          kUnsettledPenalty;
    }
  }
  for (const auto& sn : targets.sines) {
    ExperimentSpec spec;
    spec.kind = ExperimentSpec::Kind::kSine;
    spec.joint = targets.joint;
    spec.amplitude = targets.amplitude;
    spec.frequency = sn.frequency;
    spec.duration = targets.sine_duration;
    spec.stream_rate = targets.stream_rate;
    spec.max_lag = targets.max_lag;
    const ExperimentLog log = run_embedded(result.best, spec);
    const int j = targets.joint - 1;
    const ArrayXd t = log_times(log);
    const ArrayXd cmd = log_cmd(log, j);
    const ArrayXd fb = log_fb(log, j);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "sine%.2f", sn.frequency);
    result.residuals[std::string(buf) + "_mae"] =
        relative_residual(tracking_errors(cmd, fb).mae, sn.mae);
    if (sn.frequency <= 0.26) {
      const LagEstimate lag = xcorr_lag(t, cmd, fb, targets.max_lag);
      result.residuals[std::string(buf) + "_lag"] =
          relative_residual(lag.tau_seconds, targets.lag_seconds);
    }
  }
  return result;
}

}  // namespace crx
