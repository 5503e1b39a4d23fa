#include "crx/harness.hpp"

#include <cmath>

namespace crx {

namespace {

constexpr double kPi = 3.14159265358979323846;

nlohmann::json tracking_json(const metrics::TrackingMetrics& m) {
  return nlohmann::json{{"mae", m.mae}, {"rmse", m.rmse}, {"max_err", m.max_err}};
}

nlohmann::json lag_json(const metrics::LagEstimate& lag) {
  return nlohmann::json{{"tau_samples", lag.tau_samples},
                        {"tau_seconds", lag.tau_seconds},
                        {"mean_cycle_s", lag.mean_cycle},
                        {"control_freq_hz", lag.control_freq}};
}

}  // namespace

void ExperimentSpec::validate() const {
  if (joint < 1 || joint > kNumJoints)
    throw std::invalid_argument("joint must be in 1.." + std::to_string(kNumJoints));
  if (!(stream_rate > 0.0)) throw std::invalid_argument("stream_rate must be > 0");
  switch (kind) {
    case Kind::kStep:
      if (!std::isfinite(setpoint)) throw std::invalid_argument("setpoint must be finite");
      if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
      break;
    case Kind::kSine:
      if (!(amplitude > 0.0)) throw std::invalid_argument("amplitude must be > 0");
      if (!(frequency > 0.0)) throw std::invalid_argument("frequency must be > 0");
      if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
      break;
    case Kind::kTrajectory:
      trajectory.validate();
      if (has_schedule) schedule.validate();
      break;
    case Kind::kOverride:
      trajectory.validate();
      if (!has_schedule) throw std::invalid_argument("override experiment needs a schedule");
      schedule.validate();
      break;
  }
}

ExperimentLog run_experiment(ControllerLink& link, const ExperimentSpec& spec) {
  spec.validate();
  StreamConfig stream_config;
  stream_config.rate_hz = spec.stream_rate;
  StreamController control(link, stream_config);
  const JointVec pose = control.handshake();
  const int j = spec.joint - 1;

  switch (spec.kind) {
    case ExperimentSpec::Kind::kStep: {
      JointVec target = pose;
      target[j] = spec.setpoint;
      return control.stream_setpoint(target, spec.duration);
    }
    case ExperimentSpec::Kind::kSine: {
      const JointVec base = pose;
      const double amp = spec.amplitude;
      const double omega = 2.0 * kPi * spec.frequency;
      auto ref = [base, j, amp, omega](double t) {
        JointVec q = base;
        q[j] = base[j] + amp * std::sin(omega * t);
        return q;
      };
      return control.stream_reference(ref, spec.duration);
    }
    case ExperimentSpec::Kind::kTrajectory:
    case ExperimentSpec::Kind::kOverride: {
      const JointVec start = spec.trajectory.start_pose();
      const double away = (start - link.read_state().q).abs().maxCoeff();
      if (away > 0.9 * stream_config.start_tolerance_deg) {
        // Approach move: the tracked target holds at the trajectory start
        // long enough for the servo to converge.
        const double move_dur = away / 30.0 + 2.0;
        control.stream_setpoint(start, move_dur);
      }
      if (spec.has_schedule) return control.execute_trajectory(spec.trajectory, spec.schedule);
      return control.execute_trajectory(spec.trajectory);
    }
  }
  throw std::logic_error("unreachable experiment kind");
}

ExperimentLog run_embedded(EmulatorConfig config, const ExperimentSpec& spec) {
  config.clock_mode = ClockMode::kVirtual;
  Emulator emulator(std::move(config));
  EmbeddedLink link(emulator);
  return run_experiment(link, spec);
}

nlohmann::json metrics_report(const ExperimentSpec& spec, const ExperimentLog& log) {
  using namespace metrics;
  if (log.rows.empty()) throw std::invalid_argument("empty log");

  const ArrayXd t = log_times(log);
  const long n = t.size();
  nlohmann::json report;
  report["joint"] = spec.joint;
  report["stream_rate_hz"] = spec.stream_rate;
  report["n_rows"] = n;
  report["duration_s"] = t[n - 1] - t[0];
  if (n >= 2) {
    const CycleStats cs = control_frequency(t);
    report["control"] = {{"mean_cycle_s", cs.mean_cycle},
                         {"cycle_stddev_s", cs.stddev},
                         {"freq_hz", cs.freq_hz}};
  }

  const int j = spec.joint - 1;
  const long max_lag = std::min<long>(spec.max_lag, n / 2 - 1);

  switch (spec.kind) {
    case ExperimentSpec::Kind::kStep: {
      report["kind"] = "step";
      report["setpoint"] = spec.setpoint;
      const ArrayXd fb = log_fb(log, j);
      try {
        const StepMetrics sm = step_metrics(t, fb, spec.setpoint);
        report["step"] = {{"t_r", sm.t_r},       {"T_s", sm.T_s},
                          {"os_pct", sm.os_pct}, {"err_ss", sm.err_ss},
                          {"t_p", sm.t_p},       {"settled", true}};
      } catch (const UnsettledError& e) {
        report["step"] = {{"t_r", e.partial.t_r},       {"T_s", e.partial.T_s},
                          {"os_pct", e.partial.os_pct}, {"err_ss", e.partial.err_ss},
                          {"t_p", e.partial.t_p},       {"settled", false}};
      }
      if (n >= 2)
        report["max_diff_speed"] = differentiate(t, log_fb(log, j)).abs().maxCoeff();
      break;
    }
    case ExperimentSpec::Kind::kSine: {
      report["kind"] = "sine";
      report["amplitude"] = spec.amplitude;
      report["frequency"] = spec.frequency;
      const ArrayXd cmd = log_cmd(log, j);
      const ArrayXd fb = log_fb(log, j);
      report["tracking"] = tracking_json(tracking_errors(cmd, fb));
      if (max_lag >= 1) {
        const PathMetrics pm = path_following_errors(t, cmd, fb, max_lag);
        report["path"] = tracking_json(pm.aligned);
        report["lag"] = lag_json(pm.lag);
      }
      break;
    }
    case ExperimentSpec::Kind::kTrajectory:
    case ExperimentSpec::Kind::kOverride: {
      report["kind"] = spec.kind == ExperimentSpec::Kind::kOverride ? "override" : "trajectory";
      nlohmann::json per_joint = nlohmann::json::array();
      TrackingMetrics worst;
      for (int axis = 0; axis < kNumJoints; ++axis) {
        const TrackingMetrics tm = tracking_errors(log_cmd(log, axis), log_fb(log, axis));
        per_joint.push_back(tracking_json(tm));
        if (tm.max_err > worst.max_err) worst = tm;
      }
      report["tracking_per_joint"] = per_joint;
      report["tracking_worst"] = tracking_json(worst);
      if (max_lag >= 1) {
        const PathMetrics pm =
            path_following_errors(t, log_cmd(log, j), log_fb(log, j), max_lag);
        report["path"] = tracking_json(pm.aligned);
        report["lag"] = lag_json(pm.lag);
      }
      break;
    }
  }
  return report;
}

}  // namespace crx
