#include "crx/stream.hpp"

#include <cmath>

namespace crx {

StreamController::StreamController(ControllerLink& link, StreamConfig config)
    : link_(link), config_(std::move(config)) {}

JointVec StreamController::handshake() {
  JointState state;
  try {
    state = link_.read_state();
    link_.write_pr(1, state.q);
    link_.write_r(1, 1);
  } catch (const TransportError& e) {
    throw HandshakeError(std::string("handshake transport failure: ") + e.what());
  } catch (const ProtocolError& e) {
    throw HandshakeError(std::string("handshake rejected: ") + e.what());
  }
  handshake_done_ = true;
  return state.q;
}

ExperimentLog StreamController::stream_setpoint(const JointVec& target, double duration) {
  return stream_reference([&target](double) { return target; }, duration);
}

ExperimentLog StreamController::stream_reference(
    const std::function<JointVec(double)>& ref, double duration) {
  if (!handshake_done_) throw std::logic_error("handshake required before streaming");
  const double period = 1.0 / config_.rate_hz;
  const long cycles = std::lround(duration * config_.rate_hz);
  ExperimentLog log;
  log.rows.reserve(static_cast<size_t>(cycles));
  for (long k = 0; k < cycles; ++k) {
    const double t_rel = static_cast<double>(k) / config_.rate_hz;
    LogRow row;
    row.ovr = override_.load();
    try {
      row.t = link_.now();
      const JointState state = link_.read_state();
      row.cmd = ref(t_rel);
      link_.write_pr(1, row.cmd);
      row.t_cmd = link_.now();
      row.fb = state.q;
      row.vel = state.qd;
    } catch (const TransportError&) {
      log.truncated = true;
      break;
    }
    log.rows.push_back(row);
    if (observer_) observer_(row);
    link_.wait_cycle(period);
  }
  log.late_cycles = link_.late_cycles();
  return log;
}

ExperimentLog StreamController::execute_trajectory(const Trajectory& trajectory,
                                                   const OverrideSchedule& schedule) {
  schedule.validate();
  return execute_trajectory_impl(trajectory, &schedule);
}

ExperimentLog StreamController::execute_trajectory(const Trajectory& trajectory) {
  return execute_trajectory_impl(trajectory, nullptr);
}

ExperimentLog StreamController::execute_trajectory_impl(const Trajectory& trajectory,
                                                        const OverrideSchedule* schedule) {
  if (!handshake_done_) throw std::logic_error("handshake required before streaming");
  trajectory.validate();

  const JointState at_start = link_.read_state();
  const double mismatch = (trajectory.start_pose() - at_start.q).abs().maxCoeff();
  if (mismatch > config_.start_tolerance_deg)
    throw StartPoseError("trajectory start is " + std::to_string(mismatch) +
                         " deg away from the current pose");

  const double period = 1.0 / config_.rate_hz;
  const double t_end = trajectory.end_time();
  ExperimentLog log;
  double s = 0.0;
  for (long k = 0;; ++k) {
    const double t_rel = static_cast<double>(k) / config_.rate_hz;
    const double ovr = schedule ? schedule->value_at(t_rel) : override_.load();
    if (schedule) override_.store(ovr);
    s += ovr * period;
    LogRow row;
    row.ovr = ovr;
    try {
      row.t = link_.now();
      const JointState state = link_.read_state();
      row.cmd = trajectory.sample(s);
      link_.write_pr(1, row.cmd);
      row.t_cmd = link_.now();
      row.fb = state.q;
      row.vel = state.qd;
    } catch (const TransportError&) {
      log.truncated = true;
      break;
    }
    log.rows.push_back(row);
    if (observer_) observer_(row);
    if (s >= t_end - 1e-9) break;  // epsilon absorbs accumulated rounding
    link_.wait_cycle(period);
  }
  log.late_cycles = link_.late_cycles();
  return log;
}

bool StreamController::set_override(double value) {
  if (!(value > 0.0 && value <= 1.0)) return false;
  override_.store(value);
  return true;
}

void StreamController::set_cycle_observer(std::function<void(const LogRow&)> observer) {
  observer_ = std::move(observer);
}

}  // namespace crx
