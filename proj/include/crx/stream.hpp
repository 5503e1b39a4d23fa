#pragma once

#include <atomic>
#include <functional>
#include <stdexcept>
#include <vector>

#include "crx/link.hpp"
#include "crx/trajectory.hpp"
#include "crx/types.hpp"

namespace crx {

class HandshakeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Trajectory start pose too far from the current feedback pose.
class StartPoseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One row per control cycle: cycle time, command send time, commanded pose,
// feedback pose/velocity sampled at the cycle start, and the active override.
struct LogRow {
  double t = 0.0;
  double t_cmd = 0.0;
  JointVec cmd = JointVec::Zero();
  JointVec fb = JointVec::Zero();
  JointVec vel = JointVec::Zero();
  double ovr = 1.0;
};

struct ExperimentLog {
  std::vector<LogRow> rows;
  bool truncated = false;  // transport lost mid-run
  long late_cycles = 0;
};

struct StreamConfig {
  double rate_hz = 25.0;               // command cycle rate
  double start_tolerance_deg = 0.5;    // trajectory start-pose gate
};

// Client-side streaming interface: performs the run-flag handshake, then
// writes one PR[1] target per cycle while sampling feedback. Commands are
// passed through unclamped; joint limits are the controller's concern and
// show up only in the feedback.
class StreamController {
 public:
  explicit StreamController(ControllerLink& link, StreamConfig config = {});

  // Reads the current pose, seeds PR[1] with it, then raises R[1]. On any
  // failure R[1] is left untouched. Returns the pose read.
  JointVec handshake();

  // Streams a fixed target for `duration`, sampling feedback every cycle.
  ExperimentLog stream_setpoint(const JointVec& target, double duration);

  // Streams ref(t) with t the time since the stream started.
  ExperimentLog stream_reference(const std::function<JointVec(double)>& ref,
                                 double duration);

  // Executes a trajectory under the schedule: every cycle scaled time
  // advances by override*dt and the interpolated pose is commanded. Completes
  // once scaled time reaches the trajectory end.
  ExperimentLog execute_trajectory(const Trajectory& trajectory,
                                   const OverrideSchedule& schedule);
  // Same, with the override driven only by set_override (initially 1.0).
  ExperimentLog execute_trajectory(const Trajectory& trajectory);

  // Live override setter, callable from any thread; takes effect at the next
  // cycle boundary. Values outside (0, 1] are rejected and the previous value
  // kept. Ignored while a schedule is driving.
  bool set_override(double value);
  double override_value() const { return override_.load(); }

  // Invoked once per cycle with the row just logged (virtual or real time).
  void set_cycle_observer(std::function<void(const LogRow&)> observer);

  bool handshake_done() const { return handshake_done_; }

 private:
  ExperimentLog execute_trajectory_impl(const Trajectory& trajectory,
                                        const OverrideSchedule* schedule);

  ControllerLink& link_;
  StreamConfig config_;
  std::atomic<double> override_{1.0};
  std::function<void(const LogRow&)> observer_;
  bool handshake_done_ = false;
};

}  // namespace crx
