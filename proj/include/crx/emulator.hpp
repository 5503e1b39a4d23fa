#pragma once

#include <atomic>
#include <deque>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "crx/latency_queue.hpp"
#include "crx/register_file.hpp"
#include "crx/types.hpp"

namespace crx {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ClockMode { kVirtual, kRealtime };

// Controller model parameters. Joint limits and gains are per joint; the
// shipped values come from the bundled calibration run (see the calibrate
// tool) and reproduce the reference step/tracking behaviour.
struct EmulatorConfig {
  JointVec kp = JointVec::Constant(8.0);      // proportional gain, 1/s
  JointVec vmax = JointVec::Constant(60.0);   // velocity limit, deg/s
  JointVec amax = JointVec::Constant(875.0);  // acceleration limit, deg/s^2
  double command_latency = 0.16;              // s, write -> servo visibility
  double feedback_latency = 0.0;              // s, servo -> state poll visibility
  double tick_rate = 250.0;                   // Hz
  JointVec home_pose = JointVec::Zero();      // deg
  ClockMode clock_mode = ClockMode::kVirtual;

  double dt() const { return 1.0 / tick_rate; }
  void validate() const;  // throws ConfigError
};

// Program phases: INIT only exists before the first reset, WAIT holds until
// the run flag R[1] is raised, TRACK servos toward the streamed target.
enum class TpPhase { kInit, kWait, kTrack };

// Emulated controller: a register-mapped program loop plus a per-joint
// velocity/acceleration-limited proportional servo.
//
// Commands written to the register file (PR[1] targets, R[1] run flag, R[2]
// gripper) reach the motion loop through a single in-order channel delayed by
// command_latency, mirroring the transport path of the real controller.
// Feedback read through state() is delayed by feedback_latency.
class Emulator {
 public:
  explicit Emulator(EmulatorConfig config);
  ~Emulator();

  Emulator(const Emulator&) = delete;
  Emulator& operator=(const Emulator&) = delete;

  // Restarts the program: run flag cleared, WAIT phase, joints at home with
  // zero velocity, pending delayed commands dropped. Idempotent.
  void tp_reset();

  // Advances one servo period (virtual clock). Returns the true, undelayed
  // state at the end of the period.
  JointState tick();
  void step(long ticks);

  // Self-ticking wall-clock loop (clock_mode must be kRealtime).
  void start();
  void stop();

  double sim_time() const;
  long tick_count() const;
  TpPhase phase() const;

  // Undelayed state, for inspection and tests.
  JointState true_state() const;
  // Feedback-delayed state, what a READ_STATE poll reports.
  JointState state() const;

  // Per-tick state trace CSV: t,q1..q6,qd1..qd6,phase.
  void start_trace(const std::string& path);
  void stop_trace();

  RegisterFile& registers() { return registers_; }
  const EmulatorConfig& config() const { return config_; }

 private:
  struct CommandEvent {
    enum class Kind { kTarget, kRunFlag, kGripper };
    Kind kind = Kind::kTarget;
    int32_t value = 0;
    JointVec pose = JointVec::Zero();
  };

  JointState tick_locked();
  void poll_registers_locked(double now);
  void push_feedback_locked(const JointState& s);
  void trace_locked(const JointState& s);

  EmulatorConfig config_;
  RegisterFile registers_;

  mutable std::mutex mutex_;
  TpPhase phase_ = TpPhase::kInit;
  long ticks_ = 0;
  JointVec q_ = JointVec::Zero();
  JointVec v_ = JointVec::Zero();
  JointVec latched_target_ = JointVec::Zero();
  int32_t run_flag_ = 0;  // delayed view of R[1]
  JointVec last_pr_seen_ = JointVec::Zero();
  int32_t last_r1_seen_ = 0;
  int32_t last_r2_seen_ = 0;
  LatencyQueue<CommandEvent> command_channel_;
  std::deque<JointState> feedback_;

  std::ofstream trace_;

  std::thread rt_thread_;
  std::atomic<bool> rt_running_{false};
};

}  // namespace crx
