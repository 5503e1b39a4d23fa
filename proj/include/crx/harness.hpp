#pragma once

#include <json.hpp>

#include "crx/emulator.hpp"
#include "crx/link.hpp"
#include "crx/metrics.hpp"
#include "crx/stream.hpp"
#include "crx/trajectory.hpp"

namespace crx {

// One of the four canned experiment kinds: a joint step, a streamed sine
// reference, a trajectory execution, or a trajectory execution under a speed
// override schedule.
struct ExperimentSpec {
  enum class Kind { kStep, kSine, kTrajectory, kOverride };

  Kind kind = Kind::kStep;
  int joint = 1;              // 1-based axis index
  double setpoint = 30.0;     // step target, deg (absolute joint angle)
  double amplitude = 30.0;    // sine amplitude, deg
  double frequency = 0.1;     // sine frequency, Hz
  Trajectory trajectory;      // kTrajectory / kOverride
  OverrideSchedule schedule;  // kOverride (optional for kTrajectory)
  bool has_schedule = false;
  double duration = 5.0;      // step/sine run length, s
  double stream_rate = 25.0;  // Hz
  long max_lag = 25;          // lag search window, samples

  void validate() const;  // throws std::invalid_argument
};

// Handshakes, approaches the trajectory start pose when necessary, then runs
// the experiment and returns its log.
ExperimentLog run_experiment(ControllerLink& link, const ExperimentSpec& spec);

// Deterministic in-process run against a virtual-clock emulator.
ExperimentLog run_embedded(EmulatorConfig config, const ExperimentSpec& spec);

// Metrics report for the experiment. Depends only on the spec parameters and
// the log rows, so re-analysis of the written CSV reproduces it byte for byte.
nlohmann::json metrics_report(const ExperimentSpec& spec, const ExperimentLog& log);

}  // namespace crx
