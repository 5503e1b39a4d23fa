#pragma once

#include <map>
#include <string>
#include <vector>

#include "crx/emulator.hpp"
#include "crx/harness.hpp"

namespace crx {

struct StepTarget {
  double setpoint = 0.0;  // deg
  double t_r = 0.0;       // s
  double T_s = 0.0;       // s
};

struct SineTarget {
  double frequency = 0.0;  // Hz
  double mae = 0.0;        // deg
};

// Fitting targets for the emulator parameters. reference() returns the
// measured step/tracking/delay figures the shipped defaults reproduce.
struct CalibrationTargets {
  std::vector<StepTarget> steps;
  std::vector<SineTarget> sines;
  double lag_seconds = 0.31;
  double amplitude = 30.0;
  int joint = 1;
  double step_duration = 5.0;
  double sine_duration = 30.0;
  double stream_rate = 25.0;
  long max_lag = 25;

  static CalibrationTargets reference();
};

// Search space: coarse grid over (kp, amax, latency) at a fixed initial vmax,
// then coordinate descent over all four parameters.
struct CalibrationGrid {
  std::vector<double> kp;
  std::vector<double> amax;
  std::vector<double> latency;
  double vmax0 = 60.0;
  int descent_rounds = 10;

  static CalibrationGrid reference();
  static CalibrationGrid quick();
};

struct CalibrationResult {
  EmulatorConfig best;
  double objective = 0.0;
  std::map<std::string, double> residuals;  // relative residual per target
};

// Sum of squared relative residuals over every target; unsettled responses
// score a large penalty.
double calibration_objective(const EmulatorConfig& config,
                             const CalibrationTargets& targets);

// Deterministic grid sweep + coordinate descent. Throws on an empty grid.
CalibrationResult calibrate(const CalibrationTargets& targets,
                            const CalibrationGrid& grid);

}  // namespace crx
