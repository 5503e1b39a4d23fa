#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "crx/stream.hpp"

namespace crx::metrics {

using Eigen::ArrayXd;

// Step response indicators. Times are relative to the first sample.
struct StepMetrics {
  double t_r = 0.0;     // 10% -> 90% rise time, s
  double T_s = 0.0;     // 2%-band settling time, s
  double os_pct = 0.0;  // overshoot, percent of amplitude
  double err_ss = 0.0;  // mean |fb - sp| over the final window, deg
  double t_p = 0.0;     // peak time (or set-point entry time when no overshoot), s
};

// Convention parameters; defaults are the common control-engineering choices.
struct StepConventions {
  double rise_lo = 0.10;
  double rise_hi = 0.90;
  double settle_band = 0.02;    // fraction of amplitude
  double ss_window = 0.10;      // trailing fraction of samples for err_ss
  double peak_band = 0.001;     // set-point entry band when no overshoot
};

// Thrown when the response never reaches or never holds the target bands;
// carries whatever indicators were computable.
class UnsettledError : public std::runtime_error {
 public:
  UnsettledError(const std::string& what, StepMetrics partial)
      : std::runtime_error(what), partial(partial) {}
  StepMetrics partial;
};

struct TrackingMetrics {
  double mae = 0.0;
  double rmse = 0.0;
  double max_err = 0.0;
};

struct LagEstimate {
  long tau_samples = 0;
  double tau_seconds = 0.0;
  double mean_cycle = 0.0;   // s
  double control_freq = 0.0; // Hz
};

struct PathMetrics {
  TrackingMetrics aligned;
  LagEstimate lag;
};

struct CycleStats {
  double mean_cycle = 0.0;    // s
  double stddev = 0.0;        // s
  double freq_hz = 0.0;
};

class UndefinedLagError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

StepMetrics step_metrics(const ArrayXd& t, const ArrayXd& fb, double setpoint,
                         const StepConventions& conv = {});

// MAE / RMSE / max of |fb - cmd| over equal-length series.
TrackingMetrics tracking_errors(const ArrayXd& cmd, const ArrayXd& fb);

// Delay between command and feedback: the nonnegative integer shift that
// maximizes the normalized cross-correlation of the mean-removed overlapping
// segments. Ties resolve to the smallest shift. Seconds are derived from the
// mean cycle time of `t`.
LagEstimate xcorr_lag(const ArrayXd& t, const ArrayXd& cmd, const ArrayXd& fb,
                      long max_lag);

// Tracking errors recomputed on the lag-aligned overlap cmd[i] vs fb[i+tau*].
PathMetrics path_following_errors(const ArrayXd& t, const ArrayXd& cmd,
                                  const ArrayXd& fb, long max_lag);

CycleStats control_frequency(const ArrayXd& t);

// Column extraction from an experiment log; `joint` is 0-based.
ArrayXd log_times(const ExperimentLog& log);
ArrayXd log_cmd(const ExperimentLog& log, int joint);
ArrayXd log_fb(const ExperimentLog& log, int joint);
ArrayXd log_vel(const ExperimentLog& log, int joint);

// Central-difference velocity of x(t) (one-sided at the ends).
ArrayXd differentiate(const ArrayXd& t, const ArrayXd& x);

// Step metrics straight from a log: feedback of `joint` against `setpoint`.
StepMetrics step_metrics(const ExperimentLog& log, int joint, double setpoint,
                         const StepConventions& conv = {});

}  // namespace crx::metrics
