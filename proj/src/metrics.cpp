#include "crx/metrics.hpp"

#include <cmath>
#include <limits>

namespace crx::metrics {

namespace {

long first_index(const Eigen::Array<bool, Eigen::Dynamic, 1>& mask) {
  for (long i = 0; i < mask.size(); ++i)
    if (mask[i]) return i;
  return -1;
}

}  // namespace

StepMetrics step_metrics(const ArrayXd& t, const ArrayXd& fb, double setpoint,
                         const StepConventions& conv) {
  const long n = t.size();
  if (n < 1 || fb.size() != n)
    throw std::invalid_argument("step_metrics needs equal-length nonempty series");

  const ArrayXd tt = t - t[0];
  const double amp = setpoint - fb[0];
  StepMetrics m;

  const long window = std::max<long>(1, static_cast<long>(
      std::ceil(conv.ss_window * static_cast<double>(n))));
  m.err_ss = (fb.tail(window) - setpoint).abs().mean();

  if (amp == 0.0) {
    // Already at the target; all indicators collapse to the origin provided
    // the response stays there.
    if ((fb - setpoint).abs().maxCoeff() > 0.0)
      throw UnsettledError("zero-amplitude step with nonzero error", m);
    return m;
  }

  const double dir = amp > 0.0 ? 1.0 : -1.0;
  const ArrayXd prog = (fb - fb[0]) / amp;

  const double over = ((fb - setpoint) * dir).maxCoeff();
  m.os_pct = std::max(0.0, over / std::abs(amp) * 100.0);

  const long i10 = first_index(prog >= conv.rise_lo);
  const long i90 = first_index(prog >= conv.rise_hi);
  if (i90 < 0) {
    throw UnsettledError("response never reached the rise threshold", m);
  }
  m.t_r = tt[i90] - tt[i10];

  const double band = conv.settle_band * std::abs(amp);
  const ArrayXd err = (fb - setpoint).abs();
  long last_outside = -1;
  for (long i = n - 1; i >= 0; --i) {
    if (err[i] > band) {
      last_outside = i;
      break;
    }
  }
  if (last_outside == n - 1)
    throw UnsettledError("response never settled inside the band", m);
  m.T_s = last_outside < 0 ? 0.0 : tt[last_outside + 1];

  if (m.os_pct > 0.0) {
    long peak = 0;
    ((fb - setpoint) * dir).maxCoeff(&peak);
    m.t_p = tt[peak];
  } else {
    const long entry = first_index(err <= conv.peak_band * std::abs(amp));
    if (entry >= 0) {
      m.t_p = tt[entry];
    } else {
      long closest = 0;
      err.minCoeff(&closest);
      m.t_p = tt[closest];
    }
  }
  return m;
}

TrackingMetrics tracking_errors(const ArrayXd& cmd, const ArrayXd& fb) {
  if (cmd.size() < 1 || cmd.size() != fb.size())
    throw std::invalid_argument("tracking_errors needs equal-length nonempty series");
  const ArrayXd err = (fb - cmd).abs();
  TrackingMetrics m;
  m.mae = err.mean();
  m.rmse = std::sqrt(err.square().mean());
  m.max_err = err.maxCoeff();
  return m;
}

LagEstimate xcorr_lag(const ArrayXd& t, const ArrayXd& cmd, const ArrayXd& fb,
                      long max_lag) {
  const long n = t.size();
  if (cmd.size() != n || fb.size() != n)
    throw std::invalid_argument("xcorr_lag needs equal-length series");
  if (n < 2) throw std::invalid_argument("xcorr_lag needs at least 2 samples");
  if (max_lag < 0 || max_lag >= n / 2)
    throw std::invalid_argument("max_lag must lie in [0, n/2)");

  double best = -std::numeric_limits<double>::infinity();
  long best_tau = -1;
  for (long tau = 0; tau <= max_lag; ++tau) {
    const long m = n - tau;
    const ArrayXd a = cmd.head(m) - cmd.head(m).mean();
    const ArrayXd b = fb.segment(tau, m) - fb.segment(tau, m).mean();
    const double na = std::sqrt(a.square().sum());
    const double nb = std::sqrt(b.square().sum());
    if (na == 0.0 || nb == 0.0) continue;
    const double r = (a * b).sum() / (na * nb);
    if (r > best) {
      best = r;
      best_tau = tau;
    }
  }
  if (best_tau < 0)
    throw UndefinedLagError("lag undefined: signals have no variation");

  LagEstimate lag;
  lag.tau_samples = best_tau;
  lag.mean_cycle = (t[n - 1] - t[0]) / static_cast<double>(n - 1);
  lag.tau_seconds = static_cast<double>(best_tau) * lag.mean_cycle;
  lag.control_freq = 1.0 / lag.mean_cycle;
  return lag;
}

PathMetrics path_following_errors(const ArrayXd& t, const ArrayXd& cmd,
                                  const ArrayXd& fb, long max_lag) {
  PathMetrics out;
  out.lag = xcorr_lag(t, cmd, fb, max_lag);
  const long m = t.size() - out.lag.tau_samples;
  out.aligned = tracking_errors(cmd.head(m), fb.segment(out.lag.tau_samples, m));
  return out;
}

CycleStats control_frequency(const ArrayXd& t) {
  const long n = t.size();
  if (n < 2) throw std::invalid_argument("control_frequency needs at least 2 samples");
  const ArrayXd dt = t.tail(n - 1) - t.head(n - 1);
  if ((dt <= 0.0).any())
    throw std::invalid_argument("timestamps must be strictly increasing");
  CycleStats s;
  s.mean_cycle = (t[n - 1] - t[0]) / static_cast<double>(n - 1);
  s.stddev = std::sqrt((dt - s.mean_cycle).square().mean());
  s.freq_hz = 1.0 / s.mean_cycle;
  return s;
}

ArrayXd log_times(const ExperimentLog& log) {
  ArrayXd t(static_cast<long>(log.rows.size()));
  for (long i = 0; i < t.size(); ++i) t[i] = log.rows[static_cast<size_t>(i)].t;
  return t;
}

ArrayXd log_cmd(const ExperimentLog& log, int joint) {
  ArrayXd x(static_cast<long>(log.rows.size()));
  for (long i = 0; i < x.size(); ++i) x[i] = log.rows[static_cast<size_t>(i)].cmd[joint];
  return x;
}

ArrayXd log_fb(const ExperimentLog& log, int joint) {
  ArrayXd x(static_cast<long>(log.rows.size()));
  for (long i = 0; i < x.size(); ++i) x[i] = log.rows[static_cast<size_t>(i)].fb[joint];
  return x;
}

ArrayXd log_vel(const ExperimentLog& log, int joint) {
  ArrayXd x(static_cast<long>(log.rows.size()));
  for (long i = 0; i < x.size(); ++i) x[i] = log.rows[static_cast<size_t>(i)].vel[joint];
  return x;
}

ArrayXd differentiate(const ArrayXd& t, const ArrayXd& x) {
  const long n = t.size();
  if (x.size() != n || n < 2)
    throw std::invalid_argument("differentiate needs equal-length series, n >= 2");
  ArrayXd d(n);
  d[0] = (x[1] - x[0]) / (t[1] - t[0]);
  d[n - 1] = (x[n - 1] - x[n - 2]) / (t[n - 1] - t[n - 2]);
  for (long i = 1; i < n - 1; ++i) d[i] = (x[i + 1] - x[i - 1]) / (t[i + 1] - t[i - 1]);
  return d;
}

StepMetrics step_metrics(const ExperimentLog& log, int joint, double setpoint,
                         const StepConventions& conv) {
  return step_metrics(log_times(log), log_fb(log, joint), setpoint, conv);
}

}  // namespace crx::metrics
