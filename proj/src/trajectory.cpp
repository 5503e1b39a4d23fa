#include "crx/trajectory.hpp"

#include <algorithm>
#include <cmath>

namespace crx {

void Trajectory::validate() const {
  if (points.size() < 2) throw std::invalid_argument("trajectory needs at least 2 points");
  if (points.front().t != 0.0) throw std::invalid_argument("trajectory must start at t=0");
  for (size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].t) || !all_finite(points[i].q))
      throw std::invalid_argument("trajectory contains non-finite values");
    if (i > 0 && points[i].t <= points[i - 1].t)
      throw std::invalid_argument("trajectory timestamps must be strictly increasing");
  }
  if (!velocities.empty() && velocities.size() != points.size())
    throw std::invalid_argument("velocities must be empty or match point count");
}

JointVec Trajectory::sample(double s) const {
  if (s <= points.front().t) return points.front().q;
  if (s >= points.back().t) return points.back().q;
  const auto it = std::upper_bound(
      points.begin(), points.end(), s,
      [](double value, const TrajectoryPoint& p) { return value < p.t; });
  const TrajectoryPoint& hi = *it;
  const TrajectoryPoint& lo = *(it - 1);
  const double alpha = (s - lo.t) / (hi.t - lo.t);
  return lo.q + alpha * (hi.q - lo.q);
}

void OverrideSchedule::validate() const {
  if (entries.empty()) throw std::invalid_argument("override schedule is empty");
  if (entries.front().t != 0.0)
    throw std::invalid_argument("override schedule must start at t=0");
  double prev = 0.0;
  for (const auto& e : entries) {
    if (!std::isfinite(e.t) || e.t < prev)
      throw std::invalid_argument("override timestamps must be nondecreasing");
    if (!(e.value > 0.0 && e.value <= 1.0))
      throw std::invalid_argument("override values must lie in (0, 1]");
    prev = e.t;
  }
}

double OverrideSchedule::value_at(double t) const {
  double value = entries.front().value;
  for (const auto& e : entries) {
    if (e.t <= t)
      value = e.value;
    else
      break;
  }
  return value;
}

OverrideSchedule OverrideSchedule::constant(double value) {
  return OverrideSchedule{{OverrideEntry{0.0, value}}};
}

}  // namespace crx
