#pragma once

#include <stdexcept>
#include <vector>

#include "crx/types.hpp"

namespace crx {

struct TrajectoryPoint {
  double t = 0.0;  // s, relative to trajectory start
  JointVec q = JointVec::Zero();
};

// Timestamped waypoint list, sampled by linear interpolation. Timestamps are
// strictly increasing starting at zero.
struct Trajectory {
  std::vector<TrajectoryPoint> points;
  std::vector<JointVec> velocities;  // optional; empty or one per point

  void validate() const;  // throws std::invalid_argument
  double end_time() const { return points.back().t; }
  const JointVec& start_pose() const { return points.front().q; }

  // Linear interpolation at scaled time s, clamped to the endpoints.
  JointVec sample(double s) const;
};

struct OverrideEntry {
  double t = 0.0;      // s
  double value = 1.0;  // fraction in (0, 1]
};

// Piecewise-constant speed override profile; the entry in force at time t is
// the last one with entry.t <= t.
struct OverrideSchedule {
  std::vector<OverrideEntry> entries;

  void validate() const;  // throws std::invalid_argument
  double value_at(double t) const;
  static OverrideSchedule constant(double value);
};

}  // namespace crx
