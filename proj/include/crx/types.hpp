#pragma once

#include <Eigen/Dense>

namespace crx {

inline constexpr int kNumJoints = 6;

// Joint-space quantities are coefficient-wise arrays of degrees (or deg/s),
// one entry per axis J1..J6.
using JointVec = Eigen::Array<double, kNumJoints, 1>;

// Snapshot of the simulated axis group at time t.
struct JointState {
  double t = 0.0;                   // s
  JointVec q = JointVec::Zero();    // deg
  JointVec qd = JointVec::Zero();   // deg/s
};

inline bool all_finite(const JointVec& v) { return v.isFinite().all(); }

}  // namespace crx
