#pragma once

#include <array>
#include <mutex>
#include <stdexcept>

#include "crx/types.hpp"

namespace crx {

// Controller memory map: numeric registers R[1..200], position registers
// PR[1..100] and digital inputs DI[1..200]. Banks are total over their index
// range; unwritten slots read as 0 / zero pose / false. All accessors are
// individually atomic, so a reader never observes a torn pose.
class RegisterFile {
 public:
  static constexpr int kRCount = 200;
  static constexpr int kPrCount = 100;
  static constexpr int kDiCount = 200;

  RegisterFile();

  static bool valid_r_index(int index) { return index >= 1 && index <= kRCount; }
  static bool valid_pr_index(int index) { return index >= 1 && index <= kPrCount; }
  static bool valid_di_index(int index) { return index >= 1 && index <= kDiCount; }

  int32_t read_r(int index) const;
  void write_r(int index, int32_t value);

  JointVec read_pr(int index) const;
  // Rejects non-finite poses so downstream consumers only ever see valid targets.
  void write_pr(int index, const JointVec& pose);

  bool read_di(int index) const;
  void write_di(int index, bool value);

 private:
  mutable std::mutex mutex_;
  std::array<int32_t, kRCount> r_{};
  std::array<JointVec, kPrCount> pr_{};
  std::array<bool, kDiCount> di_{};
};

}  // namespace crx
