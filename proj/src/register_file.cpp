#include "crx/register_file.hpp"

namespace crx {

RegisterFile::RegisterFile() {
  for (auto& pose : pr_) pose = JointVec::Zero();
}

int32_t RegisterFile::read_r(int index) const {
  if (!valid_r_index(index)) throw std::out_of_range("R index out of range");
  std::lock_guard lock(mutex_);
  return r_[static_cast<size_t>(index - 1)];
}

void RegisterFile::write_r(int index, int32_t value) {
  if (!valid_r_index(index)) throw std::out_of_range("R index out of range");
  std::lock_guard lock(mutex_);
  r_[static_cast<size_t>(index - 1)] = value;
}

JointVec RegisterFile::read_pr(int index) const {
  if (!valid_pr_index(index)) throw std::out_of_range("PR index out of range");
  std::lock_guard lock(mutex_);
  return pr_[static_cast<size_t>(index - 1)];
}

void RegisterFile::write_pr(int index, const JointVec& pose) {
  if (!valid_pr_index(index)) throw std::out_of_range("PR index out of range");
  if (!all_finite(pose)) throw std::invalid_argument("PR pose must be finite");
  std::lock_guard lock(mutex_);
  pr_[static_cast<size_t>(index - 1)] = pose;
}

bool RegisterFile::read_di(int index) const {
  if (!valid_di_index(index)) throw std::out_of_range("DI index out of range");
  std::lock_guard lock(mutex_);
  return di_[static_cast<size_t>(index - 1)];
}

void RegisterFile::write_di(int index, bool value) {
  if (!valid_di_index(index)) throw std::out_of_range("DI index out of range");
  std::lock_guard lock(mutex_);
  di_[static_cast<size_t>(index - 1)] = value;
}

}  // namespace crx
