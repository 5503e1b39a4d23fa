#pragma once

#include <deque>
#include <optional>
#include <stdexcept>
#include <utility>

namespace crx {

// FIFO of timestamped values; an entry becomes visible once `now` reaches its
// visible_at time. Insertion times must be nondecreasing.
template <typename T>
class LatencyQueue {
 public:
  void push(double visible_at, T value) {
    if (!entries_.empty() && visible_at < entries_.back().first)
      throw std::logic_error("LatencyQueue visible_at must be nondecreasing");
    entries_.emplace_back(visible_at, std::move(value));
  }

  // Pops every entry with visible_at <= now, returning the last one popped.
  std::optional<T> pop_visible(double now) {
    std::optional<T> latest;
    while (!entries_.empty() && entries_.front().first <= now) {
      latest = std::move(entries_.front().second);
      entries_.pop_front();
    }
    return latest;
  }

  // Pops at most one visible entry, preserving intermediate values.
  std::optional<T> pop_one_visible(double now) {
    if (entries_.empty() || entries_.front().first > now) return std::nullopt;
    T value = std::move(entries_.front().second);
    entries_.pop_front();
    return value;
  }

  bool empty() const { return entries_.empty(); }
  size_t size() const { return entries_.size(); }
  void clear() { entries_.clear(); }

 private:
  std::deque<std::pair<double, T>> entries_;
};

}  // namespace crx
