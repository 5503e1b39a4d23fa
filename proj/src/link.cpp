#include "crx/link.hpp"

#include <cmath>
#include <thread>

namespace crx {

EmbeddedLink::EmbeddedLink(Emulator& emulator) : emulator_(emulator) {
  done_ticks_ = emulator_.tick_count();
  target_ticks_ = static_cast<double>(done_ticks_);
}

int32_t EmbeddedLink::read_r(int index) { return emulator_.registers().read_r(index); }
void EmbeddedLink::write_r(int index, int32_t value) {
  emulator_.registers().write_r(index, value);
}
JointVec EmbeddedLink::read_pr(int index) { return emulator_.registers().read_pr(index); }
void EmbeddedLink::write_pr(int index, const JointVec& pose) {
  emulator_.registers().write_pr(index, pose);
}
bool EmbeddedLink::read_di(int index) { return emulator_.registers().read_di(index); }
void EmbeddedLink::write_di(int index, bool value) {
  emulator_.registers().write_di(index, value);
}
JointState EmbeddedLink::read_state() { return emulator_.state(); }

void EmbeddedLink::wait_cycle(double period) {
  // Accumulate the ideal tick position so non-divisible rates carry the
  // fractional remainder instead of drifting.
  target_ticks_ += period * emulator_.config().tick_rate;
  const long want = std::lround(target_ticks_);
  if (want > done_ticks_) {
    emulator_.step(want - done_ticks_);
    done_ticks_ = want;
  }
}

double EmbeddedLink::now() { return emulator_.sim_time(); }

TcpLink::TcpLink(const std::string& host, uint16_t port, std::chrono::milliseconds timeout)
    : client_(host, port, timeout), start_(std::chrono::steady_clock::now()) {}

int32_t TcpLink::read_r(int index) { return client_.read_r(index); }
void TcpLink::write_r(int index, int32_t value) { client_.write_r(index, value); }
JointVec TcpLink::read_pr(int index) { return client_.read_pr(index); }
void TcpLink::write_pr(int index, const JointVec& pose) { client_.write_pr(index, pose); }
bool TcpLink::read_di(int index) { return client_.read_di(index); }
void TcpLink::write_di(int index, bool value) { client_.write_di(index, value); }
JointState TcpLink::read_state() { return client_.read_state(); }

void TcpLink::wait_cycle(double period) {
  const auto now_tp = std::chrono::steady_clock::now();
  const auto step = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(period));
  if (!scheduled_) {
    next_deadline_ = now_tp + step;
    scheduled_ = true;
  } else {
    next_deadline_ += step;
    if (now_tp > next_deadline_) ++late_cycles_;
  }
  std::this_thread::sleep_until(next_deadline_);
}

double TcpLink::now() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

}  // namespace crx
