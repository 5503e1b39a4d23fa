#include "crx/emulator.hpp"

#include <charconv>
#include <chrono>

namespace crx {

void EmulatorConfig::validate() const {
  if (!(kp > 0.0).all()) throw ConfigError("kp must be > 0");
  if (!(vmax > 0.0).all()) throw ConfigError("vmax must be > 0");
  if (!(amax > 0.0).all()) throw ConfigError("amax must be > 0");
  if (!(tick_rate > 0.0)) throw ConfigError("tick_rate must be > 0");
  if (command_latency < 0.0) throw ConfigError("command_latency must be >= 0");
  if (feedback_latency < 0.0) throw ConfigError("feedback_latency must be >= 0");
  if (!all_finite(home_pose)) throw ConfigError("home_pose must be finite");
}

Emulator::Emulator(EmulatorConfig config) : config_(std::move(config)) {
  config_.validate();
  tp_reset();
}

Emulator::~Emulator() { stop(); }

void Emulator::tp_reset() {
  std::lock_guard lock(mutex_);
  registers_.write_r(1, 0);
  registers_.write_pr(1, config_.home_pose);  // parked target readable over the wire
  phase_ = TpPhase::kWait;
  q_ = config_.home_pose;
  v_ = JointVec::Zero();
  latched_target_ = config_.home_pose;
  run_flag_ = 0;
  command_channel_.clear();
  // Seed change detection from the current register contents so only writes
  // issued after the reset produce command events.
  last_pr_seen_ = registers_.read_pr(1);
  last_r1_seen_ = 0;
  last_r2_seen_ = registers_.read_r(2);
  feedback_.clear();
  const double now = static_cast<double>(ticks_) / config_.tick_rate;
  feedback_.push_back(JointState{now, q_, v_});
}

void Emulator::poll_registers_locked(double now) {
  const double visible_at = now + config_.command_latency;
  const JointVec pr = registers_.read_pr(1);
  if ((pr != last_pr_seen_).any()) {
    command_channel_.push(visible_at, CommandEvent{CommandEvent::Kind::kTarget, 0, pr});
    last_pr_seen_ = pr;
  }
  const int32_t r2 = registers_.read_r(2);
  if (r2 != last_r2_seen_) {
    command_channel_.push(visible_at,
                          CommandEvent{CommandEvent::Kind::kGripper, r2, JointVec::Zero()});
    last_r2_seen_ = r2;
  }
  const int32_t r1 = registers_.read_r(1);
  if (r1 != last_r1_seen_) {
    command_channel_.push(visible_at,
                          CommandEvent{CommandEvent::Kind::kRunFlag, r1, JointVec::Zero()});
    last_r1_seen_ = r1;
  }
}

JointState Emulator::tick_locked() {
  const double dt = config_.dt();
  const double now = static_cast<double>(ticks_) / config_.tick_rate;

  poll_registers_locked(now);
  while (auto event = command_channel_.pop_one_visible(now)) {
    switch (event->kind) {
      case CommandEvent::Kind::kTarget:
        latched_target_ = event->pose;
        break;
      case CommandEvent::Kind::kRunFlag:
        run_flag_ = event->value;
        break;
      case CommandEvent::Kind::kGripper:
        registers_.write_di(1, event->value != 0);
        break;
    }
  }

  if (phase_ == TpPhase::kWait && run_flag_ == 1) {
    phase_ = TpPhase::kTrack;
  }

  if (phase_ == TpPhase::kTrack) {
    const JointVec a_step = config_.amax * dt;
    JointVec v_des = JointVec::Zero();
    if (run_flag_ == 1) {
      v_des = (config_.kp * (latched_target_ - q_)).min(config_.vmax).max(-config_.vmax);
    }
    v_ += (v_des - v_).min(a_step).max(-a_step);
    q_ += v_ * dt;
  } else {
    v_ = JointVec::Zero();
  }

  ++ticks_;
  const JointState out{static_cast<double>(ticks_) / config_.tick_rate, q_, v_};
  push_feedback_locked(out);
  if (trace_.is_open()) trace_locked(out);
  return out;
}

void Emulator::trace_locked(const JointState& s) {
  char buf[64];
  auto put = [&](double v) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    trace_.write(buf, res.ptr - buf);
  };
  put(s.t);
  for (int j = 0; j < kNumJoints; ++j) {
    trace_.put(',');
    put(s.q[j]);
  }
  for (int j = 0; j < kNumJoints; ++j) {
    trace_.put(',');
    put(s.qd[j]);
  }
  trace_ << ',' << (phase_ == TpPhase::kTrack ? "TRACK" : phase_ == TpPhase::kWait ? "WAIT" : "INIT")
         << '\n';
}

void Emulator::start_trace(const std::string& path) {
  std::lock_guard lock(mutex_);
  trace_.open(path, std::ios::binary);
  if (!trace_) throw std::runtime_error("cannot open trace file " + path);
  trace_ << "t";
  for (int j = 1; j <= kNumJoints; ++j) trace_ << ",q" << j;
  for (int j = 1; j <= kNumJoints; ++j) trace_ << ",qd" << j;
  trace_ << ",phase\n";
}

void Emulator::stop_trace() {
  std::lock_guard lock(mutex_);
  if (trace_.is_open()) trace_.close();
}

void Emulator::push_feedback_locked(const JointState& s) {
  feedback_.push_back(s);
  const double horizon = s.t - config_.feedback_latency;
  while (feedback_.size() >= 2 && feedback_[1].t <= horizon) feedback_.pop_front();
}

JointState Emulator::tick() {
  std::lock_guard lock(mutex_);
  return tick_locked();
}

void Emulator::step(long ticks) {
  std::lock_guard lock(mutex_);
  for (long i = 0; i < ticks; ++i) tick_locked();
}

double Emulator::sim_time() const {
  std::lock_guard lock(mutex_);
  return static_cast<double>(ticks_) / config_.tick_rate;
}

long Emulator::tick_count() const {
  std::lock_guard lock(mutex_);
  return ticks_;
}

TpPhase Emulator::phase() const {
  std::lock_guard lock(mutex_);
  return phase_;
}

JointState Emulator::true_state() const {
  std::lock_guard lock(mutex_);
  return JointState{static_cast<double>(ticks_) / config_.tick_rate, q_, v_};
}

JointState Emulator::state() const {
  std::lock_guard lock(mutex_);
  const double horizon =
      static_cast<double>(ticks_) / config_.tick_rate - config_.feedback_latency;
  const JointState* best = &feedback_.front();
  for (const auto& snap : feedback_) {
    if (snap.t <= horizon) best = &snap;
  }
  return *best;
}

void Emulator::start() {
  if (config_.clock_mode != ClockMode::kRealtime)
    throw std::logic_error("start() requires realtime clock mode");
  if (rt_running_.exchange(true)) return;
  rt_thread_ = std::thread([this] {
    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    long n = 0;
    while (rt_running_.load()) {
      ++n;
      const auto deadline =
          t0 + std::chrono::duration_cast<clock::duration>(
                   std::chrono::duration<double>(static_cast<double>(n) / config_.tick_rate));
      std::this_thread::sleep_until(deadline);
      if (!rt_running_.load()) break;
      tick();
    }
  });
}

void Emulator::stop() {
  if (!rt_running_.exchange(false)) return;
  if (rt_thread_.joinable()) rt_thread_.join();
}

}  // namespace crx
