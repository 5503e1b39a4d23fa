#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "crx/emulator.hpp"

using namespace crx;

namespace {

EmulatorConfig test_config() {
  EmulatorConfig cfg;
  cfg.kp = JointVec::Constant(8.0);
  cfg.vmax = JointVec::Constant(60.0);
  cfg.amax = JointVec::Constant(875.0);
  cfg.command_latency = 0.16;
  cfg.feedback_latency = 0.0;
  cfg.tick_rate = 250.0;
  return cfg;
}

// Independent reference: integrates the same update law for one joint at
// 1 kHz, with the step target becoming visible at `visible_at`.
struct Reference {
  std::vector<double> t, q, v;
};

Reference integrate_reference(double target, double visible_at, double kp, double vmax,
                              double amax, double duration, double dt = 0.001) {
  Reference ref;
  double q = 0.0, v = 0.0;
  const long n = static_cast<long>(duration / dt);
  for (long i = 0; i <= n; ++i) {
    const double now = static_cast<double>(i) * dt;
    ref.t.push_back(now);
    ref.q.push_back(q);
    ref.v.push_back(v);
    const double goal = now >= visible_at ? target : 0.0;
    double v_des = std::clamp(kp * (goal - q), -vmax, vmax);
    v += std::clamp(v_des - v, -amax * dt, amax * dt);
    q += v * dt;
  }
  return ref;
}

double reference_q_at(const Reference& ref, double t) {
  const auto it = std::lower_bound(ref.t.begin(), ref.t.end(), t - 1e-9);
  const size_t i = static_cast<size_t>(it - ref.t.begin());
  return ref.q[std::min(i, ref.q.size() - 1)];
}

// Engages tracking and waits for the run flag to propagate.
void engage(Emulator& emu) {
  emu.registers().write_pr(1, emu.config().home_pose);
  emu.registers().write_r(1, 1);
  const long settle =
      static_cast<long>(emu.config().command_latency * emu.config().tick_rate) + 2;
  emu.step(settle);
}

}  // namespace

TEST_CASE("reset clears the run flag and parks at home") {
  EmulatorConfig cfg = test_config();
  cfg.home_pose << 1, 2, 3, 4, 5, 6;
  Emulator emu(cfg);
  CHECK(emu.registers().read_r(1) == 0);
  CHECK(emu.phase() == TpPhase::kWait);
  CHECK((emu.true_state().q == cfg.home_pose).all());
  CHECK((emu.true_state().qd == JointVec::Zero()).all());
  CHECK_FALSE(emu.registers().read_di(1));

  emu.tp_reset();
  CHECK(emu.registers().read_r(1) == 0);
  CHECK((emu.true_state().q == cfg.home_pose).all());
}

TEST_CASE("no motion before the run flag despite target writes") {
  Emulator emu(test_config());
  JointVec target = JointVec::Zero();
  target[0] = 30.0;
  emu.registers().write_pr(1, target);
  emu.step(500);  // 2 s, far beyond the command latency
  CHECK((emu.true_state().q == JointVec::Zero()).all());
  CHECK((emu.true_state().qd == JointVec::Zero()).all());
  CHECK(emu.phase() == TpPhase::kWait);
}

TEST_CASE("target equal to the current pose is a fixed point") {
  Emulator emu(test_config());
  engage(emu);
  const JointState before = emu.true_state();
  emu.step(250);
  const JointState after = emu.true_state();
  CHECK((after.q == before.q).all());
  CHECK((after.qd == JointVec::Zero()).all());
}

TEST_CASE("a target write influences motion strictly after the command latency") {
  Emulator emu(test_config());
  engage(emu);
  const JointVec home = emu.true_state().q;

  JointVec target = home;
  target[0] = 20.0;
  emu.registers().write_pr(1, target);

  const long latency_ticks =
      static_cast<long>(emu.config().command_latency * emu.config().tick_rate);
  for (long i = 0; i < latency_ticks - 1; ++i) {
    emu.tick();
    CHECK((emu.true_state().q == home).all());
  }
  emu.step(5);
  CHECK(emu.true_state().q[0] > home[0]);
}

TEST_CASE("90 degree step saturates at exactly vmax") {
  Emulator emu(test_config());
  engage(emu);
  JointVec target = JointVec::Zero();
  target[0] = 90.0;
  emu.registers().write_pr(1, target);

  double max_speed = 0.0;
  double prev_speed = 0.0;
  const double dt = emu.config().dt();
  bool accel_ok = true;
  for (int i = 0; i < 5 * 250; ++i) {
    const JointState s = emu.tick();
    max_speed = std::max(max_speed, std::abs(s.qd[0]));
    if (std::abs(s.qd[0] - prev_speed) > emu.config().amax[0] * dt + 1e-9) accel_ok = false;
    prev_speed = s.qd[0];
    CHECK(std::abs(s.qd[0]) <= emu.config().vmax[0] + 1e-9);
  }
  CHECK(max_speed == emu.config().vmax[0]);  // exact clamp
  CHECK(accel_ok);
  CHECK(emu.true_state().q[0] == doctest::Approx(90.0).epsilon(1e-6));
}

TEST_CASE("30 degree step: monotone, no overshoot, settles, matches the 1 kHz reference") {
  const EmulatorConfig cfg = test_config();
  Emulator emu(cfg);
  engage(emu);
  JointVec target = JointVec::Zero();
  target[0] = 30.0;
  const double t_write = emu.sim_time();
  emu.registers().write_pr(1, target);

  const Reference ref = integrate_reference(
      30.0, cfg.command_latency, cfg.kp[0], cfg.vmax[0], cfg.amax[0], 5.0);

  bool monotone = true;
  bool overshoot = false;
  double max_dev = 0.0;
  double prev_q = 0.0;
  for (int i = 0; i < 5 * 250; ++i) {
    const JointState s = emu.tick();
    if (s.q[0] < prev_q - 1e-9) monotone = false;
    if (s.q[0] > 30.0 + 1e-9) overshoot = true;
    prev_q = s.q[0];
    max_dev = std::max(max_dev, std::abs(s.q[0] - reference_q_at(ref, s.t - t_write)));
  }
  CHECK(monotone);
  CHECK_FALSE(overshoot);
  CHECK(std::abs(emu.true_state().q[0] - 30.0) < 0.01);
  CHECK(max_dev < 0.3);  // discretization gap between 250 Hz and 1 kHz integration
}

TEST_CASE("velocity and acceleration limits hold under random retargeting") {
  EmulatorConfig cfg = test_config();
  Emulator emu(cfg);
  engage(emu);
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> angle(-120.0, 120.0);
  const double dt = cfg.dt();
  JointVec prev_v = JointVec::Zero();
  for (int burst = 0; burst < 60; ++burst) {
    JointVec target;
    for (int j = 0; j < kNumJoints; ++j) target[j] = angle(rng);
    emu.registers().write_pr(1, target);
    for (int i = 0; i < 25; ++i) {
      const JointState s = emu.tick();
      for (int j = 0; j < kNumJoints; ++j) {
        CHECK(std::abs(s.qd[j]) <= cfg.vmax[j] + 1e-9);
        CHECK(std::abs(s.qd[j] - prev_v[j]) <= cfg.amax[j] * dt + 1e-9);
      }
      prev_v = s.qd;
    }
  }
}

TEST_CASE("virtual runs replay bit-identically") {
  auto run_once = [] {
    Emulator emu(test_config());
    engage(emu);
    JointVec target = JointVec::Zero();
    target[0] = 45.0;
    target[3] = -20.0;
    emu.registers().write_pr(1, target);
    std::vector<JointState> states;
    for (int i = 0; i < 500; ++i) states.push_back(emu.tick());
    return states;
  };
  const auto a = run_once();
  const auto b = run_once();
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].t == b[i].t);
    CHECK((a[i].q == b[i].q).all());
    CHECK((a[i].qd == b[i].qd).all());
  }
}

TEST_CASE("gripper register maps to the digital input after the latency") {
  Emulator emu(test_config());
  CHECK_FALSE(emu.registers().read_di(1));
  emu.registers().write_r(2, 1);
  const long latency_ticks =
      static_cast<long>(emu.config().command_latency * emu.config().tick_rate);
  emu.step(latency_ticks + 2);
  CHECK(emu.registers().read_di(1));
  emu.registers().write_r(2, 0);
  emu.step(latency_ticks + 2);
  CHECK_FALSE(emu.registers().read_di(1));
}

TEST_CASE("gripper close-then-open within the latency window ends open") {
  Emulator emu(test_config());
  emu.registers().write_r(2, 1);
  emu.step(3);  // both writes observed, well inside the latency window
  emu.registers().write_r(2, 0);
  const long latency_ticks =
      static_cast<long>(emu.config().command_latency * emu.config().tick_rate);
  emu.step(latency_ticks + 5);
  CHECK_FALSE(emu.registers().read_di(1));
}

TEST_CASE("step(n) advances sim time by exactly n ticks") {
  Emulator emu(test_config());
  emu.step(7);
  CHECK(emu.sim_time() == 7.0 / emu.config().tick_rate);
  emu.step(250);
  CHECK(emu.sim_time() == 257.0 / emu.config().tick_rate);
  CHECK(emu.tick_count() == 257);
}

TEST_CASE("clearing the run flag stops motion until it is raised again") {
  Emulator emu(test_config());
  engage(emu);
  JointVec target = JointVec::Zero();
  target[0] = 90.0;
  emu.registers().write_pr(1, target);
  emu.step(100);  // latency + spin-up
  CHECK(emu.true_state().qd[0] > 10.0);

  emu.registers().write_r(1, 0);
  const long latency_ticks =
      static_cast<long>(emu.config().command_latency * emu.config().tick_rate);
  emu.step(latency_ticks + 50);
  CHECK(emu.true_state().qd[0] == 0.0);
  const double parked = emu.true_state().q[0];
  emu.step(100);
  CHECK(emu.true_state().q[0] == parked);

  emu.registers().write_r(1, 1);
  emu.step(latency_ticks + 50);
  CHECK(emu.true_state().qd[0] > 0.0);
}

TEST_CASE("feedback latency delays the polled state") {
  EmulatorConfig cfg = test_config();
  cfg.feedback_latency = 0.2;
  Emulator emu(cfg);
  engage(emu);
  JointVec target = JointVec::Zero();
  target[0] = 30.0;
  emu.registers().write_pr(1, target);
  emu.step(250);  // 1 s: moving for ~0.84 s
  const JointState truth = emu.true_state();
  const JointState seen = emu.state();
  CHECK(seen.t == doctest::Approx(truth.t - 0.2).epsilon(1e-9));
  CHECK(seen.q[0] < truth.q[0]);
}

TEST_CASE("realtime clock ticks at the configured rate") {
  EmulatorConfig cfg = test_config();
  cfg.clock_mode = ClockMode::kRealtime;
  Emulator emu(cfg);
  emu.start();
  std::this_thread::sleep_for(std::chrono::milliseconds(2000));
  emu.stop();
  const long expected = 500;
  CHECK(emu.tick_count() > expected * 95 / 100);
  CHECK(emu.tick_count() < expected * 105 / 100);
}

TEST_CASE("virtual mode refuses the self-ticking loop") {
  Emulator emu(test_config());
  CHECK_THROWS_AS(emu.start(), std::logic_error);
}

TEST_CASE("reset parks the target register at the home pose") {
  EmulatorConfig cfg = test_config();
  cfg.home_pose << 10, -5, 20, 0, 15, -30;
  Emulator emu(cfg);
  CHECK((emu.registers().read_pr(1) == cfg.home_pose).all());
}

TEST_CASE("state trace records one row per tick with the phase") {
  const std::string path = "/tmp/crx_trace_test.csv";
  Emulator emu(test_config());
  emu.start_trace(path);
  emu.step(10);
  engage(emu);
  emu.step(5);
  emu.stop_trace();

  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,q1,q2,q3,q4,q5,q6,qd1,qd2,qd3,qd4,qd5,qd6,phase");
  long rows = 0;
  bool saw_wait = false, saw_track = false;
  while (std::getline(in, line)) {
    ++rows;
    if (line.find(",WAIT") != std::string::npos) saw_wait = true;
    if (line.find(",TRACK") != std::string::npos) saw_track = true;
  }
  CHECK(rows == emu.tick_count());
  CHECK(saw_wait);
  CHECK(saw_track);
  std::remove(path.c_str());
}

TEST_CASE("config validation rejects non-positive parameters") {
  EmulatorConfig cfg = test_config();
  cfg.kp[2] = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = test_config();
  cfg.tick_rate = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = test_config();
  cfg.command_latency = -0.1;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
