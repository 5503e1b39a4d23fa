#include <doctest.h>

#include <cmath>

#include <memory>
#include <thread>

#include "crx/client.hpp"
#include "crx/harness.hpp"
#include "crx/link.hpp"
#include "crx/server.hpp"
#include "crx/stream.hpp"

using namespace crx;

namespace {

EmulatorConfig virtual_config() {
  EmulatorConfig cfg;
  cfg.clock_mode = ClockMode::kVirtual;
  return cfg;
}

Trajectory j1_ramp(double from, double to, double duration) {
  Trajectory t;
  TrajectoryPoint a, b;
  a.t = 0.0;
  a.q = JointVec::Zero();
  a.q[0] = from;
  b.t = duration;
  b.q = JointVec::Zero();
  b.q[0] = to;
  t.points = {a, b};
  return t;
}

}  // namespace

TEST_CASE("handshake seeds the target register and raises the run flag") {
  Emulator emu(virtual_config());
  EmbeddedLink link(emu);
  StreamController control(link);
  const JointVec pose = control.handshake();
  CHECK((pose == emu.config().home_pose).all());
  CHECK((emu.registers().read_pr(1) == pose).all());
  CHECK(emu.registers().read_r(1) == 1);
}

TEST_CASE("handshake against a dead endpoint fails without writing registers") {
  uint16_t dead_port = 1;
  {
    RegisterFile regs;
    RegisterServer server(regs, [] { return JointState{}; });
    server.start(0);
    dead_port = server.port();
  }
  CHECK_THROWS_AS(TcpLink("127.0.0.1", dead_port, std::chrono::milliseconds(200)),
                  TransportError);
}

TEST_CASE("streaming the current pose holds position") {
  Emulator emu(virtual_config());
  EmbeddedLink link(emu);
  StreamController control(link);
  const JointVec pose = control.handshake();
  const ExperimentLog log = control.stream_setpoint(pose, 2.0);
  REQUIRE(log.rows.size() == 50);
  for (const auto& row : log.rows) {
    CHECK((row.cmd - row.fb).abs().maxCoeff() < 0.01);
  }
}

TEST_CASE("row count equals duration times rate") {
  Emulator emu(virtual_config());
  EmbeddedLink link(emu);
  StreamController control(link);
  control.handshake();
  const ExperimentLog log = control.stream_setpoint(emu.config().home_pose, 2.0);
  CHECK(std::abs(static_cast<long>(log.rows.size()) - 50) <= 1);
}

TEST_CASE("streaming requires a handshake") {
  Emulator emu(virtual_config());
  EmbeddedLink link(emu);
  StreamController control(link);
  CHECK_THROWS_AS(control.stream_setpoint(JointVec::Zero(), 1.0), std::logic_error);
}

TEST_CASE("embedded cycle times advance by exactly one period") {
  Emulator emu(virtual_config());
  EmbeddedLink link(emu);
  StreamController control(link);
  control.handshake();
  const ExperimentLog log = control.stream_setpoint(emu.config().home_pose, 1.0);
  for (size_t i = 1; i < log.rows.size(); ++i) {
    CHECK(log.rows[i].t - log.rows[i - 1].t == doctest::Approx(0.04).epsilon(1e-12));
  }
}

TEST_CASE("trajectory start far from the current pose is refused") {
  Emulator emu(virtual_config());
  EmbeddedLink link(emu);
  StreamController control(link);
  control.handshake();
  const Trajectory traj = j1_ramp(-45.0, 45.0, 6.0);
  CHECK_THROWS_AS(control.execute_trajectory(traj, OverrideSchedule::constant(1.0)),
                  StartPoseError);
}

TEST_CASE("constant override stretches execution time proportionally") {
  const Trajectory traj = j1_ramp(0.0, 45.0, 6.0);

  auto run_with = [&](double ovr) {
    Emulator emu(virtual_config());
    EmbeddedLink link(emu);
    StreamController control(link);
    control.handshake();
    return control.execute_trajectory(traj, OverrideSchedule::constant(ovr));
  };

  const ExperimentLog full = run_with(1.0);
  const ExperimentLog half = run_with(0.5);
  const double wall_full = full.rows.back().t - full.rows.front().t;
  const double wall_half = half.rows.back().t - half.rows.front().t;
  CHECK(std::abs(wall_full - 6.0) <= 0.04 + 1e-9);
  CHECK(std::abs(wall_half - 2.0 * wall_full) <= 0.04 + 1e-9);
}

TEST_CASE("scaled time accumulates override times period without drift") {
  const Trajectory traj = j1_ramp(0.0, 30.0, 6.0);
  Emulator emu(virtual_config());
  EmbeddedLink link(emu);
  StreamController control(link);
  control.handshake();
  const ExperimentLog log = control.execute_trajectory(traj, OverrideSchedule::constant(0.5));
  // cmd = traj.sample(s) with s = 0.5 * k' * dt; slope of J1 is 5 deg/s.
  for (size_t i = 0; i + 1 < log.rows.size(); ++i) {
    const double ds = (log.rows[i + 1].cmd[0] - log.rows[i].cmd[0]) / 5.0;
    if (log.rows[i + 1].cmd[0] < 30.0) {
      CHECK(ds == doctest::Approx(0.5 * 0.04).epsilon(1e-9));
    }
  }
}

TEST_CASE("schedule switches produce command slopes in the override ratios") {
  const Trajectory traj = j1_ramp(0.0, 90.0, 6.0);  // 15 deg/s base slope
  OverrideSchedule schedule{{{0.0, 0.1}, {3.0, 0.5}, {6.0, 1.0}}};
  Emulator emu(virtual_config());
  EmbeddedLink link(emu);
  StreamController control(link);
  control.handshake();
  const ExperimentLog log = control.execute_trajectory(traj, schedule);

  auto slope_at = [&](double t_lo, double t_hi) {
    const double t0 = log.rows.front().t;
    double first_t = 0, first_c = 0, last_t = 0, last_c = 0;
    bool got_first = false;
    for (const auto& row : log.rows) {
      const double tr = row.t - t0;
      if (tr >= t_lo && tr <= t_hi) {
        if (!got_first) {
          first_t = tr;
          first_c = row.cmd[0];
          got_first = true;
        }
        last_t = tr;
        last_c = row.cmd[0];
      }
    }
    return (last_c - first_c) / (last_t - first_t);
  };

  const double s1 = slope_at(0.2, 2.8);
  const double s2 = slope_at(3.2, 5.8);
  const double s3 = slope_at(6.2, 8.8);
  CHECK(s2 / s1 == doctest::Approx(5.0).epsilon(0.05));
  CHECK(s3 / s1 == doctest::Approx(10.0).epsilon(0.05));
}

TEST_CASE("set_override validates its domain and applies next cycle") {
  const Trajectory traj = j1_ramp(0.0, 30.0, 10.0);
  Emulator emu(virtual_config());
  EmbeddedLink link(emu);
  StreamController control(link);
  control.handshake();

  CHECK_FALSE(control.set_override(0.0));
  CHECK_FALSE(control.set_override(-0.5));
  CHECK_FALSE(control.set_override(1.5));
  CHECK(control.set_override(1.0));
  CHECK(control.override_value() == 1.0);

  // Drop the override to 0.1 after 25 cycles; the command slope must shrink
  // by 10x starting at the next cycle.
  long cycle = 0;
  control.set_cycle_observer([&](const LogRow&) {
    ++cycle;
    if (cycle == 25) CHECK(control.set_override(0.1));
  });
  const ExperimentLog log = control.execute_trajectory(traj);
  REQUIRE(log.rows.size() > 30);
  const double slope_before = (log.rows[20].cmd[0] - log.rows[19].cmd[0]) / 0.04;
  const double slope_after = (log.rows[30].cmd[0] - log.rows[29].cmd[0]) / 0.04;
  CHECK(slope_before == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(slope_after == doctest::Approx(0.3).epsilon(1e-6));
  CHECK(log.rows[19].ovr == 1.0);
  CHECK(log.rows[26].ovr == 0.1);
}

TEST_CASE("command continuity holds for a feasible trajectory") {
  const Trajectory traj = j1_ramp(0.0, 45.0, 6.0);
  Emulator emu(virtual_config());
  EmbeddedLink link(emu);
  StreamController control(link);
  control.handshake();
  const ExperimentLog log = control.execute_trajectory(traj, OverrideSchedule::constant(1.0));
  const double max_step = emu.config().vmax.maxCoeff() / 25.0;
  for (size_t i = 1; i < log.rows.size(); ++i) {
    CHECK((log.rows[i].cmd - log.rows[i - 1].cmd).abs().maxCoeff() <= max_step + 1e-9);
  }
}

TEST_CASE("commanded poses trace the same path regardless of override") {
  const Trajectory traj = j1_ramp(0.0, 45.0, 6.0);
  auto run_with = [&](double ovr) {
    Emulator emu(virtual_config());
    EmbeddedLink link(emu);
    StreamController control(link);
    control.handshake();
    return control.execute_trajectory(traj, OverrideSchedule::constant(ovr));
  };
  const ExperimentLog a = run_with(1.0);
  const ExperimentLog b = run_with(0.4);
  const double quant = 45.0 / 6.0 * 0.04;  // one full-speed cycle of command motion
  auto nearest = [&](const JointVec& pose, const ExperimentLog& log) {
    double best = 1e9;
    for (const auto& row : log.rows)
      best = std::min(best, (row.cmd - pose).abs().maxCoeff());
    return best;
  };
  for (const auto& row : a.rows) CHECK(nearest(row.cmd, b) <= quant + 1e-9);
  for (const auto& row : b.rows) CHECK(nearest(row.cmd, a) <= quant + 1e-9);
}

TEST_CASE("a served emulator exposes its parked target over the wire") {
  EmulatorConfig cfg = virtual_config();
  cfg.home_pose << 5, -10, 15, -20, 25, -30;
  Emulator emu(cfg);
  RegisterServer server(emu.registers(), [&emu] { return emu.state(); });
  server.start(0);
  RegisterClient client("127.0.0.1", server.port());
  CHECK((client.read_pr(1) == cfg.home_pose).all());
  CHECK((client.read_state().q == cfg.home_pose).all());
}

TEST_CASE("losing the server mid-run truncates the log and flags it") {
  EmulatorConfig cfg;
  cfg.clock_mode = ClockMode::kRealtime;
  Emulator emu(cfg);
  auto server = std::make_unique<RegisterServer>(emu.registers(),
                                                 [&emu] { return emu.state(); });
  server->start(0);
  emu.start();

  TcpLink link("127.0.0.1", server->port(), std::chrono::milliseconds(300));
  StreamController control(link);
  const JointVec pose = control.handshake();

  std::thread killer([&] {
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    server->stop();
  });
  const ExperimentLog log = control.stream_setpoint(pose, 4.0);
  killer.join();
  emu.stop();
  CHECK(log.truncated);
  CHECK(log.rows.size() < 100);
  CHECK(log.rows.size() >= 5);
}

TEST_CASE("embedded experiment runner reaches a distant trajectory start") {
  Trajectory traj = j1_ramp(-45.0, 45.0, 6.0);
  ExperimentSpec spec;
  spec.kind = ExperimentSpec::Kind::kTrajectory;
  spec.trajectory = traj;
  const ExperimentLog log = run_embedded(EmulatorConfig{}, spec);
  REQUIRE(!log.rows.empty());
  // First feedback sample sits at the trajectory start, not at home.
  CHECK(std::abs(log.rows.front().fb[0] - (-45.0)) < 0.5);
  CHECK(std::abs(log.rows.back().cmd[0] - 45.0) < 1e-9);
}
