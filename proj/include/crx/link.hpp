#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>

#include "crx/client.hpp"
#include "crx/emulator.hpp"
#include "crx/types.hpp"

namespace crx {

// Register-level access to a controller plus control-cycle pacing. The two
// implementations give the streaming layer identical semantics against an
// in-process virtual-clock emulator and a remote controller over TCP.
class ControllerLink {
 public:
  virtual ~ControllerLink() = default;

  virtual int32_t read_r(int index) = 0;
  virtual void write_r(int index, int32_t value) = 0;
  virtual JointVec read_pr(int index) = 0;
  virtual void write_pr(int index, const JointVec& pose) = 0;
  virtual bool read_di(int index) = 0;
  virtual void write_di(int index, bool value) = 0;
  virtual JointState read_state() = 0;

  // Blocks (or advances the simulation) until the next cycle boundary.
  virtual void wait_cycle(double period) = 0;
  // Session clock, s: simulation time (embedded) or wall time since start.
  virtual double now() = 0;
  // Cycles whose deadline had already passed on entry to wait_cycle.
  virtual long late_cycles() const { return 0; }
};

// Drives a virtual-clock emulator in-process; wait_cycle advances simulation
// time, making every run bit-exactly reproducible.
class EmbeddedLink : public ControllerLink {
 public:
  explicit EmbeddedLink(Emulator& emulator);

  int32_t read_r(int index) override;
  void write_r(int index, int32_t value) override;
  JointVec read_pr(int index) override;
  void write_pr(int index, const JointVec& pose) override;
  bool read_di(int index) override;
  void write_di(int index, bool value) override;
  JointState read_state() override;
  void wait_cycle(double period) override;
  double now() override;

 private:
  Emulator& emulator_;
  double target_ticks_ = 0.0;
  long done_ticks_ = 0;
};

// Wraps the TCP client with deadline-based cycle scheduling. Late cycles are
// counted, never skipped: the schedule catches up at the next boundary.
class TcpLink : public ControllerLink {
 public:
  TcpLink(const std::string& host, uint16_t port,
          std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));

  int32_t read_r(int index) override;
  void write_r(int index, int32_t value) override;
  JointVec read_pr(int index) override;
  void write_pr(int index, const JointVec& pose) override;
  bool read_di(int index) override;
  void write_di(int index, bool value) override;
  JointState read_state() override;
  void wait_cycle(double period) override;
  double now() override;
  long late_cycles() const override { return late_cycles_; }

 private:
  RegisterClient client_;
  std::chrono::steady_clock::time_point start_;
  std::chrono::steady_clock::time_point next_deadline_;
  bool scheduled_ = false;
  long late_cycles_ = 0;
};

}  // namespace crx
