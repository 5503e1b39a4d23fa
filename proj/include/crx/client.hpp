#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "crx/types.hpp"
#include "crx/wire.hpp"

namespace crx {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-OK status returned by the peer.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(wire::Status status, const std::string& what)
      : std::runtime_error(what), status(status) {}
  wire::Status status;
};

// Blocking request/response client for the register protocol. One caller at
// a time; the handle may be moved between threads.
class RegisterClient {
 public:
  RegisterClient(const std::string& host, uint16_t port,
                 std::chrono::milliseconds timeout = std::chrono::milliseconds(2000));
  ~RegisterClient();

  RegisterClient(const RegisterClient&) = delete;
  RegisterClient& operator=(const RegisterClient&) = delete;
  RegisterClient(RegisterClient&& other) noexcept;
  RegisterClient& operator=(RegisterClient&& other) noexcept;

  int32_t read_r(int index);
  void write_r(int index, int32_t value);
  JointVec read_pr(int index);
  void write_pr(int index, const JointVec& pose);
  bool read_di(int index);
  void write_di(int index, bool value);
  JointState read_state();

 private:
  wire::Response transact(const wire::Frame& request);

  int fd_ = -1;
  std::vector<uint8_t> rxbuf_;
};

}  // namespace crx
