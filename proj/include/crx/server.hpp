#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <vector>

#include "crx/register_file.hpp"
#include "crx/types.hpp"

namespace crx {

inline constexpr uint16_t kDefaultPort = 44818;

class BindError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// TCP front-end for a shared register file plus a state source that answers
// READ_STATE polls. Each accepted session is served by its own thread;
// requests within a session are answered strictly in order. A request with an
// out-of-range index gets a BAD_INDEX response and the session stays open; an
// unparseable stream gets one error response and the session is closed
// (framing cannot be resynchronized).
class RegisterServer {
 public:
  using StateSource = std::function<JointState()>;

  RegisterServer(RegisterFile& registers, StateSource state_source);
  ~RegisterServer();

  RegisterServer(const RegisterServer&) = delete;
  RegisterServer& operator=(const RegisterServer&) = delete;

  // Binds and starts accepting. port 0 picks an ephemeral port.
  void start(uint16_t port = kDefaultPort);
  void stop();

  bool running() const { return running_.load(); }
  uint16_t port() const { return port_; }

 private:
  void accept_loop();
  void session_loop(int fd);
  void track_session_fd(int fd, bool add);

  RegisterFile& registers_;
  StateSource state_source_;
  int listen_fd_ = -1;
  uint16_t port_ = 0;
  std::atomic<bool> running_{false};
  std::thread accept_thread_;
  std::mutex sessions_mutex_;
  std::vector<std::thread> session_threads_;
  std::vector<int> session_fds_;
};

}  // namespace crx
