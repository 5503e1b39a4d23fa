#include "crx/server.hpp"

#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "crx/wire.hpp"

namespace crx {

namespace {

bool send_all(int fd, const std::vector<uint8_t>& bytes) {
  size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n <= 0) return false;
    off += static_cast<size_t>(n);
  }
  return true;
}

}  // namespace

RegisterServer::RegisterServer(RegisterFile& registers, StateSource state_source)
    : registers_(registers), state_source_(std::move(state_source)) {}

RegisterServer::~RegisterServer() { stop(); }

void RegisterServer::start(uint16_t port) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw BindError("socket() failed");
  const int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));

  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw BindError("bind failed on port " + std::to_string(port) + ": " +
                    std::strerror(errno));
  }
  if (::listen(listen_fd_, 8) != 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw BindError("listen failed");
  }
  socklen_t len = sizeof(addr);
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);

  running_.store(true);
  accept_thread_ = std::thread([this] { accept_loop(); });
}

void RegisterServer::stop() {
  // The flag flip and socket shutdowns happen under the sessions lock so an
  // in-flight accept cannot register a session this pass would miss. The
  // listen fd is only closed (and cleared) after the accept thread joins:
  // until then that thread still reads it.
  {
    std::lock_guard lock(sessions_mutex_);
    running_.store(false);
    if (listen_fd_ >= 0) ::shutdown(listen_fd_, SHUT_RDWR);
    for (int fd : session_fds_) ::shutdown(fd, SHUT_RDWR);
  }
  if (accept_thread_.joinable()) accept_thread_.join();
  if (listen_fd_ >= 0) {
    ::close(listen_fd_);
    listen_fd_ = -1;
  }
  std::vector<std::thread> sessions;
  {
    std::lock_guard lock(sessions_mutex_);
    sessions.swap(session_threads_);
  }
  for (auto& t : sessions)
    if (t.joinable()) t.join();
}

void RegisterServer::track_session_fd(int fd, bool add) {
  std::lock_guard lock(sessions_mutex_);
  if (add) {
    session_fds_.push_back(fd);
  } else {
    std::erase(session_fds_, fd);
  }
}

void RegisterServer::accept_loop() {
  while (running_.load()) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (!running_.load()) break;
      continue;
    }
    const int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    std::lock_guard lock(sessions_mutex_);
    if (!running_.load()) {
      ::close(fd);
      break;
    }
    session_fds_.push_back(fd);
    session_threads_.emplace_back([this, fd] { session_loop(fd); });
  }
}

void RegisterServer::session_loop(int fd) {
  using namespace wire;
  std::vector<uint8_t> buf;
  uint8_t chunk[4096];
  bool open = true;
  while (open && running_.load()) {
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    if (n <= 0) break;
    buf.insert(buf.end(), chunk, chunk + n);

    while (open) {
      const FrameDecode dec = decode_frame(buf);
      if (dec.status == DecodeStatus::kNeedMore) break;

      Response resp;
      if (dec.status == DecodeStatus::kMalformed) {
        resp.opcode = static_cast<Opcode>(0);
        resp.status = Status::kMalformed;
        send_all(fd, encode_response(resp));
        open = false;
        break;
      }
      if (dec.status == DecodeStatus::kBadOpcode) {
        resp.opcode = static_cast<Opcode>(0);
        resp.status = Status::kBadOpcode;
        send_all(fd, encode_response(resp));
        open = false;
        break;
      }

      const Frame& req = dec.frame;
      buf.erase(buf.begin(), buf.begin() + static_cast<long>(dec.consumed));
      resp.opcode = req.opcode;
      try {
        switch (req.opcode) {
          case Opcode::kReadR:
            resp.payload = pack_i32(registers_.read_r(req.index));
            break;
          case Opcode::kWriteR:
            registers_.write_r(req.index, unpack_i32(req.payload));
            break;
          case Opcode::kReadPr:
            resp.payload = pack_pose(registers_.read_pr(req.index));
            break;
          case Opcode::kWritePr:
            registers_.write_pr(req.index, unpack_pose(req.payload));
            break;
          case Opcode::kReadDi:
            resp.payload = pack_u8(registers_.read_di(req.index) ? 1 : 0);
            break;
          case Opcode::kWriteDi: {
            const uint8_t v = unpack_u8(req.payload);
            if (v > 1) throw std::invalid_argument("DI value must be 0 or 1");
            registers_.write_di(req.index, v == 1);
            break;
          }
          case Opcode::kReadState:
            resp.payload = pack_state(state_source_());
            break;
        }
      } catch (const std::out_of_range&) {
        resp.status = Status::kBadIndex;
        resp.payload.clear();
      } catch (const std::invalid_argument&) {
        // Well-framed request carrying an invalid value (non-finite pose,
        // DI byte other than 0/1); framing is still synchronized.
        resp.status = Status::kMalformed;
        resp.payload.clear();
      }
      if (!send_all(fd, encode_response(resp))) {
        open = false;
        break;
      }
    }
  }
  // Untrack before close so stop() can never shut down a recycled descriptor.
  track_session_fd(fd, false);
  ::close(fd);
}

}  // namespace crx
