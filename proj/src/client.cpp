#include "crx/client.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <utility>

namespace crx {

namespace {

int connect_with_timeout(const std::string& host, uint16_t port,
                         std::chrono::milliseconds timeout) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string service = std::to_string(port);
  if (::getaddrinfo(host.c_str(), service.c_str(), &hints, &res) != 0 || res == nullptr)
    throw TransportError("cannot resolve " + host);

  const int fd = ::socket(res->ai_family, SOCK_STREAM, 0);
  if (fd < 0) {
    ::freeaddrinfo(res);
    throw TransportError("socket() failed");
  }
  const int flags = ::fcntl(fd, F_GETFL, 0);
  ::fcntl(fd, F_SETFL, flags | O_NONBLOCK);

  int rc = ::connect(fd, res->ai_addr, res->ai_addrlen);
  ::freeaddrinfo(res);
  if (rc != 0 && errno == EINPROGRESS) {
    pollfd pfd{fd, POLLOUT, 0};
    rc = ::poll(&pfd, 1, static_cast<int>(timeout.count()));
    if (rc == 1) {
      int err = 0;
      socklen_t len = sizeof(err);
      ::getsockopt(fd, SOL_SOCKET, SO_ERROR, &err, &len);
      rc = err == 0 ? 0 : -1;
    } else {
      rc = -1;
    }
  }
  if (rc != 0) {
    ::close(fd);
    throw TransportError("connect to " + host + ":" + service + " failed");
  }
  ::fcntl(fd, F_SETFL, flags);

  timeval tv{};
  tv.tv_sec = static_cast<long>(timeout.count() / 1000);
  tv.tv_usec = static_cast<long>((timeout.count() % 1000) * 1000);
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
  const int one = 1;
  ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  return fd;
}

const char* status_name(wire::Status s) {
  switch (s) {
    case wire::Status::kOk: return "OK";
    case wire::Status::kBadIndex: return "BAD_INDEX";
    case wire::Status::kBadOpcode: return "BAD_OPCODE";
    case wire::Status::kMalformed: return "MALFORMED";
  }
  return "?";
}

}  // namespace

RegisterClient::RegisterClient(const std::string& host, uint16_t port,
                               std::chrono::milliseconds timeout)
    : fd_(connect_with_timeout(host, port, timeout)) {}

RegisterClient::~RegisterClient() {
  if (fd_ >= 0) ::close(fd_);
}

RegisterClient::RegisterClient(RegisterClient&& other) noexcept
    : fd_(std::exchange(other.fd_, -1)), rxbuf_(std::move(other.rxbuf_)) {}

RegisterClient& RegisterClient::operator=(RegisterClient&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    fd_ = std::exchange(other.fd_, -1);
    rxbuf_ = std::move(other.rxbuf_);
  }
  return *this;
}

wire::Response RegisterClient::transact(const wire::Frame& request) {
  using namespace wire;
  const std::vector<uint8_t> bytes = encode_frame(request);
  size_t off = 0;
  while (off < bytes.size()) {
    const ssize_t n = ::send(fd_, bytes.data() + off, bytes.size() - off, MSG_NOSIGNAL);
    if (n <= 0) throw TransportError("send failed: " + std::string(std::strerror(errno)));
    off += static_cast<size_t>(n);
  }

  uint8_t chunk[4096];
  for (;;) {
    const ResponseDecode dec = decode_response(rxbuf_);
    if (dec.status == DecodeStatus::kOk) {
      rxbuf_.erase(rxbuf_.begin(), rxbuf_.begin() + static_cast<long>(dec.consumed));
      if (dec.response.status != Status::kOk)
        throw ProtocolError(dec.response.status,
                            std::string("request rejected: ") + status_name(dec.response.status));
      return dec.response;
    }
    if (dec.status != DecodeStatus::kNeedMore)
      throw TransportError("malformed response stream");
    const ssize_t n = ::recv(fd_, chunk, sizeof(chunk), 0);
    if (n == 0) throw TransportError("connection closed by peer");
    if (n < 0) {
      if (errno == EAGAIN || errno == EWOULDBLOCK)
        throw TransportError("response timeout");
      throw TransportError("recv failed: " + std::string(std::strerror(errno)));
    }
    rxbuf_.insert(rxbuf_.end(), chunk, chunk + n);
  }
}

int32_t RegisterClient::read_r(int index) {
  wire::Frame f{wire::Opcode::kReadR, static_cast<uint16_t>(index), {}};
  return wire::unpack_i32(transact(f).payload);
}

void RegisterClient::write_r(int index, int32_t value) {
  wire::Frame f{wire::Opcode::kWriteR, static_cast<uint16_t>(index), wire::pack_i32(value)};
  transact(f);
}

JointVec RegisterClient::read_pr(int index) {
  wire::Frame f{wire::Opcode::kReadPr, static_cast<uint16_t>(index), {}};
  return wire::unpack_pose(transact(f).payload);
}

void RegisterClient::write_pr(int index, const JointVec& pose) {
  wire::Frame f{wire::Opcode::kWritePr, static_cast<uint16_t>(index), wire::pack_pose(pose)};
  transact(f);
}

bool RegisterClient::read_di(int index) {
  wire::Frame f{wire::Opcode::kReadDi, static_cast<uint16_t>(index), {}};
  return wire::unpack_u8(transact(f).payload) != 0;
}

void RegisterClient::write_di(int index, bool value) {
  wire::Frame f{wire::Opcode::kWriteDi, static_cast<uint16_t>(index),
                wire::pack_u8(value ? 1 : 0)};
  transact(f);
}

JointState RegisterClient::read_state() {
  wire::Frame f{wire::Opcode::kReadState, 0, {}};
  return wire::unpack_state(transact(f).payload);
}

}  // namespace crx
