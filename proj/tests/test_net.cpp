#include <doctest.h>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cmath>
#include <thread>
#include <utility>

#include "crx/client.hpp"
#include "crx/server.hpp"
#include "crx/wire.hpp"

using namespace crx;

namespace {

JointState fixed_state() {
  JointState s;
  s.t = 2.5;
  s.q << 1, 2, 3, 4, 5, 6;
  s.qd << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6;
  return s;
}

struct ServerFixture {
  RegisterFile regs;
  RegisterServer server{regs, fixed_state};
  ServerFixture() { server.start(0); }
  RegisterClient connect() { return RegisterClient("127.0.0.1", server.port()); }
};

}  // namespace

TEST_CASE("write then read round-trips every bank over TCP") {
  ServerFixture fx;
  auto client = fx.connect();
  client.write_r(1, 1);
  CHECK(client.read_r(1) == 1);

  JointVec pose;
  pose << -1.5, 2.5, -3.5, 4.5, -5.5, 6.5;
  client.write_pr(1, pose);
  CHECK((client.read_pr(1) == pose).all());

  client.write_di(2, true);
  CHECK(client.read_di(2));
}

TEST_CASE("fresh registers read as zero over TCP") {
  ServerFixture fx;
  auto client = fx.connect();
  CHECK(client.read_r(5) == 0);
  CHECK((client.read_pr(9) == JointVec::Zero()).all());
  CHECK_FALSE(client.read_di(7));
}

TEST_CASE("idempotent reads: consecutive reads agree") {
  ServerFixture fx;
  auto client = fx.connect();
  client.write_r(4, 42);
  const int32_t a = client.read_r(4);
  const int32_t b = client.read_r(4);
  CHECK(a == b);
}

TEST_CASE("read_state reports the provider snapshot") {
  ServerFixture fx;
  auto client = fx.connect();
  const JointState s = client.read_state();
  CHECK(s.t == 2.5);
  CHECK((s.q == fixed_state().q).all());
  CHECK((s.qd == fixed_state().qd).all());
}

TEST_CASE("out-of-range index yields BAD_INDEX and the session stays open") {
  ServerFixture fx;
  auto client = fx.connect();
  CHECK_THROWS_AS(client.write_r(0, 5), ProtocolError);
  try {
    client.read_r(201);
  } catch (const ProtocolError& e) {
    CHECK(e.status == wire::Status::kBadIndex);
  }
  // Session still alive.
  client.write_r(1, 9);
  CHECK(client.read_r(1) == 9);
}

TEST_CASE("non-finite pose write is rejected as malformed, session stays open") {
  ServerFixture fx;
  auto client = fx.connect();
  JointVec pose = JointVec::Zero();
  pose[0] = std::nan("");
  try {
    client.write_pr(1, pose);
    FAIL("expected ProtocolError");
  } catch (const ProtocolError& e) {
    CHECK(e.status == wire::Status::kMalformed);
  }
  CHECK((client.read_pr(1) == JointVec::Zero()).all());
}

TEST_CASE("a client handle stays usable after a move") {
  ServerFixture fx;
  RegisterClient a = fx.connect();
  a.write_r(9, 77);
  RegisterClient b = std::move(a);
  CHECK(b.read_r(9) == 77);
}

TEST_CASE("two concurrent sessions are served") {
  ServerFixture fx;
  auto a = fx.connect();
  auto b = fx.connect();
  a.write_r(1, 11);
  b.write_r(2, 22);
  CHECK(a.read_r(2) == 22);
  CHECK(b.read_r(1) == 11);
}

TEST_CASE("responses arrive in request order within a session") {
  ServerFixture fx;
  auto client = fx.connect();
  for (int i = 1; i <= 50; ++i) client.write_r(i % 100 + 1, i);
  for (int i = 1; i <= 50; ++i) {
    const int idx = i % 100 + 1;
    CHECK(client.read_r(idx) >= 0);
  }
}

TEST_CASE("malformed stream gets an error response, then the connection closes") {
  ServerFixture fx;
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(fx.server.port());
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);

  const uint8_t garbage[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  REQUIRE(::send(fd, garbage, sizeof(garbage), 0) == sizeof(garbage));

  uint8_t buf[64];
  const ssize_t n = ::recv(fd, buf, sizeof(buf), 0);
  REQUIRE(n >= 7);
  CHECK(buf[0] == 0x2C);
  CHECK(buf[1] == 0xFA);
  CHECK(buf[3] == 0x80);  // no opcode recoverable
  CHECK(buf[4] == static_cast<uint8_t>(wire::Status::kMalformed));
  // Server closes after responding.
  const ssize_t closed = ::recv(fd, buf, sizeof(buf), 0);
  CHECK(closed == 0);
  ::close(fd);
}

TEST_CASE("pipelined requests receive one response each, in request order") {
  using namespace wire;
  ServerFixture fx;
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  REQUIRE(fd >= 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(fx.server.port());
  ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
  REQUIRE(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0);

  std::vector<uint8_t> burst;
  for (const Frame& f : {Frame{Opcode::kReadR, 2, {}},
                         Frame{Opcode::kWriteR, 2, pack_i32(5)},
                         Frame{Opcode::kReadR, 2, {}}}) {
    const auto bytes = encode_frame(f);
    burst.insert(burst.end(), bytes.begin(), bytes.end());
  }
  REQUIRE(::send(fd, burst.data(), burst.size(), 0) ==
          static_cast<ssize_t>(burst.size()));

  std::vector<uint8_t> buf;
  std::vector<Response> responses;
  uint8_t chunk[256];
  while (responses.size() < 3) {
    const ssize_t n = ::recv(fd, chunk, sizeof(chunk), 0);
    REQUIRE(n > 0);
    buf.insert(buf.end(), chunk, chunk + n);
    for (;;) {
      const ResponseDecode dec = decode_response(buf);
      if (dec.status != DecodeStatus::kOk) break;
      responses.push_back(dec.response);
      buf.erase(buf.begin(), buf.begin() + static_cast<long>(dec.consumed));
    }
  }
  ::close(fd);
  REQUIRE(responses.size() == 3);
  CHECK(responses[0].opcode == Opcode::kReadR);
  CHECK(unpack_i32(responses[0].payload) == 0);
  CHECK(responses[1].opcode == Opcode::kWriteR);
  CHECK(responses[2].opcode == Opcode::kReadR);
  CHECK(unpack_i32(responses[2].payload) == 5);
}

TEST_CASE("connecting to a dead endpoint raises a transport error") {
  uint16_t dead_port;
  {
    ServerFixture fx;
    dead_port = fx.server.port();
  }
  CHECK_THROWS_AS(RegisterClient("127.0.0.1", dead_port, std::chrono::milliseconds(200)),
                  TransportError);
}
