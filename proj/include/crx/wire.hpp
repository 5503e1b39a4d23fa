#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "crx/types.hpp"

namespace crx::wire {

// Framed request/response exchange carrying register reads/writes and state
// polls. All multi-byte fields are little-endian.
//
// Request:   magic u16 | version u8 | opcode u8 | index u16 | payload_len u16 | payload
// Response:  magic u16 | version u8 | opcode|0x80 u8 | status u8 | payload_len u16 | payload
inline constexpr uint16_t kMagic = 0xFA2C;
inline constexpr uint8_t kVersion = 0x01;
inline constexpr uint8_t kResponseBit = 0x80;
inline constexpr size_t kRequestHeaderSize = 8;
inline constexpr size_t kResponseHeaderSize = 7;

enum class Opcode : uint8_t {
  kReadR = 0x01,
  kWriteR = 0x02,
  kReadPr = 0x03,
  kWritePr = 0x04,
  kReadDi = 0x05,
  kWriteDi = 0x06,
  kReadState = 0x07,
};

enum class Status : uint8_t {
  kOk = 0,
  kBadIndex = 1,
  kBadOpcode = 2,
  kMalformed = 3,
};

bool valid_opcode(uint8_t raw);

// Fixed payload schema per opcode, bytes.
size_t request_payload_size(Opcode op);
size_t response_payload_size(Opcode op);

struct Frame {
  Opcode opcode = Opcode::kReadR;
  uint16_t index = 0;
  std::vector<uint8_t> payload;

  bool operator==(const Frame&) const = default;
};

struct Response {
  Opcode opcode = Opcode::kReadR;  // request opcode; encoded with kResponseBit set
  Status status = Status::kOk;
  std::vector<uint8_t> payload;

  bool operator==(const Response&) const = default;
};

class EncodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Schema-checked encoders.
std::vector<uint8_t> encode_frame(const Frame& frame);
std::vector<uint8_t> encode_response(const Response& resp);

// Incremental decoders for stream reassembly. kNeedMore is not an error:
// feed more bytes and retry. `consumed` is set only on kOk.
enum class DecodeStatus { kOk, kNeedMore, kMalformed, kBadOpcode };

struct FrameDecode {
  DecodeStatus status = DecodeStatus::kNeedMore;
  Frame frame;
  size_t consumed = 0;
};

struct ResponseDecode {
  DecodeStatus status = DecodeStatus::kNeedMore;
  Response response;
  size_t consumed = 0;
};

FrameDecode decode_frame(std::span<const uint8_t> bytes);
ResponseDecode decode_response(std::span<const uint8_t> bytes);

// Payload codecs. Readers throw EncodeError on size mismatch.
std::vector<uint8_t> pack_i32(int32_t value);
int32_t unpack_i32(std::span<const uint8_t> payload);
std::vector<uint8_t> pack_u8(uint8_t value);
uint8_t unpack_u8(std::span<const uint8_t> payload);
std::vector<uint8_t> pack_pose(const JointVec& pose);
JointVec unpack_pose(std::span<const uint8_t> payload);
std::vector<uint8_t> pack_state(const JointState& state);
JointState unpack_state(std::span<const uint8_t> payload);

}  // namespace crx::wire
