#include "crx/wire.hpp"

#include <cstring>

namespace crx::wire {

namespace {

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (static_cast<uint16_t>(p[1]) << 8));
}

void put_f64(std::vector<uint8_t>& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(bits >> (8 * i)));
}

double get_f64(const uint8_t* p) {
  uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<uint64_t>(p[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, sizeof(v));
  return v;
}

}  // namespace

bool valid_opcode(uint8_t raw) {
  return raw >= static_cast<uint8_t>(Opcode::kReadR) &&
         raw <= static_cast<uint8_t>(Opcode::kReadState);
}

size_t request_payload_size(Opcode op) {
  switch (op) {
    case Opcode::kWriteR: return 4;
    case Opcode::kWritePr: return 8 * kNumJoints;
    case Opcode::kWriteDi: return 1;
    case Opcode::kReadR:
    case Opcode::kReadPr:
    case Opcode::kReadDi:
    case Opcode::kReadState: return 0;
  }
  return 0;
}

size_t response_payload_size(Opcode op) {
  switch (op) {
    case Opcode::kReadR: return 4;
    case Opcode::kReadPr: return 8 * kNumJoints;
    case Opcode::kReadDi: return 1;
    case Opcode::kReadState: return 8 * (1 + 2 * kNumJoints);
    case Opcode::kWriteR:
    case Opcode::kWritePr:
    case Opcode::kWriteDi: return 0;
  }
  return 0;
}

std::vector<uint8_t> encode_frame(const Frame& frame) {
  if (frame.payload.size() != request_payload_size(frame.opcode))
    throw EncodeError("request payload does not match opcode schema");
  std::vector<uint8_t> out;
  out.reserve(kRequestHeaderSize + frame.payload.size());
  put_u16(out, kMagic);
  out.push_back(kVersion);
  out.push_back(static_cast<uint8_t>(frame.opcode));
  put_u16(out, frame.index);
  put_u16(out, static_cast<uint16_t>(frame.payload.size()));
  out.insert(out.end(), frame.payload.begin(), frame.payload.end());
  return out;
}

std::vector<uint8_t> encode_response(const Response& resp) {
  const size_t expected =
      resp.status == Status::kOk ? response_payload_size(resp.opcode) : 0;
  if (resp.payload.size() != expected)
    throw EncodeError("response payload does not match opcode schema");
  std::vector<uint8_t> out;
  out.reserve(kResponseHeaderSize + resp.payload.size());
  put_u16(out, kMagic);
  out.push_back(kVersion);
  out.push_back(static_cast<uint8_t>(resp.opcode) | kResponseBit);
  out.push_back(static_cast<uint8_t>(resp.status));
  put_u16(out, static_cast<uint16_t>(resp.payload.size()));
  out.insert(out.end(), resp.payload.begin(), resp.payload.end());
  return out;
}

FrameDecode decode_frame(std::span<const uint8_t> bytes) {
  FrameDecode result;
  if (bytes.size() < 2) return result;
  if (get_u16(bytes.data()) != kMagic) {
    result.status = DecodeStatus::kMalformed;
    return result;
  }
  if (bytes.size() < 3) return result;
  if (bytes[2] != kVersion) {
    result.status = DecodeStatus::kMalformed;
    return result;
  }
  if (bytes.size() < 4) return result;
  if (!valid_opcode(bytes[3])) {
    result.status = DecodeStatus::kBadOpcode;
    return result;
  }
  if (bytes.size() < kRequestHeaderSize) return result;
  const auto opcode = static_cast<Opcode>(bytes[3]);
  const uint16_t index = get_u16(bytes.data() + 4);
  const uint16_t payload_len = get_u16(bytes.data() + 6);
  if (payload_len != request_payload_size(opcode)) {
    result.status = DecodeStatus::kMalformed;
    return result;
  }
  if (bytes.size() < kRequestHeaderSize + payload_len) return result;
  result.status = DecodeStatus::kOk;
  result.frame.opcode = opcode;
  result.frame.index = index;
  result.frame.payload.assign(bytes.begin() + kRequestHeaderSize,
                              bytes.begin() + kRequestHeaderSize + payload_len);
  result.consumed = kRequestHeaderSize + payload_len;
  return result;
}

ResponseDecode decode_response(std::span<const uint8_t> bytes) {
  ResponseDecode result;
  if (bytes.size() < 2) return result;
  if (get_u16(bytes.data()) != kMagic) {
    result.status = DecodeStatus::kMalformed;
    return result;
  }
  if (bytes.size() < 3) return result;
  if (bytes[2] != kVersion) {
    result.status = DecodeStatus::kMalformed;
    return result;
  }
  if (bytes.size() < 4) return result;
  if (!(bytes[3] & kResponseBit) || !valid_opcode(bytes[3] & ~kResponseBit)) {
    result.status = DecodeStatus::kBadOpcode;
    return result;
  }
  if (bytes.size() < kResponseHeaderSize) return result;
  const auto opcode = static_cast<Opcode>(bytes[3] & ~kResponseBit);
  const uint8_t raw_status = bytes[4];
  if (raw_status > static_cast<uint8_t>(Status::kMalformed)) {
    result.status = DecodeStatus::kMalformed;
    return result;
  }
  const auto status = static_cast<Status>(raw_status);
  const uint16_t payload_len = get_u16(bytes.data() + 5);
  const size_t expected = status == Status::kOk ? response_payload_size(opcode) : 0;
  if (payload_len != expected) {
    result.status = DecodeStatus::kMalformed;
    return result;
  }
  if (bytes.size() < kResponseHeaderSize + payload_len) return result;
  result.status = DecodeStatus::kOk;
  result.response.opcode = opcode;
  result.response.status = status;
  result.response.payload.assign(bytes.begin() + kResponseHeaderSize,
                                 bytes.begin() + kResponseHeaderSize + payload_len);
  result.consumed = kResponseHeaderSize + payload_len;
  return result;
}

std::vector<uint8_t> pack_i32(int32_t value) {
  std::vector<uint8_t> out(4);
  const auto u = static_cast<uint32_t>(value);
  for (int i = 0; i < 4; ++i) out[static_cast<size_t>(i)] = static_cast<uint8_t>(u >> (8 * i));
  return out;
}

int32_t unpack_i32(std::span<const uint8_t> payload) {
  if (payload.size() != 4) throw EncodeError("expected 4-byte i32 payload");
  uint32_t u = 0;
  for (int i = 0; i < 4; ++i) u |= static_cast<uint32_t>(payload[static_cast<size_t>(i)]) << (8 * i);
  return static_cast<int32_t>(u);
}

std::vector<uint8_t> pack_u8(uint8_t value) { return {value}; }

uint8_t unpack_u8(std::span<const uint8_t> payload) {
  if (payload.size() != 1) throw EncodeError("expected 1-byte payload");
  return payload[0];
}

std::vector<uint8_t> pack_pose(const JointVec& pose) {
  std::vector<uint8_t> out;
  out.reserve(8 * kNumJoints);
  for (int j = 0; j < kNumJoints; ++j) put_f64(out, pose[j]);
  return out;
}

JointVec unpack_pose(std::span<const uint8_t> payload) {
  if (payload.size() != 8 * kNumJoints) throw EncodeError("expected 48-byte pose payload");
  JointVec pose;
  for (int j = 0; j < kNumJoints; ++j) pose[j] = get_f64(payload.data() + 8 * j);
  return pose;
}

std::vector<uint8_t> pack_state(const JointState& state) {
  std::vector<uint8_t> out;
  out.reserve(8 * (1 + 2 * kNumJoints));
  put_f64(out, state.t);
  for (int j = 0; j < kNumJoints; ++j) put_f64(out, state.q[j]);
  for (int j = 0; j < kNumJoints; ++j) put_f64(out, state.qd[j]);
  return out;
}

JointState unpack_state(std::span<const uint8_t> payload) {
  if (payload.size() != 8 * (1 + 2 * kNumJoints))
    throw EncodeError("expected 104-byte state payload");
  JointState state;
  state.t = get_f64(payload.data());
  for (int j = 0; j < kNumJoints; ++j) state.q[j] = get_f64(payload.data() + 8 * (1 + j));
  for (int j = 0; j < kNumJoints; ++j)
    state.qd[j] = get_f64(payload.data() + 8 * (1 + kNumJoints + j));
  return state;
}

}  // namespace crx::wire
