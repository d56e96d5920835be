// Copyright 2026 The mmill Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Frame codec and message payloads shared by clients and servers.
//
// A frame is [len 4B big-endian][type 1B][payload], where len counts the
// payload bytes only. Integers inside payloads are little-endian.

#ifndef MMILL_WIRE_HPP_
#define MMILL_WIRE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mmill/audit.hpp"
#include "mmill/bytes.hpp"
#include "mmill/dpf.hpp"
#include "mmill/field.hpp"

namespace mmill {

enum class MsgType : uint8_t {
  kRegister = 0x01,
  kRegisterResp = 0x02,
  kWriteKey = 0x10,
  kAuditSeed = 0x11,
  kProof = 0x12,
  kWriteResult = 0x13,
  kRead = 0x20,
  kReadResp = 0x21,
  kSeqPropose = 0x30,
  kSeqAck = 0x31,
  kAuditXchg = 0x32,
  kRegSync = 0x33,
  kWriteOpen = 0x34,
  kAuditAbort = 0x35,
  kPeerHello = 0x3f,
  kError = 0x7f,
};

bool is_known_type(uint8_t t);
std::string_view to_string(MsgType t);

enum class ErrorCode : uint8_t {
  kAccessDenied = 1,
  kBadRequest = 2,
  kUnavailable = 3,
  kConflict = 4,
  kTimeout = 5,
};

std::string_view to_string(ErrorCode c);

inline constexpr size_t kFrameHeaderBytes = 5;
inline constexpr uint32_t kMaxFramePayload = 1u << 24;

struct Frame {
  MsgType type = MsgType::kError;
  Bytes payload;

  size_t wire_size() const { return kFrameHeaderBytes + payload.size(); }
};

Bytes encode_frame(const Frame& f);

// Incremental decoder for a byte stream. Throws DecodeError on an unknown
// type or an oversized length.
class FrameDecoder {
 public:
  void feed(std::span<const uint8_t> data);
  std::optional<Frame> next();
  size_t buffered() const { return buf_.size() - pos_; }

 private:
  Bytes buf_;
  size_t pos_ = 0;
};

struct RegisterMsg {
  Key16 key{};
  std::optional<VirtualAddress> v;

  Frame frame() const;
  static RegisterMsg parse(std::span<const uint8_t> p);
};

struct RegisterResp {
  uint64_t p = 0;
  VirtualAddress v;

  Frame frame() const;
  static RegisterResp parse(std::span<const uint8_t> p);
};

struct WriteKeyMsg {
  RequestId request_id{};
  Bytes key;  // serialized DpfKey, validated by the receiver

  Frame frame() const;
  static WriteKeyMsg parse(std::span<const uint8_t> p);
};

struct AuditSeedMsg {
  RequestId request_id{};
  AuditSeed seed;

  Frame frame() const;
  static AuditSeedMsg parse(std::span<const uint8_t> p);
};

struct ProofMsg {
  RequestId request_id{};
  Bytes proof;  // SnipProofShare::kBytes

  Frame frame() const;
  static ProofMsg parse(std::span<const uint8_t> p);
};

struct WriteResultMsg {
  RequestId request_id{};
  bool accept = false;

  Frame frame() const;
  static WriteResultMsg parse(std::span<const uint8_t> p);
};

struct ReadMsg {
  uint64_t p = 0;
  VirtualAddress v;

  Frame frame() const;
  static ReadMsg parse(std::span<const uint8_t> p);
};

struct ReadResp {
  uint64_t nonce = 0;
  std::vector<FieldElement> ct;

  Frame frame() const;
  static ReadResp parse(const Field& f, size_t elements, std::span<const uint8_t> p);
};

enum class SeqKind : uint8_t { kRegister = 1, kWriteCommit = 2, kRead = 3 };

struct SeqPropose {
  uint64_t seq = 0;
  SeqKind kind = SeqKind::kWriteCommit;
  RequestId request_id{};
  uint64_t p = 0;
  VirtualAddress v;

  Frame frame() const;
  static SeqPropose parse(std::span<const uint8_t> p);
};

struct SeqAck {
  uint64_t seq = 0;
  bool ok = false;

  Frame frame() const;
  static SeqAck parse(std::span<const uint8_t> p);
};

struct RegSync {
  uint64_t seq = 0;
  VirtualAddress v;
  uint64_t p = 0;

  Frame frame() const;
  static RegSync parse(std::span<const uint8_t> p);
};

struct WriteOpen {
  RequestId request_id{};
  uint64_t n = 0;

  Frame frame() const;
  static WriteOpen parse(std::span<const uint8_t> p);
};

struct AuditAbort {
  RequestId request_id{};

  Frame frame() const;
  static AuditAbort parse(std::span<const uint8_t> p);
};

struct PeerHello {
  Key16 tag{};

  Frame frame() const;
  static PeerHello parse(std::span<const uint8_t> p);
};

struct ErrorMsg {
  ErrorCode code = ErrorCode::kBadRequest;

  Frame frame() const;
  static ErrorMsg parse(std::span<const uint8_t> p);
};

Frame audit_xchg_frame(const AuditMessage& m);

}  // namespace mmill

#endif  // MMILL_WIRE_HPP_
