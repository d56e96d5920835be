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


#include "mmill/wire.hpp"

#include <algorithm>

namespace mmill {
namespace {

Key16 read_key(ByteReader& r) {
  Key16 k;
  auto b = r.bytes(16);
  std::copy(b.begin(), b.end(), k.begin());
  return k;
}

Frame make(MsgType t, ByteWriter& w) { return Frame{t, w.take()}; }

}  // namespace

bool is_known_type(uint8_t t) {
  switch (static_cast<MsgType>(t)) {
    case MsgType::kRegister:
    case MsgType::kRegisterResp:
    case MsgType::kWriteKey:
    case MsgType::kAuditSeed:
    case MsgType::kProof:
    case MsgType::kWriteResult:
    case MsgType::kRead:
    case MsgType::kReadResp:
    case MsgType::kSeqPropose:
    case MsgType::kSeqAck:
    case MsgType::kAuditXchg:
    case MsgType::kRegSync:
    case MsgType::kWriteOpen:
    case MsgType::kAuditAbort:
    case MsgType::kPeerHello:
    case MsgType::kError:
      return true;
  }
  return false;
}

std::string_view to_string(MsgType t) {
  switch (t) {
    case MsgType::kRegister: return "REGISTER";
    case MsgType::kRegisterResp: return "REGISTER_RESP";
    case MsgType::kWriteKey: return "WRITE_KEY";
    case MsgType::kAuditSeed: return "AUDIT_SEED";
    case MsgType::kProof: return "PROOF";
    case MsgType::kWriteResult: return "WRITE_RESULT";
    case MsgType::kRead: return "READ";
    case MsgType::kReadResp: return "READ_RESP";
    case MsgType::kSeqPropose: return "SEQ_PROPOSE";
    case MsgType::kSeqAck: return "SEQ_ACK";
    case MsgType::kAuditXchg: return "AUDIT_XCHG";
    case MsgType::kRegSync: return "REG_SYNC";
    case MsgType::kWriteOpen: return "WRITE_OPEN";
    case MsgType::kAuditAbort: return "AUDIT_ABORT";
    case MsgType::kPeerHello: return "PEER_HELLO";
    case MsgType::kError: return "ERROR";
  }
  return "UNKNOWN";
}

std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::kAccessDenied: return "access-denied";
    case ErrorCode::kBadRequest: return "bad-request";
    case ErrorCode::kUnavailable: return "unavailable";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kTimeout: return "timeout";
  }
  return "unknown";
}

Bytes encode_frame(const Frame& f) {
  if (f.payload.size() > kMaxFramePayload) throw std::length_error("frame too large");
  const auto len = static_cast<uint32_t>(f.payload.size());
  Bytes out;
  out.reserve(f.wire_size());
  out.push_back(static_cast<uint8_t>(len >> 24));
  out.push_back(static_cast<uint8_t>(len >> 16));
  out.push_back(static_cast<uint8_t>(len >> 8));
  out.push_back(static_cast<uint8_t>(len));
  out.push_back(static_cast<uint8_t>(f.type));
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  return out;
}

void FrameDecoder::feed(std::span<const uint8_t> data) {
  if (pos_ > 0 && pos_ == buf_.size()) {
    buf_.clear();
    pos_ = 0;
  }
  buf_.insert(buf_.end(), data.begin(), data.end());
}

std::optional<Frame> FrameDecoder::next() {
  if (buffered() < kFrameHeaderBytes) return std::nullopt;
  const uint8_t* h = buf_.data() + pos_;
  const uint32_t len = (uint32_t{h[0]} << 24) | (uint32_t{h[1]} << 16) | (uint32_t{h[2]} << 8) |
                       uint32_t{h[3]};
  if (len > kMaxFramePayload) throw DecodeError("frame: length too large");
  if (!is_known_type(h[4])) throw DecodeError("frame: unknown type");
  if (buffered() < kFrameHeaderBytes + len) return std::nullopt;
  Frame f;
  f.type = static_cast<MsgType>(h[4]);
  f.payload.assign(h + kFrameHeaderBytes, h + kFrameHeaderBytes + len);
  pos_ += kFrameHeaderBytes + len;
  if (pos_ > (1u << 16) && pos_ * 2 > buf_.size()) {
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
    pos_ = 0;
  }
  return f;
}

Frame RegisterMsg::frame() const {
  ByteWriter w;
  w.bytes(key);
  w.u8(v ? 1 : 0);
  w.u128le(v ? v->value : 0);
  return make(MsgType::kRegister, w);
}

RegisterMsg RegisterMsg::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  RegisterMsg m;
  m.key = read_key(r);
  const uint8_t flag = r.u8();
  const u128 v = r.u128le();
  if (flag > 1) throw DecodeError("register: bad flag");
  if (flag) m.v = VirtualAddress{v};
  r.expect_end();
  return m;
}

Frame RegisterResp::frame() const {
  ByteWriter w;
  w.u64le(p);
  w.u128le(v.value);
  return make(MsgType::kRegisterResp, w);
}

RegisterResp RegisterResp::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  RegisterResp m;
  m.p = r.u64le();
  m.v = {r.u128le()};
  r.expect_end();
  return m;
}

Frame WriteKeyMsg::frame() const {
  ByteWriter w;
  w.bytes(request_id);
  w.bytes(key);
  return make(MsgType::kWriteKey, w);
}

WriteKeyMsg WriteKeyMsg::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  WriteKeyMsg m;
  m.request_id = read_key(r);
  auto rest = r.bytes(r.remaining());
  m.key.assign(rest.begin(), rest.end());
  return m;
}

Frame AuditSeedMsg::frame() const {
  ByteWriter w;
  w.bytes(request_id);
  w.bytes(seed.bytes);
  return make(MsgType::kAuditSeed, w);
}

AuditSeedMsg AuditSeedMsg::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  AuditSeedMsg m;
  m.request_id = read_key(r);
  m.seed.bytes = read_key(r);
  r.expect_end();
  return m;
}

Frame ProofMsg::frame() const {
  ByteWriter w;
  w.bytes(request_id);
  w.bytes(proof);
  return make(MsgType::kProof, w);
}

ProofMsg ProofMsg::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  ProofMsg m;
  m.request_id = read_key(r);
  auto rest = r.bytes(SnipProofShare::kBytes);
  m.proof.assign(rest.begin(), rest.end());
  r.expect_end();
  return m;
}

Frame WriteResultMsg::frame() const {
  ByteWriter w;
  w.bytes(request_id);
  w.u8(accept ? 1 : 0);
  return make(MsgType::kWriteResult, w);
}

WriteResultMsg WriteResultMsg::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  WriteResultMsg m;
  m.request_id = read_key(r);
  const uint8_t a = r.u8();
  if (a > 1) throw DecodeError("write result: bad flag");
  m.accept = a == 1;
  r.expect_end();
  return m;
}

Frame ReadMsg::frame() const {
  ByteWriter w;
  w.u64le(p);
  w.u128le(v.value);
  return make(MsgType::kRead, w);
}

ReadMsg ReadMsg::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  ReadMsg m;
  m.p = r.u64le();
  m.v = {r.u128le()};
  r.expect_end();
  return m;
}

Frame ReadResp::frame() const {
  ByteWriter w;
  w.u64le(nonce);
  for (FieldElement x : ct) w.u128le(x.value);
  return make(MsgType::kReadResp, w);
}

ReadResp ReadResp::parse(const Field& f, size_t elements, std::span<const uint8_t> p) {
  ByteReader r(p);
  ReadResp m;
  m.nonce = r.u64le();
  m.ct.resize(elements);
  for (FieldElement& x : m.ct) x = f.decode_canonical(r.bytes(16));
  r.expect_end();
  return m;
}

Frame SeqPropose::frame() const {
  ByteWriter w;
  w.u64le(seq);
  w.u8(static_cast<uint8_t>(kind));
  w.bytes(request_id);
  w.u64le(p);
  w.u128le(v.value);
  return make(MsgType::kSeqPropose, w);
}

SeqPropose SeqPropose::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  SeqPropose m;
  m.seq = r.u64le();
  const uint8_t kind = r.u8();
  if (kind != 2 && kind != 3) throw DecodeError("propose: bad kind");
  m.kind = static_cast<SeqKind>(kind);
  m.request_id = read_key(r);
  m.p = r.u64le();
  m.v = {r.u128le()};
  r.expect_end();
  return m;
}

Frame SeqAck::frame() const {
  ByteWriter w;
  w.u64le(seq);
  w.u8(ok ? 1 : 0);
  return make(MsgType::kSeqAck, w);
}

SeqAck SeqAck::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  SeqAck m;
  m.seq = r.u64le();
  m.ok = r.u8() == 1;
  r.expect_end();
  return m;
}

Frame RegSync::frame() const {
  ByteWriter w;
  w.u64le(seq);
  w.u128le(v.value);
  w.u64le(p);
  return make(MsgType::kRegSync, w);
}

RegSync RegSync::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  RegSync m;
  m.seq = r.u64le();
  m.v = {r.u128le()};
  m.p = r.u64le();
  r.expect_end();
  return m;
}

Frame WriteOpen::frame() const {
  ByteWriter w;
  w.bytes(request_id);
  w.u64le(n);
  return make(MsgType::kWriteOpen, w);
}

WriteOpen WriteOpen::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  WriteOpen m;
  m.request_id = read_key(r);
  m.n = r.u64le();
  r.expect_end();
  return m;
}

Frame AuditAbort::frame() const {
  ByteWriter w;
  w.bytes(request_id);
  return make(MsgType::kAuditAbort, w);
}

AuditAbort AuditAbort::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  AuditAbort m;
  m.request_id = read_key(r);
  r.expect_end();
  return m;
}

Frame PeerHello::frame() const {
  ByteWriter w;
  w.bytes(tag);
  return make(MsgType::kPeerHello, w);
}

PeerHello PeerHello::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  PeerHello m;
  m.tag = read_key(r);
  r.expect_end();
  return m;
}

Frame ErrorMsg::frame() const {
  ByteWriter w;
  w.u8(static_cast<uint8_t>(code));
  return make(MsgType::kError, w);
}

ErrorMsg ErrorMsg::parse(std::span<const uint8_t> p) {
  ByteReader r(p);
  ErrorMsg m;
  const uint8_t c = r.u8();
  if (c < 1 || c > 5) throw DecodeError("error: unknown code");
  m.code = static_cast<ErrorCode>(c);
  r.expect_end();
  return m;
}

Frame audit_xchg_frame(const AuditMessage& m) { return Frame{MsgType::kAuditXchg, m.serialize()}; }

}  // namespace mmill
