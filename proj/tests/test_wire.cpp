#include "doctest.h"
#include "mmill/wire.hpp"

using namespace mmill;

namespace {

Frame round_trip(const Frame& f) {
  FrameDecoder d;
  d.feed(encode_frame(f));
  auto out = d.next();
  REQUIRE(out.has_value());
  CHECK(d.buffered() == 0);
  return *out;
}

}  // namespace

TEST_CASE("frame header is big-endian length then type") {
  const Frame f{MsgType::kRead, Bytes(0x0102, 7)};
  const Bytes wire = encode_frame(f);
  REQUIRE(wire.size() == 5 + 0x0102);
  CHECK(wire[0] == 0);
  CHECK(wire[1] == 0);
  CHECK(wire[2] == 0x01);
  CHECK(wire[3] == 0x02);
  CHECK(wire[4] == 0x20);
  CHECK(f.wire_size() == wire.size());
}

TEST_CASE("decoder handles byte-at-a-time delivery and back-to-back frames") {
  const Frame f1{MsgType::kSeqAck, {1, 2, 3}};
  const Frame f2{MsgType::kError, {}};
  Bytes wire = encode_frame(f1);
  const Bytes w2 = encode_frame(f2);
  wire.insert(wire.end(), w2.begin(), w2.end());
  FrameDecoder d;
  std::vector<Frame> got;
  for (uint8_t b : wire) {
    d.feed(std::span<const uint8_t>(&b, 1));
    while (auto f = d.next()) got.push_back(*f);
  }
  REQUIRE(got.size() == 2);
  CHECK(got[0].type == MsgType::kSeqAck);
  CHECK(got[0].payload == f1.payload);
  CHECK(got[1].type == MsgType::kError);
  CHECK(got[1].payload.empty());
}

TEST_CASE("decoder rejects unknown types and oversized frames") {
  FrameDecoder d;
  const Bytes bad_type{0, 0, 0, 0, 0x55};
  d.feed(bad_type);
  CHECK_THROWS_AS(d.next(), DecodeError);
  FrameDecoder d2;
  const Bytes huge{0x7f, 0xff, 0xff, 0xff, 0x01};
  d2.feed(huge);
  CHECK_THROWS_AS(d2.next(), DecodeError);
}

TEST_CASE("message payload sizes") {
  SeededRng rng(60);
  CHECK(RegisterMsg{rng.next_key(), std::nullopt}.frame().payload.size() == 33);
  CHECK(RegisterResp{1, {2}}.frame().payload.size() == 24);
  CHECK(AuditSeedMsg{}.frame().payload.size() == 32);
  CHECK(ProofMsg{{}, Bytes(160)}.frame().payload.size() == 176);
  CHECK(WriteResultMsg{}.frame().payload.size() == 17);
  CHECK(ReadMsg{}.frame().payload.size() == 24);
  CHECK(audit_xchg_frame(AuditMessage{}).payload.size() == 16 + 7 * 16);
  CHECK(RegSync{}.frame().payload.size() == 32);
  CHECK(SeqAck{}.frame().payload.size() == 9);
}

TEST_CASE("every message round-trips") {
  const Field& f = Field::production();
  SeededRng rng(61);

  const RegisterMsg reg{rng.next_key(), VirtualAddress{rng.next_u128()}};
  const RegisterMsg reg2 = RegisterMsg::parse(round_trip(reg.frame()).payload);
  CHECK(reg2.key == reg.key);
  CHECK(reg2.v == reg.v);
  CHECK_FALSE(RegisterMsg::parse(RegisterMsg{reg.key, std::nullopt}.frame().payload).v);

  const RegisterResp rr{77, {rng.next_u128()}};
  const RegisterResp rr2 = RegisterResp::parse(rr.frame().payload);
  CHECK(rr2.p == 77);
  CHECK(rr2.v == rr.v);

  WriteKeyMsg wk{rng.next_key(), Bytes(100, 9)};
  const WriteKeyMsg wk2 = WriteKeyMsg::parse(wk.frame().payload);
  CHECK(wk2.request_id == wk.request_id);
  CHECK(wk2.key == wk.key);

  const AuditSeedMsg as{rng.next_key(), {rng.next_key()}};
  CHECK(AuditSeedMsg::parse(as.frame().payload).seed == as.seed);

  const ReadResp resp{5, {f.random(rng), f.random(rng)}};
  const ReadResp resp2 = ReadResp::parse(f, 2, resp.frame().payload);
  CHECK(resp2.nonce == 5);
  CHECK(resp2.ct == resp.ct);
  CHECK_THROWS_AS(ReadResp::parse(f, 3, resp.frame().payload), DecodeError);

  const SeqPropose sp{9, SeqKind::kRead, rng.next_key(), 4, {rng.next_u128()}};
  const SeqPropose sp2 = SeqPropose::parse(sp.frame().payload);
  CHECK(sp2.seq == 9);
  CHECK(sp2.kind == SeqKind::kRead);
  CHECK(sp2.request_id == sp.request_id);
  CHECK(sp2.p == 4);
  CHECK(sp2.v == sp.v);

  const RegSync rs{3, {rng.next_u128()}, 8};
  const RegSync rs2 = RegSync::parse(rs.frame().payload);
  CHECK(rs2.seq == 3);
  CHECK(rs2.v == rs.v);
  CHECK(rs2.p == 8);

  const WriteOpen wo{rng.next_key(), 123456};
  CHECK(WriteOpen::parse(wo.frame().payload).n == 123456);
  CHECK(ErrorMsg::parse(ErrorMsg{ErrorCode::kTimeout}.frame().payload).code ==
        ErrorCode::kTimeout);
  CHECK(SeqAck::parse(SeqAck{11, true}.frame().payload).ok);
}

TEST_CASE("truncated and padded payloads are rejected") {
  Bytes p = ReadMsg{1, {2}}.frame().payload;
  Bytes shorter(p.begin(), p.end() - 1);
  CHECK_THROWS_AS(ReadMsg::parse(shorter), DecodeError);
  p.push_back(0);
  CHECK_THROWS_AS(ReadMsg::parse(p), DecodeError);
  Bytes reg = RegisterMsg{}.frame().payload;
  reg[16] = 2;
  CHECK_THROWS_AS(RegisterMsg::parse(reg), DecodeError);
  CHECK_THROWS_AS(ProofMsg::parse(Bytes(16 + 159)), DecodeError);
  CHECK_THROWS_AS(ErrorMsg::parse(Bytes{9}), DecodeError);
}
