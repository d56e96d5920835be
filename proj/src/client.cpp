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


#include "mmill/client.hpp"

#include <algorithm>
#include <chrono>

#include "mmill/hash.hpp"
#include "mmill/vault.hpp"

namespace mmill {
namespace {

using Clock = std::chrono::steady_clock;

uint64_t micros_since(Clock::time_point t0) {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count());
}

template <typename Array>
Array read_array(ByteReader& r) {
  Array a;
  auto b = r.bytes(a.size());
  std::copy(b.begin(), b.end(), a.begin());
  return a;
}

std::optional<Secret32> read_optional_secret(ByteReader& r) {
  const uint8_t flag = r.u8();
  if (flag > 1) throw DecodeError("bad secret flag");
  if (!flag) return std::nullopt;
  return read_array<Secret32>(r);
}

void write_optional_secret(ByteWriter& w, const std::optional<Secret32>& s) {
  w.u8(s ? 1 : 0);
  if (s) w.bytes(*s);
}

Key16 tag_of(const Key16& mac_key, std::span<const uint8_t> data) {
  return truncate16(hmac_sha256(mac_key, data));
}

}  // namespace

Bytes MailboxCredential::serialize() const {
  ByteWriter w;
  w.u64le(p);
  w.u128le(v.value);
  w.bytes(k_a);
  w.bytes(k_b);
  write_optional_secret(w, master_secret);
  return w.take();
}

MailboxCredential MailboxCredential::parse(std::span<const uint8_t> in) {
  ByteReader r(in);
  MailboxCredential c;
  c.p = r.u64le();
  c.v = {r.u128le()};
  c.k_a = read_array<Key16>(r);
  c.k_b = read_array<Key16>(r);
  c.master_secret = read_optional_secret(r);
  r.expect_end();
  return c;
}

Bytes MailboxAddress::serialize() const {
  ByteWriter w;
  w.u64le(p);
  w.u128le(v.value);
  write_optional_secret(w, master_secret);
  return w.take();
}

MailboxAddress MailboxAddress::parse(std::span<const uint8_t> in) {
  ByteReader r(in);
  MailboxAddress a;
  a.p = r.u64le();
  a.v = {r.u128le()};
  a.master_secret = read_optional_secret(r);
  r.expect_end();
  return a;
}

MailboxAddress address_of(const MailboxCredential& cred) {
  return {cred.p, cred.v, cred.master_secret};
}

Key16 derive_mac_key(const Secret32& master_secret) {
  Bytes in(master_secret.begin(), master_secret.end());
  const std::string_view label = "mac";
  in.insert(in.end(), label.begin(), label.end());
  return truncate16(sha256(in));
}

SendTarget SendTarget::to(const MailboxAddress& a) {
  SendTarget t{a.p, a.v, std::nullopt};
  if (a.master_secret) t.mac_key = derive_mac_key(*a.master_secret);
  return t;
}

Bytes seal_body(std::span<const uint8_t> msg, const std::optional<Key16>& mac_key,
                size_t message_bytes) {
  const size_t room = message_bytes - (mac_key ? kMacBytes : 0);
  if (message_bytes < (mac_key ? kMacBytes : 0) + 1 || msg.size() + 1 > room) {
    throw std::invalid_argument("message too long for the mailbox size");
  }
  Bytes body(message_bytes, 0);
  std::copy(msg.begin(), msg.end(), body.begin());
  body[msg.size()] = 0x80;
  if (mac_key) {
    const Key16 tag = tag_of(*mac_key, std::span<const uint8_t>(body.data(), room));
    std::copy(tag.begin(), tag.end(), body.begin() + static_cast<std::ptrdiff_t>(room));
  }
  return body;
}

CheckResult open_body(std::span<const uint8_t> body, const std::optional<Key16>& mac_key) {
  CheckResult out;
  if (std::all_of(body.begin(), body.end(), [](uint8_t b) { return b == 0; })) return out;
  out.kind = CheckResult::Kind::kIntegrityFailure;
  if (mac_key && body.size() < kMacBytes + 1) return out;
  const size_t room = body.size() - (mac_key ? kMacBytes : 0);
  const auto content = body.first(room);
  if (mac_key) {
    const Key16 tag = tag_of(*mac_key, content);
    if (!std::equal(tag.begin(), tag.end(), body.begin() + static_cast<std::ptrdiff_t>(room))) {
      return out;
    }
  }
  // Strip the 0x80 terminator and trailing zeros.
  size_t end = content.size();
  while (end > 0 && content[end - 1] == 0) --end;
  out.kind = CheckResult::Kind::kMessage;
  if (end > 0 && content[end - 1] == 0x80) {
    out.message.assign(content.begin(), content.begin() + static_cast<std::ptrdiff_t>(end - 1));
  } else if (mac_key) {
    out.kind = CheckResult::Kind::kIntegrityFailure;
  } else {
    // Unauthenticated writers may send anything; hand back the raw bytes.
    out.message.assign(content.begin(), content.end());
  }
  return out;
}

std::string_view to_string(SendStatus s) {
  switch (s) {
    case SendStatus::kAccepted: return "accepted";
    case SendStatus::kRejected: return "rejected";
    case SendStatus::kSeedMismatch: return "seed-mismatch";
  }
  return "unknown";
}

Client::Client(ClientOptions options)
    : options_(std::move(options)),
      field_(options_.field ? options_.field : &Field::production()),
      elements_(payload_elements_for(options_.message_bytes)),
      dpf_(*field_, kAddressBits, elements_ + 1) {
  if (options_.rng_seed) {
    rng_ = std::make_unique<SeededRng>(*options_.rng_seed);
  } else {
    rng_ = std::make_unique<SystemRng>();
  }
}

Client::~Client() { reset(); }

size_t Client::max_message(bool with_mac) const {
  const size_t overhead = 1 + (with_mac ? kMacBytes : 0);
  return options_.message_bytes > overhead ? options_.message_bytes - overhead : 0;
}

Connection& Client::conn(int which) {
  auto& c = conns_[which];
  if (!c) c = Connection::dial(which == 0 ? options_.server_a : options_.server_b, options_.timeout);
  return *c;
}

void Client::reset() {
  for (int i = 0; i < 2; ++i) {
    if (!conns_[i]) continue;
    (i == 0 ? closed_traffic_.sent_a : closed_traffic_.sent_b) += conns_[i]->bytes_sent();
    (i == 0 ? closed_traffic_.received_a : closed_traffic_.received_b) +=
        conns_[i]->bytes_received();
    conns_[i]->shutdown();
    conns_[i].reset();
  }
}

Traffic Client::traffic() const {
  Traffic t = closed_traffic_;
  if (conns_[0]) {
    t.sent_a += conns_[0]->bytes_sent();
    t.received_a += conns_[0]->bytes_received();
  }
  if (conns_[1]) {
    t.sent_b += conns_[1]->bytes_sent();
    t.received_b += conns_[1]->bytes_received();
  }
  return t;
}

void Client::send_to(int which, const Frame& f) {
  try {
    conn(which).send(f);
  } catch (const NetError& e) {
    reset();
    throw ClientError(std::string("server ") + (which ? "B" : "A") + ": " + e.what());
  }
}

Frame Client::expect(int which, MsgType type) {
  Frame f;
  try {
    f = conn(which).recv_or_throw(options_.timeout);
  } catch (const NetError& e) {
    reset();
    throw ClientError(std::string("server ") + (which ? "B" : "A") + ": " + e.what());
  }
  if (f.type == MsgType::kError) {
    throw ClientError(std::string("server ") + (which ? "B" : "A") + " error: " +
                          std::string(to_string(ErrorMsg::parse(f.payload).code)),
                      ErrorMsg::parse(f.payload).code);
  }
  if (f.type != type) {
    reset();
    throw ClientError("unexpected " + std::string(to_string(f.type)));
  }
  return f;
}

MailboxCredential Client::register_mailbox(bool with_master_secret,
                                           std::optional<VirtualAddress> v_opt) {
  MailboxCredential cred;
  cred.k_a = rng_->next_key();
  cred.k_b = rng_->next_key();
  if (with_master_secret) {
    Secret32 s;
    rng_->fill(s);
    cred.master_secret = s;
  }
  send_to(0, RegisterMsg{cred.k_a, v_opt}.frame());
  const RegisterResp ra = RegisterResp::parse(expect(0, MsgType::kRegisterResp).payload);
  send_to(1, RegisterMsg{cred.k_b, ra.v}.frame());
  const RegisterResp rb = RegisterResp::parse(expect(1, MsgType::kRegisterResp).payload);
  if (ra.p != rb.p || ra.v != rb.v) throw ClientError("servers returned different addresses");
  cred.p = ra.p;
  cred.v = ra.v;
  return cred;
}

PreparedWrite Client::prepare(const SendTarget& target, std::span<const uint8_t> body) {
  if (body.size() != options_.message_bytes) throw std::invalid_argument("body must be B bytes");
  const auto t0 = Clock::now();
  const auto payload = make_payload(*field_, body, options_.message_bytes);
  const auto [ka, kb] = dpf_.gen(target.v, payload, *rng_);
  PreparedWrite w;
  w.id = rng_->next_key();
  w.p = target.p;
  w.key_a = ka.serialize();
  w.key_b = kb.serialize();
  w.w_a = dpf_.eval(ka, target.v)[0];
  w.w_b = dpf_.eval(kb, target.v)[0];
  timings_.gen_us = micros_since(t0);
  return w;
}

SendStatus Client::submit(const PreparedWrite& w) {
  const auto t0 = Clock::now();
  try {
    conn(0).send(WriteKeyMsg{w.id, w.key_a}.frame());
    conn(1).send(WriteKeyMsg{w.id, w.key_b}.frame());
  } catch (const NetError& e) {
    reset();
    throw ClientError(e.what());
  }
  std::optional<AuditSeedMsg> seeds[2];
  for (int i = 0; i < 2; ++i) {
    try {
      seeds[i] = AuditSeedMsg::parse(expect(i, MsgType::kAuditSeed).payload);
    } catch (const ClientError& e) {
      if (!e.code()) throw;
    }
  }
  if (!seeds[0] || !seeds[1]) {
    // The other server may still be waiting for a proof on this stream.
    reset();
    timings_.total_us = micros_since(t0);
    return SendStatus::kRejected;
  }
  if (!(seeds[0]->seed == seeds[1]->seed) || seeds[0]->request_id != w.id ||
      seeds[1]->request_id != w.id) {
    reset();
    timings_.total_us = micros_since(t0);
    return SendStatus::kSeedMismatch;
  }

  const auto ta = Clock::now();
  const ClientChecks checks = client_checks(*field_, seeds[0]->seed, w.p, w.w_a, w.w_b);
  const auto [pa, pb] = snip_gen(*field_, checks, *rng_);
  timings_.audit_us = micros_since(ta);

  try {
    conn(0).send(ProofMsg{w.id, pa.serialize()}.frame());
    conn(1).send(ProofMsg{w.id, pb.serialize()}.frame());
  } catch (const NetError& e) {
    reset();
    throw ClientError(e.what());
  }
  bool accept = true;
  for (int i = 0; i < 2; ++i) {
    try {
      const WriteResultMsg r = WriteResultMsg::parse(expect(i, MsgType::kWriteResult).payload);
      accept = accept && r.accept && r.request_id == w.id;
    } catch (const ClientError& e) {
      if (!e.code()) throw;
      accept = false;
    }
  }
  timings_.total_us = micros_since(t0);
  return accept ? SendStatus::kAccepted : SendStatus::kRejected;
}

SendStatus Client::send(const SendTarget& target, std::span<const uint8_t> msg) {
  const Bytes body = seal_body(msg, target.mac_key, options_.message_bytes);
  return submit(prepare(target, body));
}

SendStatus Client::cover_send(const SendTarget& dummy) {
  Bytes body(options_.message_bytes);
  rng_->fill(body);
  return submit(prepare(dummy, body));
}

CheckResult Client::check(const MailboxCredential& cred) {
  send_to(0, ReadMsg{cred.p, cred.v}.frame());
  send_to(1, ReadMsg{cred.p, cred.v}.frame());
  std::optional<ReadResp> resp[2];
  std::optional<ClientError> err;
  for (int i = 0; i < 2; ++i) {
    try {
      resp[i] = ReadResp::parse(*field_, elements_, expect(i, MsgType::kReadResp).payload);
    } catch (const ClientError& e) {
      if (!e.code()) throw;
      err = e;
    } catch (const DecodeError& e) {
      reset();
      throw ClientError(e.what());
    }
  }
  if (err) throw *err;
  auto plain = decrypt_share(*field_, cred.k_a, resp[0]->nonce, resp[0]->ct);
  add_into(*field_, plain, decrypt_share(*field_, cred.k_b, resp[1]->nonce, resp[1]->ct));
  if (std::all_of(plain.begin(), plain.end(), [](FieldElement x) { return x.is_zero(); })) {
    return {};
  }
  Bytes body;
  try {
    body = unpack_message(plain, options_.message_bytes);
  } catch (const DecodeError&) {
    return {CheckResult::Kind::kIntegrityFailure, {}};
  }
  std::optional<Key16> mac_key;
  if (cred.master_secret) mac_key = derive_mac_key(*cred.master_secret);
  return open_body(body, mac_key);
}

}  // namespace mmill
