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

#include "mmill/audit.hpp"

#include <tuple>
#include <vector>

namespace mmill {
namespace {

const Key16 kSketchLabel = make_label("sketch");
const Key16 kChallengeLabel = make_label("chal");

// Additive split of x: (a, x - a) with a uniform.
std::pair<FieldElement, FieldElement> split(const Field& f, FieldElement x, Rng& rng) {
  const FieldElement a = f.random(rng);
  return {a, f.sub(x, a)};
}

// Line through (0, at0) and (1, at1), evaluated at t.
FieldElement line_at(const Field& f, FieldElement at0, FieldElement at1, FieldElement t) {
  return f.add(f.mul(at0, f.sub(f.one(), t)), f.mul(at1, t));
}

FieldElement quad_at(const Field& f, const std::array<FieldElement, 3>& h, FieldElement t) {
  return f.add(h[0], f.mul(t, f.add(h[1], f.mul(t, h[2]))));
}

FieldElement quad_at_one(const Field& f, const std::array<FieldElement, 3>& h) {
  return f.add(f.add(h[0], h[1]), h[2]);
}

// Coefficients of the product of two lines through (0, a0), (1, a1) and
// (0, b0), (1, b1).
std::array<FieldElement, 3> line_product(const Field& f, FieldElement a0, FieldElement a1,
                                         FieldElement b0, FieldElement b1) {
  const FieldElement da = f.sub(a1, a0), db = f.sub(b1, b0);
  return {f.mul(a0, b0), f.add(f.mul(a0, db), f.mul(b0, da)), f.mul(da, db)};
}

}  // namespace

std::string_view to_string(AuditReason r) {
  switch (r) {
    case AuditReason::kOk:
      return "ok";
    case AuditReason::kSketchMismatch:
      return "sketch-mismatch";
    case AuditReason::kSeedMismatch:
      return "seed-mismatch";
    case AuditReason::kDecodeError:
      return "decode-error";
  }
  return "unknown";
}

Bytes SnipProofShare::serialize() const {
  ByteWriter w;
  for (const SnipShare& s : snip) {
    w.u128le(s.rf.value);
    w.u128le(s.rg.value);
    for (FieldElement x : s.h) w.u128le(x.value);
  }
  return w.take();
}

SnipProofShare SnipProofShare::deserialize(const Field& f, std::span<const uint8_t> in) {
  if (in.size() != kBytes) throw DecodeError("proof share: wrong length");
  ByteReader r(in);
  SnipProofShare p;
  for (SnipShare& s : p.snip) {
    s.rf = f.decode_canonical(r.bytes(16));
    s.rg = f.decode_canonical(r.bytes(16));
    for (FieldElement& x : s.h) x = f.decode_canonical(r.bytes(16));
  }
  return p;
}

Bytes AuditMessage::serialize() const {
  ByteWriter w;
  w.bytes(request_id);
  for (FieldElement x : shares) w.u128le(x.value);
  return w.take();
}

AuditMessage AuditMessage::deserialize(const Field& f, std::span<const uint8_t> in) {
  if (in.size() != kBytes) throw DecodeError("audit message: wrong length");
  ByteReader r(in);
  AuditMessage m;
  auto id = r.bytes(16);
  std::copy(id.begin(), id.end(), m.request_id.begin());
  for (FieldElement& x : m.shares) x = f.decode_canonical(r.bytes(16));
  return m;
}

FieldElement derive_sketch_rand(const Field& f, const AuditSeed& seed, uint64_t i) {
  return prf_at(f, seed.bytes, kSketchLabel, i);
}

ServerSketch server_sketch(const Field& f, std::span<const FieldElement> w_share,
                           const AuditSeed& seed) {
  const auto r = prf_stream(f, seed.bytes, kSketchLabel, w_share.size());
  ServerSketch s{f.zero(), f.zero(), f.zero()};
  for (size_t i = 0; i < w_share.size(); ++i) {
    const FieldElement wr = f.mul(w_share[i], r[i]);
    s.m = f.add(s.m, w_share[i]);
    s.c = f.add(s.c, wr);
    s.C = f.add(s.C, f.mul(wr, r[i]));
  }
  return s;
}

ClientChecks client_checks(const Field& f, const AuditSeed& seed, uint64_t i_star,
                           FieldElement w_a, FieldElement w_b) {
  const FieldElement r = derive_sketch_rand(f, seed, i_star);
  const FieldElement m = f.add(w_a, w_b);
  const FieldElement c = f.mul(r, m);
  return {m, c, f.mul(r, c)};
}

std::pair<SnipProofShare, SnipProofShare> snip_gen(const Field& f, const ClientChecks& checks,
                                                   Rng& rng) {
  // Point-1 values of (f_k, g_k) per proof.
  const FieldElement at1[2][2] = {{checks.c, checks.c}, {checks.m, checks.C}};
  SnipProofShare a, b;
  for (int k = 0; k < 2; ++k) {
    const FieldElement rf = f.random(rng), rg = f.random(rng);
    const auto h = line_product(f, rf, at1[k][0], rg, at1[k][1]);
    std::tie(a.snip[k].rf, b.snip[k].rf) = split(f, rf, rng);
    std::tie(a.snip[k].rg, b.snip[k].rg) = split(f, rg, rng);
    for (int j = 0; j < 3; ++j) std::tie(a.snip[k].h[j], b.snip[k].h[j]) = split(f, h[j], rng);
  }
  return {a, b};
}

FieldElement challenge_point(const Field& f, const AuditSeed& seed2) {
  for (uint64_t j = 0;; ++j) {
    const FieldElement t = prf_at(f, seed2.bytes, kChallengeLabel, j);
    if (t.value > 1) return t;
  }
}

AuditMessage verifier_message(const Field& f, const RequestId& id, const ServerSketch& sketch,
                              const SnipProofShare& proof, FieldElement t) {
  const SnipShare& p1 = proof.snip[0];
  const SnipShare& p2 = proof.snip[1];
  AuditMessage msg;
  msg.request_id = id;
  msg.shares = {
      line_at(f, p1.rf, sketch.c, t),
      line_at(f, p1.rg, sketch.c, t),
      quad_at(f, p1.h, t),
      line_at(f, p2.rf, sketch.m, t),
      line_at(f, p2.rg, sketch.C, t),
      quad_at(f, p2.h, t),
      f.sub(quad_at_one(f, p1.h), quad_at_one(f, p2.h)),
  };
  return msg;
}

AuditDecision audit_decide(const Field& f, const AuditMessage& own, const AuditMessage& peer) {
  if (own.request_id != peer.request_id) return {false, AuditReason::kSeedMismatch};
  std::array<FieldElement, 7> v;
  for (size_t i = 0; i < v.size(); ++i) v[i] = f.add(own.shares[i], peer.shares[i]);
  const bool ok = f.mul(v[0], v[1]) == v[2] && f.mul(v[3], v[4]) == v[5] && v[6].is_zero();
  return ok ? AuditDecision{true, AuditReason::kOk}
            : AuditDecision{false, AuditReason::kSketchMismatch};
}

AuditDecision audit_verify(const Field& f, const RequestId& id, const ServerSketch& sketch,
                           const SnipProofShare& proof, const AuditSeed& seed2,
                           AuditChannel& channel) {
  const AuditMessage own = verifier_message(f, id, sketch, proof, challenge_point(f, seed2));
  const std::optional<AuditMessage> peer = channel.exchange(own);
  if (!peer) return {false, AuditReason::kDecodeError};
  return audit_decide(f, own, *peer);
}

}  // namespace mmill
