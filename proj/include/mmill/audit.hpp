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

// Two-server write audit.
//
// Each server holds an additive share w_S of the write vector w (block 0 of
// its DPF evaluation at every active address). With per-request randomness
// r_i and R_i = r_i^2 the servers compute shares of
//
//   m = sum(w_i),  c = <w, r>,  C = <w, R>
//
// and w has Hamming weight at most one iff c^2 - m*C = 0 (with high
// probability over r). The client, which knows the target index, computes
// (m, c, C) in O(1) and proves the identity with two secret-shared proofs,
// one per multiplication:
//
//   proof 1: f1, g1 linear through (0, rf1), (1, c) and (0, rg1), (1, c)
//   proof 2: f2, g2 linear through (0, rf2), (1, m) and (0, rg2), (1, C)
//
// with h_k = f_k * g_k sent as shares of its three coefficients. The servers
// take point 1 from their own sketch shares, evaluate everything at a
// challenge point t the client cannot predict, publish the evaluations plus
// a share of h1(1) - h2(1), and accept iff f_k(t) g_k(t) = h_k(t) for both
// proofs and h1(1) = h2(1).

#ifndef MMILL_AUDIT_HPP_
#define MMILL_AUDIT_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

#include "mmill/bytes.hpp"
#include "mmill/field.hpp"

namespace mmill {

using RequestId = Key16;

struct AuditSeed {
  Key16 bytes{};
  friend bool operator==(const AuditSeed&, const AuditSeed&) = default;
};

struct ServerSketch {
  FieldElement m, c, C;
  friend bool operator==(const ServerSketch&, const ServerSketch&) = default;
};

struct ClientChecks {
  FieldElement m, c, C;
  friend bool operator==(const ClientChecks&, const ClientChecks&) = default;
};

struct SnipShare {
  FieldElement rf, rg;
  std::array<FieldElement, 3> h;  // h(x) = h[0] + h[1] x + h[2] x^2
};

struct SnipProofShare {
  static constexpr size_t kBytes = 10 * kFieldElementBytes;

  std::array<SnipShare, 2> snip;

  Bytes serialize() const;
  static SnipProofShare deserialize(const Field& f, std::span<const uint8_t> in);
};

enum class AuditReason : uint8_t { kOk, kSketchMismatch, kSeedMismatch, kDecodeError };

std::string_view to_string(AuditReason r);

struct AuditDecision {
  bool accept = false;
  AuditReason reason = AuditReason::kDecodeError;
};

// What each server publishes to the other: shares of
// f1(t), g1(t), h1(t), f2(t), g2(t), h2(t), (h1 - h2)(1).
struct AuditMessage {
  static constexpr size_t kBytes = 16 + 7 * kFieldElementBytes;

  RequestId request_id{};
  std::array<FieldElement, 7> shares;

  Bytes serialize() const;
  static AuditMessage deserialize(const Field& f, std::span<const uint8_t> in);
};

// r_i, computed on its own (the client only needs r at its target index).
FieldElement derive_sketch_rand(const Field& f, const AuditSeed& seed, uint64_t i);

ServerSketch server_sketch(const Field& f, std::span<const FieldElement> w_share,
                           const AuditSeed& seed);

ClientChecks client_checks(const Field& f, const AuditSeed& seed, uint64_t i_star,
                           FieldElement w_a, FieldElement w_b);

std::pair<SnipProofShare, SnipProofShare> snip_gen(const Field& f, const ClientChecks& checks,
                                                   Rng& rng);

// First element of the "chal" stream under seed2 outside {0, 1}.
FieldElement challenge_point(const Field& f, const AuditSeed& seed2);

AuditMessage verifier_message(const Field& f, const RequestId& id, const ServerSketch& sketch,
                              const SnipProofShare& proof, FieldElement t);

AuditDecision audit_decide(const Field& f, const AuditMessage& own, const AuditMessage& peer);

// Server-to-server exchange: sends our message and returns the peer's, or
// nullopt when the channel fails.
class AuditChannel {
 public:
  virtual ~AuditChannel() = default;
  virtual std::optional<AuditMessage> exchange(const AuditMessage& own) = 0;
};

AuditDecision audit_verify(const Field& f, const RequestId& id, const ServerSketch& sketch,
                           const SnipProofShare& proof, const AuditSeed& seed2,
                           AuditChannel& channel);

}  // namespace mmill

#endif  // MMILL_AUDIT_HPP_
