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

// Prime-field arithmetic. Production deployments use p = 2^128 - 159; the
// modulus is a runtime parameter so that soundness experiments can run over
// small primes where an O(1/p) failure rate is observable.

#ifndef MMILL_FIELD_HPP_
#define MMILL_FIELD_HPP_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "mmill/bytes.hpp"

namespace mmill {

// Canonical residue in [0, p). The modulus lives in the Field that produced
// the value; mixing elements of different fields is a caller error.
struct FieldElement {
  u128 value = 0;

  friend bool operator==(FieldElement, FieldElement) = default;
  bool is_zero() const { return value == 0; }
};

inline constexpr size_t kFieldElementBytes = 16;
inline constexpr u128 kProductionModulus = ~static_cast<u128>(0) - 158;  // 2^128 - 159

class Field {
 public:
  // Accepts primes below 2^64, or primes of the form 2^128 - c with
  // 0 < c < 2^64. Throws std::invalid_argument otherwise.
  explicit Field(u128 modulus);

  static const Field& production();

  u128 modulus() const { return p_; }
  bool is_production() const { return p_ == kProductionModulus; }

  FieldElement zero() const { return {0}; }
  FieldElement one() const { return {1}; }
  FieldElement from_u128(u128 x) const;

  // Little-endian 16 bytes, reduced mod p.
  FieldElement from_bytes(std::span<const uint8_t> b) const;
  // Little-endian 16 bytes; throws DecodeError unless the value is < p.
  FieldElement decode_canonical(std::span<const uint8_t> b) const;
  static void to_bytes(FieldElement x, std::span<uint8_t> out) { store_u128_le(x.value, out); }

  FieldElement add(FieldElement a, FieldElement b) const;
  FieldElement sub(FieldElement a, FieldElement b) const;
  FieldElement neg(FieldElement a) const { return sub(zero(), a); }
  FieldElement mul(FieldElement a, FieldElement b) const;
  FieldElement sqr(FieldElement a) const { return mul(a, a); }
  FieldElement pow(FieldElement a, u128 e) const;
  // Throws std::domain_error on zero.
  FieldElement inv(FieldElement a) const;

  FieldElement random(Rng& rng) const;

  friend bool operator==(const Field& a, const Field& b) { return a.p_ == b.p_; }

 private:
  bool is_probable_prime() const;

  u128 p_;
  // p = 2^128 - c when wide_, otherwise p < 2^64.
  uint64_t c_ = 0;
  bool wide_ = false;
};

// Field vectors.
void add_into(const Field& f, std::span<FieldElement> acc, std::span<const FieldElement> x);
void sub_into(const Field& f, std::span<FieldElement> acc, std::span<const FieldElement> x);

// Zero-padded 16-byte domain-separation label.
Key16 make_label(std::string_view text);

// PRF stream: element j = from_bytes(AES-128_key(label XOR le128(j))).
std::vector<FieldElement> prf_stream(const Field& f, const Key16& key, const Key16& label,
                                     size_t count);
// Elements [start, start + out.size()) of the same stream.
void prf_range(const Field& f, const Key16& key, const Key16& label, uint64_t start,
               std::span<FieldElement> out);
// Element j alone.
FieldElement prf_at(const Field& f, const Key16& key, const Key16& label, uint64_t j);

}  // namespace mmill

#endif  // MMILL_FIELD_HPP_
