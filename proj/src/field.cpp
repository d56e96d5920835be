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

#include "mmill/field.hpp"

#include <algorithm>
#include <stdexcept>

#include "mmill/kernels/aes.hpp"

namespace mmill {
namespace {

struct Wide {
  u128 hi, lo;
};

inline Wide mul_wide(u128 a, u128 b) {
  const u128 a0 = lo64(a), a1 = hi64(a), b0 = lo64(b), b1 = hi64(b);
  const u128 p00 = a0 * b0, p01 = a0 * b1, p10 = a1 * b0, p11 = a1 * b1;
  const u128 mid = (p00 >> 64) + lo64(p01) + lo64(p10);
  return {p11 + hi64(p01) + hi64(p10) + (mid >> 64), (mid << 64) | lo64(p00)};
}

}  // namespace

Field::Field(u128 modulus) : p_(modulus) {
  if (modulus < 3) throw std::invalid_argument("field modulus must be an odd prime");
  if (hi64(modulus) == 0) {
    wide_ = false;
  } else {
    const u128 c = -modulus;  // 2^128 - p
    if (hi64(c) != 0) {
      throw std::invalid_argument("unsupported modulus: need p < 2^64 or p = 2^128 - c, c < 2^64");
    }
    wide_ = true;
    c_ = lo64(c);
  }
  if (!is_probable_prime()) throw std::invalid_argument("field modulus is not prime");
}

const Field& Field::production() {
  static const Field f(kProductionModulus);
  return f;
}

FieldElement Field::from_u128(u128 x) const {
  if (wide_) return {x >= p_ ? x - p_ : x};
  return {x % p_};
}

FieldElement Field::from_bytes(std::span<const uint8_t> b) const {
  return from_u128(load_u128_le(b));
}

FieldElement Field::decode_canonical(std::span<const uint8_t> b) const {
  const u128 x = load_u128_le(b);
  if (x >= p_) throw DecodeError("non-canonical field element");
  return {x};
}

FieldElement Field::add(FieldElement a, FieldElement b) const {
  u128 s = a.value + b.value;
  if (s < a.value || s >= p_) s -= p_;
  return {s};
}

FieldElement Field::sub(FieldElement a, FieldElement b) const {
  return {a.value >= b.value ? a.value - b.value : a.value - b.value + p_};
}

FieldElement Field::mul(FieldElement a, FieldElement b) const {
  if (!wide_) return {(a.value * b.value) % p_};
  // x = hi * 2^128 + lo, and 2^128 = c (mod p).
  const Wide x = mul_wide(a.value, b.value);
  const u128 q0 = static_cast<u128>(lo64(x.hi)) * c_;
  const u128 q1 = static_cast<u128>(hi64(x.hi)) * c_;
  u128 t_lo = q0 + (q1 << 64);
  uint64_t t_hi = hi64(q1) + (t_lo < q0 ? 1 : 0);
  u128 s = x.lo + t_lo;
  t_hi += (s < x.lo ? 1 : 0);
  const u128 fold = static_cast<u128>(t_hi) * c_;
  u128 r = s + fold;
  if (r < s) r += c_;
  if (r >= p_) r -= p_;
  return {r};
}

FieldElement Field::pow(FieldElement a, u128 e) const {
  FieldElement result = one();
  while (e != 0) {
    if (e & 1) result = mul(result, a);
    a = sqr(a);
    e >>= 1;
  }
  return result;
}

FieldElement Field::inv(FieldElement a) const {
  if (a.is_zero()) throw std::domain_error("inverse of zero");
  return pow(a, p_ - 2);
}

FieldElement Field::random(Rng& rng) const {
  if (!wide_) return {rng.uniform(lo64(p_))};
  for (;;) {
    const u128 x = rng.next_u128();
    if (x < p_) return {x};
  }
}

bool Field::is_probable_prime() const {
  // Miller-Rabin; these bases are deterministic below 2^64.
  static constexpr uint64_t kBases[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  const u128 n = p_;
  for (uint64_t b : kBases) {
    if (n == b) return true;
    if (n % b == 0) return false;
  }
  u128 d = n - 1;
  int s = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++s;
  }
  for (uint64_t b : kBases) {
    FieldElement x = pow({b}, d);
    if (x == one() || x.value == n - 1) continue;
    bool witness = true;
    for (int i = 1; i < s && witness; ++i) {
      x = sqr(x);
      if (x.value == n - 1) witness = false;
    }
    if (witness) return false;
  }
  return true;
}

void add_into(const Field& f, std::span<FieldElement> acc, std::span<const FieldElement> x) {
  if (acc.size() != x.size()) throw std::length_error("add_into: size mismatch");
  for (size_t i = 0; i < acc.size(); ++i) acc[i] = f.add(acc[i], x[i]);
}

void sub_into(const Field& f, std::span<FieldElement> acc, std::span<const FieldElement> x) {
  if (acc.size() != x.size()) throw std::length_error("sub_into: size mismatch");
  for (size_t i = 0; i < acc.size(); ++i) acc[i] = f.sub(acc[i], x[i]);
}

Key16 make_label(std::string_view text) {
  if (text.size() > 16) throw std::invalid_argument("label longer than 16 bytes");
  Key16 label{};
  std::copy(text.begin(), text.end(), label.begin());
  return label;
}

void prf_range(const Field& f, const Key16& key, const Key16& label, uint64_t start,
               std::span<FieldElement> out) {
  if (out.empty()) return;
  const u128 base = key_to_u128(label);
  std::vector<u128> blocks(out.size());
  for (size_t j = 0; j < out.size(); ++j) blocks[j] = base ^ static_cast<u128>(start + j);
  kernels::active_aes().encrypt(key_to_u128(key), blocks, blocks);
  for (size_t j = 0; j < out.size(); ++j) out[j] = f.from_u128(blocks[j]);
}

std::vector<FieldElement> prf_stream(const Field& f, const Key16& key, const Key16& label,
                                     size_t count) {
  std::vector<FieldElement> out(count);
  prf_range(f, key, label, 0, out);
  return out;
}

FieldElement prf_at(const Field& f, const Key16& key, const Key16& label, uint64_t j) {
  FieldElement x;
  prf_range(f, key, label, j, std::span<FieldElement>(&x, 1));
  return x;
}

}  // namespace mmill
