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

#include "mmill/bytes.hpp"

#include <openssl/rand.h>

#include <cstring>

namespace mmill {

u128 load_u128_le(std::span<const uint8_t> in) {
  if (in.size() < 16) throw DecodeError("short u128");
  u128 x;
  std::memcpy(&x, in.data(), 16);
  return x;
}

void store_u128_le(u128 x, std::span<uint8_t> out) {
  if (out.size() < 16) throw std::length_error("short u128 buffer");
  std::memcpy(out.data(), &x, 16);
}

uint64_t load_u64_le(std::span<const uint8_t> in) {
  if (in.size() < 8) throw DecodeError("short u64");
  uint64_t x;
  std::memcpy(&x, in.data(), 8);
  return x;
}

void store_u64_le(uint64_t x, std::span<uint8_t> out) {
  if (out.size() < 8) throw std::length_error("short u64 buffer");
  std::memcpy(out.data(), &x, 8);
}

std::string to_hex(std::span<const uint8_t> bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    s.push_back(kDigits[b >> 4]);
    s.push_back(kDigits[b & 15]);
  }
  return s;
}

std::string u128_to_hex(u128 x) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(32, '0');
  for (int i = 31; i >= 0; --i) {
    s[i] = kDigits[static_cast<unsigned>(x & 15)];
    x >>= 4;
  }
  return s;
}

u128 u128_from_hex(const std::string& hex) {
  if (hex.empty() || hex.size() > 32) throw DecodeError("bad hex length");
  u128 x = 0;
  for (char c : hex) {
    unsigned d;
    if (c >= '0' && c <= '9') {
      d = c - '0';
    } else if (c >= 'a' && c <= 'f') {
      d = c - 'a' + 10;
    } else if (c >= 'A' && c <= 'F') {
      d = c - 'A' + 10;
    } else {
      throw DecodeError("bad hex digit");
    }
    x = (x << 4) | d;
  }
  return x;
}

void ByteWriter::u64le(uint64_t x) {
  uint8_t b[8];
  store_u64_le(x, b);
  bytes(b);
}

void ByteWriter::u64be(uint64_t x) {
  for (int i = 7; i >= 0; --i) out_.push_back(static_cast<uint8_t>(x >> (8 * i)));
}

void ByteWriter::u128le(u128 x) {
  uint8_t b[16];
  store_u128_le(x, b);
  bytes(b);
}

std::span<const uint8_t> ByteReader::bytes(size_t n) {
  if (remaining() < n) throw DecodeError("truncated input");
  auto s = in_.subspan(pos_, n);
  pos_ += n;
  return s;
}

uint8_t ByteReader::u8() { return bytes(1)[0]; }
uint64_t ByteReader::u64le() { return load_u64_le(bytes(8)); }
u128 ByteReader::u128le() { return load_u128_le(bytes(16)); }

uint64_t ByteReader::u64be() {
  auto b = bytes(8);
  uint64_t x = 0;
  for (uint8_t c : b) x = (x << 8) | c;
  return x;
}

void ByteReader::expect_end() const {
  if (pos_ != in_.size()) throw DecodeError("trailing bytes");
}

uint64_t Rng::next_u64() {
  uint8_t b[8];
  fill(b);
  return load_u64_le(b);
}

u128 Rng::next_u128() {
  uint8_t b[16];
  fill(b);
  return load_u128_le(b);
}

Key16 Rng::next_key() {
  Key16 k;
  fill(k);
  return k;
}

uint64_t Rng::uniform(uint64_t bound) {
  if (bound == 0) throw std::invalid_argument("uniform: zero bound");
  const uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  for (;;) {
    uint64_t x = next_u64();
    if (x < limit) return x % bound;
  }
}

void SystemRng::fill(std::span<uint8_t> out) {
  if (out.empty()) return;
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1) {
    throw std::runtime_error("RAND_bytes failed");
  }
}

void SeededRng::fill(std::span<uint8_t> out) {
  size_t i = 0;
  while (i < out.size()) {
    uint64_t x = engine_();
    for (int k = 0; k < 8 && i < out.size(); ++k, ++i) {
      out[i] = static_cast<uint8_t>(x >> (8 * k));
    }
  }
}

}  // namespace mmill
