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

#ifndef MMILL_BYTES_HPP_
#define MMILL_BYTES_HPP_

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mmill {

static_assert(std::endian::native == std::endian::little,
              "block layout assumes a little-endian host");

using u128 = unsigned __int128;
using Bytes = std::vector<uint8_t>;
using Key16 = std::array<uint8_t, 16>;
using Secret32 = std::array<uint8_t, 32>;

constexpr u128 make_u128(uint64_t hi, uint64_t lo) {
  return (static_cast<u128>(hi) << 64) | lo;
}
constexpr uint64_t hi64(u128 x) { return static_cast<uint64_t>(x >> 64); }
constexpr uint64_t lo64(u128 x) { return static_cast<uint64_t>(x); }

// Raised when bytes received from a peer or read from disk do not parse.
class DecodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Little-endian fixed-width codecs.
u128 load_u128_le(std::span<const uint8_t> in);
void store_u128_le(u128 x, std::span<uint8_t> out);
uint64_t load_u64_le(std::span<const uint8_t> in);
void store_u64_le(uint64_t x, std::span<uint8_t> out);

inline u128 key_to_u128(const Key16& k) { return load_u128_le(k); }
inline Key16 u128_to_key(u128 x) {
  Key16 k;
  store_u128_le(x, k);
  return k;
}

std::string to_hex(std::span<const uint8_t> bytes);
std::string u128_to_hex(u128 x);  // big-endian digits, 32 chars
u128 u128_from_hex(const std::string& hex);

// Append-only little-endian writer and a bounds-checked reader; the reader
// throws DecodeError on truncation.
class ByteWriter {
 public:
  void u8(uint8_t x) { out_.push_back(x); }
  void u64le(uint64_t x);
  void u64be(uint64_t x);
  void u128le(u128 x);
  void bytes(std::span<const uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
  Bytes take() { return std::move(out_); }
  const Bytes& view() const { return out_; }

 private:
  Bytes out_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const uint8_t> in) : in_(in) {}
  uint8_t u8();
  uint64_t u64le();
  uint64_t u64be();
  u128 u128le();
  std::span<const uint8_t> bytes(size_t n);
  size_t remaining() const { return in_.size() - pos_; }
  void expect_end() const;

 private:
  std::span<const uint8_t> in_;
  size_t pos_ = 0;
};

// Randomness source. SystemRng draws from the OS CSPRNG through OpenSSL;
// SeededRng is reproducible and meant for tests and benchmarks only.
class Rng {
 public:
  virtual ~Rng() = default;
  virtual void fill(std::span<uint8_t> out) = 0;

  uint64_t next_u64();
  u128 next_u128();
  bool next_bit() { return (next_u64() & 1) != 0; }
  Key16 next_key();
  // Uniform in [0, bound), bound > 0.
  uint64_t uniform(uint64_t bound);
};

class SystemRng final : public Rng {
 public:
  void fill(std::span<uint8_t> out) override;
};

class SeededRng final : public Rng {
 public:
  explicit SeededRng(uint64_t seed) : engine_(seed) {}
  void fill(std::span<uint8_t> out) override;

 private:
  std::mt19937_64 engine_;
};

}  // namespace mmill

#endif  // MMILL_BYTES_HPP_
