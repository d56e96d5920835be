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

#ifndef MMILL_HASH_HPP_
#define MMILL_HASH_HPP_

#include <array>
#include <cstdint>
#include <span>

#include "mmill/bytes.hpp"

namespace mmill {

using Sha256Digest = std::array<uint8_t, 32>;

// Incremental SHA-256.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::span<const uint8_t> data);
  Sha256& update_u64(uint64_t x);
  Sha256& update_u128(u128 x);
  Sha256Digest finish();

 private:
  void* ctx_;
};

Sha256Digest sha256(std::span<const uint8_t> data);
Sha256Digest hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data);

// Leading 16 bytes of a digest.
Key16 truncate16(const Sha256Digest& d);

}  // namespace mmill

#endif  // MMILL_HASH_HPP_
