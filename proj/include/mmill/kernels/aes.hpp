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

// AES-128 block kernels. Every AES evaluation in the system (PRF streams,
// counter-mode keystreams, DPF tree expansion) goes through one of these
// tables, so the hot loops can be swapped for an AES-NI implementation at
// runtime while the portable reference stays available for equivalence
// testing.
//
// Blocks are 128-bit integers whose little-endian byte image is the AES
// block.

#ifndef MMILL_KERNELS_AES_HPP_
#define MMILL_KERNELS_AES_HPP_

#include <cstdint>
#include <span>
#include <string_view>

#include "mmill/bytes.hpp"

namespace mmill::kernels {

// Public fixed keys of the two tree-expansion PRGs (left and right child):
// leading bytes of SHA-256("mmill.prg.left") and SHA-256("mmill.prg.right").
inline constexpr u128 kPrgKeys[2] = {
    make_u128(0x482fb6fbb733c61bULL, 0xa7808c545f493a47ULL),
    make_u128(0x66e74fd795a15012ULL, 0x00b2bbc3821c43b6ULL),
};

struct AesKernels {
  std::string_view name;

  // out[i] = AES_key(in[i]). in and out may alias.
  void (*encrypt)(u128 key, std::span<const u128> in, std::span<u128> out);

  // out[i] = AES_{kPrgKeys[side[i]]}(in[i]) ^ in[i]  (Matyas-Meyer-Oseas
  // with a per-block choice of fixed key). in and out may alias.
  void (*prg_expand)(std::span<const u128> in, std::span<const uint8_t> side,
                     std::span<u128> out);
};

// OpenSSL EVP backed; available everywhere.
const AesKernels& reference_aes();

// Hand-written AES-NI kernels; nullptr when the CPU lacks AES-NI.
const AesKernels* aesni_aes();

// Kernel table used by the library. Picks AES-NI when available unless the
// MMILL_AES environment variable is set to "reference".
const AesKernels& active_aes();

}  // namespace mmill::kernels

#endif  // MMILL_KERNELS_AES_HPP_
