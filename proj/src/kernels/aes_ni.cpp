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

#include "mmill/kernels/aes.hpp"

#include <stdexcept>

#if defined(__x86_64__) || defined(__i386__)
#define MMILL_HAVE_X86 1
#include <cpuid.h>
#include <immintrin.h>
#else
#define MMILL_HAVE_X86 0
#endif

namespace mmill::kernels {

#if MMILL_HAVE_X86
namespace {

#define MMILL_AESNI __attribute__((target("aes,sse2")))

// Eight independent blocks keep the AES unit's pipeline full.
constexpr size_t kLanes = 8;

struct RoundKeys {
  __m128i rk[11];
};

MMILL_AESNI inline __m128i expand_step(__m128i key, __m128i gen) {
  gen = _mm_shuffle_epi32(gen, 0xff);
  key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
  key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
  key = _mm_xor_si128(key, _mm_slli_si128(key, 4));
  return _mm_xor_si128(key, gen);
}

#define MMILL_EXPAND(i, rcon) \
  ks.rk[i] = expand_step(ks.rk[i - 1], _mm_aeskeygenassist_si128(ks.rk[i - 1], rcon))

MMILL_AESNI RoundKeys expand_key(u128 key) {
  RoundKeys ks;
  ks.rk[0] = _mm_loadu_si128(reinterpret_cast<const __m128i*>(&key));
  MMILL_EXPAND(1, 0x01);
  MMILL_EXPAND(2, 0x02);
  MMILL_EXPAND(3, 0x04);
  MMILL_EXPAND(4, 0x08);
  MMILL_EXPAND(5, 0x10);
  MMILL_EXPAND(6, 0x20);
  MMILL_EXPAND(7, 0x40);
  MMILL_EXPAND(8, 0x80);
  MMILL_EXPAND(9, 0x1b);
  MMILL_EXPAND(10, 0x36);
  return ks;
}

#undef MMILL_EXPAND

MMILL_AESNI inline __m128i load(const u128* p) {
  return _mm_loadu_si128(reinterpret_cast<const __m128i*>(p));
}

MMILL_AESNI inline void store(u128* p, __m128i x) {
  _mm_storeu_si128(reinterpret_cast<__m128i*>(p), x);
}

MMILL_AESNI inline __m128i encrypt_one(const RoundKeys& ks, __m128i b) {
  b = _mm_xor_si128(b, ks.rk[0]);
  for (int r = 1; r < 10; ++r) b = _mm_aesenc_si128(b, ks.rk[r]);
  return _mm_aesenclast_si128(b, ks.rk[10]);
}

MMILL_AESNI void encrypt(u128 key, std::span<const u128> in, std::span<u128> out) {
  if (out.size() < in.size()) throw std::length_error("aes: output too short");
  const RoundKeys ks = expand_key(key);
  const size_t n = in.size();
  size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    __m128i b[kLanes];
    for (size_t j = 0; j < kLanes; ++j) b[j] = _mm_xor_si128(load(&in[i + j]), ks.rk[0]);
    for (int r = 1; r < 10; ++r) {
      for (size_t j = 0; j < kLanes; ++j) b[j] = _mm_aesenc_si128(b[j], ks.rk[r]);
    }
    for (size_t j = 0; j < kLanes; ++j) store(&out[i + j], _mm_aesenclast_si128(b[j], ks.rk[10]));
  }
  for (; i < n; ++i) store(&out[i], encrypt_one(ks, load(&in[i])));
}

const RoundKeys& fixed_keys(int side) {
  static const RoundKeys keys[2] = {expand_key(kPrgKeys[0]), expand_key(kPrgKeys[1])};
  return keys[side & 1];
}

MMILL_AESNI void prg_expand(std::span<const u128> in, std::span<const uint8_t> side,
                            std::span<u128> out) {
  if (side.size() != in.size() || out.size() < in.size()) {
    throw std::length_error("prg_expand: size mismatch");
  }
  const size_t n = in.size();
  size_t i = 0;
  for (; i + kLanes <= n; i += kLanes) {
    const RoundKeys* ks[kLanes];
    __m128i x[kLanes], b[kLanes];
    for (size_t j = 0; j < kLanes; ++j) {
      ks[j] = &fixed_keys(side[i + j]);
      x[j] = load(&in[i + j]);
      b[j] = _mm_xor_si128(x[j], ks[j]->rk[0]);
    }
    for (int r = 1; r < 10; ++r) {
      for (size_t j = 0; j < kLanes; ++j) b[j] = _mm_aesenc_si128(b[j], ks[j]->rk[r]);
    }
    for (size_t j = 0; j < kLanes; ++j) {
      store(&out[i + j], _mm_xor_si128(_mm_aesenclast_si128(b[j], ks[j]->rk[10]), x[j]));
    }
  }
  for (; i < n; ++i) {
    const __m128i x = load(&in[i]);
    store(&out[i], _mm_xor_si128(encrypt_one(fixed_keys(side[i]), x), x));
  }
}

bool cpu_has_aesni() {
  unsigned eax, ebx, ecx, edx;
  if (!__get_cpuid(1, &eax, &ebx, &ecx, &edx)) return false;
  return (ecx & bit_AES) != 0 && (edx & bit_SSE2) != 0;
}

}  // namespace

const AesKernels* aesni_aes() {
  static const AesKernels k{"aesni", &encrypt, &prg_expand};
  static const bool supported = cpu_has_aesni();
  return supported ? &k : nullptr;
}

#else

const AesKernels* aesni_aes() { return nullptr; }

#endif

}  // namespace mmill::kernels
