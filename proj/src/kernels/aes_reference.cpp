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

#include <openssl/evp.h>

#include <memory>
#include <stdexcept>
#include <vector>

#include "mmill/kernels/aes.hpp"

namespace mmill::kernels {
namespace {

struct CtxDeleter {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
using CtxPtr = std::unique_ptr<EVP_CIPHER_CTX, CtxDeleter>;

CtxPtr make_ecb_ctx(u128 key) {
  CtxPtr ctx(EVP_CIPHER_CTX_new());
  if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  uint8_t raw[16];
  store_u128_le(key, raw);
  if (EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ecb(), nullptr, raw, nullptr) != 1) {
    throw std::runtime_error("EVP_EncryptInit_ex failed");
  }
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);
  return ctx;
}

void ecb(EVP_CIPHER_CTX* ctx, const u128* in, u128* out, size_t blocks) {
  if (blocks == 0) return;
  int len = 0;
  if (EVP_EncryptUpdate(ctx, reinterpret_cast<uint8_t*>(out), &len,
                        reinterpret_cast<const uint8_t*>(in),
                        static_cast<int>(blocks * 16)) != 1 ||
      len != static_cast<int>(blocks * 16)) {
    throw std::runtime_error("EVP_EncryptUpdate failed");
  }
}

void encrypt(u128 key, std::span<const u128> in, std::span<u128> out) {
  if (out.size() < in.size()) throw std::length_error("aes: output too short");
  auto ctx = make_ecb_ctx(key);
  ecb(ctx.get(), in.data(), out.data(), in.size());
}

void prg_expand(std::span<const u128> in, std::span<const uint8_t> side,
                std::span<u128> out) {
  if (side.size() != in.size() || out.size() < in.size()) {
    throw std::length_error("prg_expand: size mismatch");
  }
  thread_local CtxPtr fixed[2] = {make_ecb_ctx(kPrgKeys[0]), make_ecb_ctx(kPrgKeys[1])};
  // Gather per key, encrypt each group in one call, scatter back.
  std::vector<u128> group[2];
  std::vector<size_t> where[2];
  for (size_t i = 0; i < in.size(); ++i) {
    const int s = side[i] & 1;
    group[s].push_back(in[i]);
    where[s].push_back(i);
  }
  for (int s = 0; s < 2; ++s) {
    std::vector<u128> enc(group[s].size());
    ecb(fixed[s].get(), group[s].data(), enc.data(), enc.size());
    for (size_t j = 0; j < enc.size(); ++j) out[where[s][j]] = enc[j] ^ group[s][j];
  }
}

}  // namespace

const AesKernels& reference_aes() {
  static const AesKernels k{"reference", &encrypt, &prg_expand};
  return k;
}

}  // namespace mmill::kernels
