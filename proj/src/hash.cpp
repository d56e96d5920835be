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

#include "mmill/hash.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <algorithm>
#include <stdexcept>

namespace mmill {

Sha256::Sha256() : ctx_(EVP_MD_CTX_new()) {
  if (ctx_ == nullptr ||
      EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 init failed");
  }
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

Sha256& Sha256::update(std::span<const uint8_t> data) {
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data.data(), data.size()) != 1) {
    throw std::runtime_error("sha256 update failed");
  }
  return *this;
}

Sha256& Sha256::update_u64(uint64_t x) {
  uint8_t b[8];
  store_u64_le(x, b);
  return update(b);
}

Sha256& Sha256::update_u128(u128 x) {
  uint8_t b[16];
  store_u128_le(x, b);
  return update(b);
}

Sha256Digest Sha256::finish() {
  Sha256Digest d;
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), d.data(), &len) != 1 || len != 32) {
    throw std::runtime_error("sha256 final failed");
  }
  return d;
}

Sha256Digest sha256(std::span<const uint8_t> data) { return Sha256().update(data).finish(); }

Sha256Digest hmac_sha256(std::span<const uint8_t> key, std::span<const uint8_t> data) {
  Sha256Digest d;
  unsigned int len = 0;
  if (HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), data.data(), data.size(),
           d.data(), &len) == nullptr ||
      len != 32) {
    throw std::runtime_error("hmac-sha256 failed");
  }
  return d;
}

Key16 truncate16(const Sha256Digest& d) {
  Key16 k;
  std::copy_n(d.begin(), 16, k.begin());
  return k;
}

}  // namespace mmill
