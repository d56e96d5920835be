// Independent reference computations used as test oracles. Nothing here
// calls into the library's arithmetic or AES kernels.

#ifndef MMILL_TESTS_ORACLES_HPP_
#define MMILL_TESTS_ORACLES_HPP_

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace oracle {

using u128 = unsigned __int128;

// (a + b) mod p for a, b < p, without relying on 256-bit arithmetic.
inline u128 addmod(u128 a, u128 b, u128 p) {
  const u128 room = p - a;
  return b >= room ? b - room : a + b;
}

// Double-and-add modular multiplication.
inline u128 mulmod(u128 a, u128 b, u128 p) {
  a %= p;
  b %= p;
  u128 acc = 0;
  for (int i = 127; i >= 0; --i) {
    acc = addmod(acc, acc, p);
    if ((b >> i) & 1) acc = addmod(acc, a, p);
  }
  return acc;
}

inline u128 powmod(u128 a, u128 e, u128 p) {
  u128 r = 1 % p;
  while (e) {
    if (e & 1) r = mulmod(r, a, p);
    a = mulmod(a, a, p);
    e >>= 1;
  }
  return r;
}

// One AES-128 block through OpenSSL, bypassing the kernel tables.
inline std::array<uint8_t, 16> aes128(const std::array<uint8_t, 16>& key,
                                      const std::array<uint8_t, 16>& in) {
  std::array<uint8_t, 16> out{};
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  int len = 0;
  EVP_EncryptInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.data(), nullptr);
  EVP_CIPHER_CTX_set_padding(ctx, 0);
  EVP_EncryptUpdate(ctx, out.data(), &len, in.data(), 16);
  EVP_CIPHER_CTX_free(ctx);
  return out;
}

inline u128 aes128_u128(u128 key, u128 in) {
  std::array<uint8_t, 16> k, b;
  std::memcpy(k.data(), &key, 16);
  std::memcpy(b.data(), &in, 16);
  const auto o = aes128(k, b);
  u128 r;
  std::memcpy(&r, o.data(), 16);
  return r;
}

}  // namespace oracle

#endif  // MMILL_TESTS_ORACLES_HPP_
