#include "doctest.h"
#include "mmill/field.hpp"
#include "oracles.hpp"

using namespace mmill;

namespace {

FieldElement fe_of_bytes(const Field& f, std::initializer_list<uint8_t> head, uint8_t fill) {
  uint8_t b[16];
  std::fill(std::begin(b), std::end(b), fill);
  size_t i = 0;
  for (uint8_t x : head) b[i++] = x;
  return f.from_bytes(b);
}

}  // namespace

TEST_CASE("fe_from_bytes reduces little-endian input") {
  const Field& f = Field::production();
  CHECK(fe_of_bytes(f, {}, 0x00).value == 0);
  uint8_t pb[16];
  store_u128_le(kProductionModulus, pb);
  CHECK(f.from_bytes(pb).value == 0);
  // (2^128 - 1) mod (2^128 - 159), computed with Python big integers.
  CHECK(fe_of_bytes(f, {}, 0xff).value == 158);
  CHECK_THROWS_AS(f.decode_canonical(pb), DecodeError);
}

TEST_CASE("field arithmetic edge cases") {
  const Field& f = Field::production();
  const FieldElement pm1{kProductionModulus - 1};
  CHECK(f.add(pm1, f.one()) == f.zero());
  CHECK(f.sub(f.zero(), f.one()) == pm1);
  const FieldElement two64{static_cast<u128>(1) << 64};
  CHECK(f.mul(two64, two64).value == 159);  // 2^128 mod p
  CHECK(f.mul(pm1, pm1) == f.one());
  CHECK_THROWS_AS(f.inv(f.zero()), std::domain_error);
}

TEST_CASE("inverse identity on random elements") {
  SeededRng rng(1);
  for (const u128 p : {kProductionModulus, static_cast<u128>(10007), static_cast<u128>(101)}) {
    const Field f(p);
    for (int i = 0; i < 200; ++i) {
      FieldElement a = f.random(rng);
      if (a.is_zero()) continue;
      CHECK(f.mul(a, f.inv(a)) == f.one());
    }
  }
}

TEST_CASE("multiplication matches double-and-add oracle") {
  SeededRng rng(2);
  for (const u128 p : {kProductionModulus, static_cast<u128>(10007),
                       static_cast<u128>(0xffffffffffffffc5ULL), ~static_cast<u128>(0) - 172}) {
    const Field f(p);
    for (int i = 0; i < 2000; ++i) {
      const FieldElement a = f.random(rng), b = f.random(rng);
      REQUIRE(f.mul(a, b).value == oracle::mulmod(a.value, b.value, p));
      REQUIRE(f.add(a, b).value == oracle::addmod(a.value, b.value, p));
    }
    // Extremes.
    const FieldElement top{p - 1};
    CHECK(f.mul(top, top).value == oracle::mulmod(p - 1, p - 1, p));
  }
}

TEST_CASE("field axioms on random triples") {
  const Field& f = Field::production();
  SeededRng rng(3);
  for (int i = 0; i < 10000; ++i) {
    const FieldElement a = f.random(rng), b = f.random(rng), c = f.random(rng);
    REQUIRE(f.add(f.add(a, b), c) == f.add(a, f.add(b, c)));
    REQUIRE(f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c)));
    uint8_t buf[16];
    Field::to_bytes(a, buf);
    REQUIRE(f.from_bytes(buf) == a);
  }
}

TEST_CASE("modulus validation") {
  CHECK_NOTHROW(Field(10007));
  CHECK_THROWS_AS(Field(10009 * 3), std::invalid_argument);
  CHECK_THROWS_AS(Field(2), std::invalid_argument);
  CHECK_THROWS_AS(Field(kProductionModulus - 2), std::invalid_argument);  // even
  // 2^127 - 1 is prime but neither small nor of the supported wide form.
  CHECK_THROWS_AS(Field((static_cast<u128>(1) << 127) - 1), std::invalid_argument);
}

TEST_CASE("prf_stream is deterministic and random-access") {
  const Field& f = Field::production();
  Key16 key;
  for (int i = 0; i < 16; ++i) key[i] = static_cast<uint8_t>(i);
  const Key16 alpha = make_label("alpha"), beta = make_label("beta");

  const auto s1 = prf_stream(f, key, alpha, 8);
  const auto s2 = prf_stream(f, key, alpha, 8);
  CHECK(s1 == s2);
  CHECK(prf_stream(f, key, alpha, 0).empty());
  for (uint64_t j = 0; j < 8; ++j) CHECK(prf_at(f, key, alpha, j) == s1[j]);

  // Pinned with an independent AES implementation (Python cryptography).
  CHECK(s1[0].value == make_u128(0x6731d2762e3dd43fULL, 0xd4ba65ca5ada5716ULL));
  CHECK(s1[5].value == make_u128(0xbd658c3ec934212bULL, 0x404499dd388ddbd6ULL));
  const auto sb = prf_stream(f, key, beta, 1);
  CHECK(sb[0].value == make_u128(0x5cf6101539422898ULL, 0x97c2624e9c084439ULL));
  CHECK(sb[0] != s1[0]);
}

TEST_CASE("prf_stream agrees with direct AES oracle over a small field") {
  const Field f(10007);
  Key16 key{};
  key[3] = 9;
  const Key16 label = make_label("x");
  const auto s = prf_stream(f, key, label, 40);
  for (uint64_t j = 0; j < s.size(); ++j) {
    const u128 block = oracle::aes128_u128(key_to_u128(key), key_to_u128(label) ^ j);
    CHECK(s[j].value == block % 10007);
  }
}
