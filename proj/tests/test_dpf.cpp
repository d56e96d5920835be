#include <set>

#include "doctest.h"
#include "mmill/dpf.hpp"
#include "mmill/hash.hpp"

using namespace mmill;

namespace {

std::vector<FieldElement> random_payload(const Field& f, size_t blocks, Rng& rng) {
  std::vector<FieldElement> p(blocks);
  p[0] = f.one();
  for (size_t i = 1; i < blocks; ++i) p[i] = f.random(rng);
  return p;
}

std::vector<FieldElement> sum(const Field& f, std::span<const FieldElement> a,
                              std::span<const FieldElement> b) {
  std::vector<FieldElement> out(a.begin(), a.end());
  add_into(f, out, b);
  return out;
}

bool all_zero(std::span<const FieldElement> v) {
  for (auto x : v) {
    if (!x.is_zero()) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("exhaustive correctness on an 8-bit domain") {
  const Field& f = Field::production();
  const Dpf dpf(f, 8, 4);
  SeededRng rng(20);
  for (int trial = 0; trial < 20; ++trial) {
    const VirtualAddress v{rng.uniform(256)};
    const auto payload = random_payload(f, 4, rng);
    const auto [ka, kb] = dpf.gen(v, payload, rng);
    int nonzero = 0;
    for (unsigned x = 0; x < 256; ++x) {
      const auto s = sum(f, dpf.eval(ka, {x}), dpf.eval(kb, {x}));
      if (x == v.value) {
        CHECK(s == payload);
      } else {
        REQUIRE(all_zero(s));
      }
      nonzero += all_zero(s) ? 0 : 1;
    }
    CHECK(nonzero == 1);
  }
}

TEST_CASE("exhaustive correctness on every domain up to 10 bits") {
  const Field f(10007);
  SeededRng rng(21);
  for (int bits = 1; bits <= 10; ++bits) {
    const Dpf dpf(f, bits, 2);
    const u128 domain = static_cast<u128>(1) << bits;
    const VirtualAddress v{rng.uniform(static_cast<uint64_t>(domain))};
    const std::vector<FieldElement> payload{f.one(), f.random(rng)};
    const auto [ka, kb] = dpf.gen(v, payload, rng);
    std::vector<VirtualAddress> all;
    for (u128 x = 0; x < domain; ++x) all.push_back({x});
    const auto ma = dpf.eval_many(ka, all), mb = dpf.eval_many(kb, all);
    for (size_t x = 0; x < all.size(); ++x) {
      const auto s = sum(f, ma.row(x), mb.row(x));
      REQUIRE(s == (x == v.value ? payload : std::vector<FieldElement>(2, f.zero())));
    }
  }
}

TEST_CASE("spot checks on the 2^128 domain") {
  const Field& f = Field::production();
  const Dpf dpf(f, kAddressBits, 12);
  SeededRng rng(22);
  const VirtualAddress v{rng.next_u128()};
  const auto payload = random_payload(f, 12, rng);
  const auto [ka, kb] = dpf.gen(v, payload, rng);
  CHECK(sum(f, dpf.eval(ka, v), dpf.eval(kb, v)) == payload);
  // Neighbours differing in the first, a middle, and the last bit.
  for (int bit : {0, 63, 64, 127}) {
    const VirtualAddress x{v.value ^ (static_cast<u128>(1) << bit)};
    CHECK(all_zero(sum(f, dpf.eval(ka, x), dpf.eval(kb, x))));
  }
  for (int i = 0; i < 50; ++i) {
    const VirtualAddress x{rng.next_u128()};
    CHECK(all_zero(sum(f, dpf.eval(ka, x), dpf.eval(kb, x))));
  }
  // Determinism.
  CHECK(dpf.eval(ka, v) == dpf.eval(ka, v));
}

TEST_CASE("eval_many rows match eval, column 0 is the audit vector") {
  const Field& f = Field::production();
  const Dpf dpf(f, kAddressBits, 3);
  SeededRng rng(23);
  const VirtualAddress v{rng.next_u128()};
  const auto payload = random_payload(f, 3, rng);
  const auto [ka, kb] = dpf.gen(v, payload, rng);

  SUBCASE("single target row") {
    const std::vector<VirtualAddress> addrs{v};
    const auto m = dpf.eval_many(ka, addrs);
    REQUIRE(m.rows() == 1);
    CHECK(std::vector<FieldElement>(m.row(0).begin(), m.row(0).end()) == dpf.eval(ka, v));
  }

  SUBCASE("inactive target: all rows sum to zero") {
    std::vector<VirtualAddress> addrs;
    for (int i = 0; i < 130; ++i) addrs.push_back({rng.next_u128()});
    const auto ma = dpf.eval_many(ka, addrs), mb = dpf.eval_many(kb, addrs);
    for (size_t i = 0; i < addrs.size(); ++i) CHECK(all_zero(sum(f, ma.row(i), mb.row(i))));
    const auto col = ma.column(0);
    for (size_t i = 0; i < addrs.size(); ++i) CHECK(col[i] == dpf.eval(ka, addrs[i])[0]);
  }
}

TEST_CASE("10^4 active addresses plus the target: exactly one nonzero row") {
  const Field& f = Field::production();
  const Dpf dpf(f, kAddressBits, 2);
  SeededRng rng(24);
  const VirtualAddress v{rng.next_u128()};
  const auto payload = random_payload(f, 2, rng);
  const auto [ka, kb] = dpf.gen(v, payload, rng);
  std::vector<VirtualAddress> addrs;
  for (int i = 0; i < 10000; ++i) addrs.push_back({rng.next_u128()});
  const size_t target_row = 4321;
  addrs.insert(addrs.begin() + target_row, v);
  const auto ma = dpf.eval_many(ka, addrs), mb = dpf.eval_many(kb, addrs);
  size_t nonzero = 0;
  for (size_t i = 0; i < addrs.size(); ++i) {
    const auto s = sum(f, ma.row(i), mb.row(i));
    if (!all_zero(s)) {
      ++nonzero;
      CHECK(i == target_row);
      CHECK(s == payload);
    }
  }
  CHECK(nonzero == 1);
}

TEST_CASE("key serialization: size formula, round trip, invariance") {
  const Field& f = Field::production();
  const size_t L = payload_elements_for(160);
  CHECK(L == 11);
  const Dpf dpf(f, kAddressBits, L + 1);
  CHECK(dpf.key_size() == 1 + 16 + 128 * 17 + 16 * 12);
  CHECK(dpf.key_size() == 2385);

  SeededRng rng(25);
  for (int i = 0; i < 20; ++i) {
    const VirtualAddress v{rng.next_u128()};
    const auto [ka, kb] = dpf.gen(v, random_payload(f, L + 1, rng), rng);
    const Bytes a = ka.serialize(), b = kb.serialize();
    REQUIRE(a.size() == 2385);
    REQUIRE(b.size() == 2385);
    const DpfKey back = DpfKey::deserialize(f, a, kAddressBits, L + 1);
    CHECK(back.serialize() == a);
    CHECK(dpf.eval(back, v) == dpf.eval(ka, v));
  }
}

TEST_CASE("malformed keys are rejected") {
  const Field& f = Field::production();
  const Dpf dpf(f, 16, 2);
  SeededRng rng(26);
  const auto [ka, kb] = dpf.gen({77}, std::vector<FieldElement>{f.one(), f.one()}, rng);
  const Bytes good = ka.serialize();

  Bytes shorter(good.begin(), good.end() - 1);
  CHECK_THROWS_AS(DpfKey::deserialize(f, shorter, 16, 2), DecodeError);
  Bytes longer = good;
  longer.push_back(0);
  CHECK_THROWS_AS(DpfKey::deserialize(f, longer, 16, 2), DecodeError);
  Bytes bad_party = good;
  bad_party[0] = 2;
  CHECK_THROWS_AS(DpfKey::deserialize(f, bad_party, 16, 2), DecodeError);
  Bytes bad_control = good;
  bad_control[1 + 16 + 16] = 0x04;
  CHECK_THROWS_AS(DpfKey::deserialize(f, bad_control, 16, 2), DecodeError);
  Bytes non_canonical = good;
  std::fill(non_canonical.end() - 16, non_canonical.end(), 0xff);
  CHECK_THROWS_AS(DpfKey::deserialize(f, non_canonical, 16, 2), DecodeError);

  const Dpf wrong(f, 17, 2);
  CHECK_THROWS_AS(wrong.eval(ka, {1}), std::invalid_argument);
  CHECK_THROWS_AS(dpf.gen({1u << 16}, std::vector<FieldElement>{f.one(), f.one()}, rng),
                  std::invalid_argument);
}

TEST_CASE("message packing") {
  const Field& f = Field::production();
  SeededRng rng(27);
  for (size_t B : {size_t{1}, size_t{15}, size_t{16}, size_t{160}, size_t{1024}}) {
    Bytes msg(B);
    rng.fill(msg);
    const auto packed = pack_message(f, msg, B);
    CHECK(packed.size() == payload_elements_for(B));
    for (auto x : packed) CHECK((x.value >> 120) == 0);
    CHECK(unpack_message(packed, B) == msg);
  }
  // Short messages are zero padded.
  const Bytes hi{'h', 'i'};
  Bytes padded(20, 0);
  padded[0] = 'h';
  padded[1] = 'i';
  CHECK(unpack_message(pack_message(f, hi, 20), 20) == padded);

  auto packed = pack_message(f, hi, 20);
  packed[1].value |= static_cast<u128>(1) << 120;
  CHECK_THROWS_AS(unpack_message(packed, 20), DecodeError);
  packed = pack_message(f, hi, 20);
  packed[1].value |= static_cast<u128>(1) << 100;  // byte 12 of block 1 = index 27 > 20
  CHECK_THROWS_AS(unpack_message(packed, 20), DecodeError);

  CHECK_THROWS_AS(pack_message(Field(10007), hi, 20), std::invalid_argument);
  CHECK(make_payload(f, hi, 20)[0] == f.one());
}

TEST_CASE("pinned generation transcript (identical on every AES backend)") {
  const Field& f = Field::production();
  const Dpf dpf(f, kAddressBits, 3);
  SeededRng rng(2024);
  const VirtualAddress v{make_u128(0x0123456789abcdefULL, 0xfedcba9876543210ULL)};
  const std::vector<FieldElement> payload{f.one(), {5}, {7}};
  const auto [ka, kb] = dpf.gen(v, payload, rng);
  Sha256 h;
  h.update(ka.serialize()).update(kb.serialize());
  for (auto x : dpf.eval(ka, {12345})) h.update_u128(x.value);
  const auto digest = h.finish();
  CHECK(to_hex(digest) == "f43f3f022ca2abc10362b4ace2469ae686f33837b1613265c9b8acebdd181dde");
}
