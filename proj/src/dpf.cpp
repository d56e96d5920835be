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

#include "mmill/dpf.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>

#include "mmill/kernels/aes.hpp"

namespace mmill {
namespace {

const Key16 kConvertLabel = make_label("mmill.convert");

// Addresses are walked down the tree this many at a time.
constexpr size_t kBatch = 64;

inline bool take_lsb(u128& x) {
  const bool b = (x & 1) != 0;
  x &= ~static_cast<u128>(1);
  return b;
}

}  // namespace

Bytes DpfKey::serialize() const {
  ByteWriter w;
  w.u8(static_cast<uint8_t>(party));
  w.u128le(root_seed);
  for (const CorrectionWord& cw : levels) {
    w.u128le(cw.seed);
    w.u8(static_cast<uint8_t>((cw.t_left ? 1 : 0) | (cw.t_right ? 2 : 0)));
  }
  for (FieldElement x : payload_cw) w.u128le(x.value);
  return w.take();
}

DpfKey DpfKey::deserialize(const Field& f, std::span<const uint8_t> in, int domain_bits,
                           size_t payload_blocks) {
  if (in.size() != serialized_size(domain_bits, payload_blocks)) {
    throw DecodeError("dpf key: wrong length");
  }
  ByteReader r(in);
  DpfKey key;
  const uint8_t party = r.u8();
  if (party > 1) throw DecodeError("dpf key: bad party byte");
  key.party = static_cast<Party>(party);
  key.root_seed = r.u128le();
  key.levels.resize(domain_bits);
  for (CorrectionWord& cw : key.levels) {
    cw.seed = r.u128le();
    const uint8_t bits = r.u8();
    if (bits > 3) throw DecodeError("dpf key: bad control byte");
    cw.t_left = (bits & 1) != 0;
    cw.t_right = (bits & 2) != 0;
  }
  key.payload_cw.resize(payload_blocks);
  for (FieldElement& x : key.payload_cw) x = f.decode_canonical(r.bytes(16));
  r.expect_end();
  return key;
}

std::vector<FieldElement> FieldMatrix::column(size_t j) const {
  std::vector<FieldElement> out(rows_);
  for (size_t i = 0; i < rows_; ++i) out[i] = at(i, j);
  return out;
}

Dpf::Dpf(const Field& field, int domain_bits, size_t payload_blocks)
    : field_(&field), domain_bits_(domain_bits), payload_blocks_(payload_blocks) {
  if (domain_bits < 1 || domain_bits > kAddressBits) {
    throw std::invalid_argument("dpf: domain bits must be in [1, 128]");
  }
  if (payload_blocks == 0) throw std::invalid_argument("dpf: empty payload");
}

std::vector<FieldElement> Dpf::convert(u128 leaf_seed) const {
  return prf_stream(*field_, u128_to_key(leaf_seed), kConvertLabel, payload_blocks_);
}

std::pair<DpfKey, DpfKey> Dpf::gen(VirtualAddress target, std::span<const FieldElement> payload,
                                   Rng& rng) const {
  if (payload.size() != payload_blocks_) throw std::invalid_argument("dpf gen: payload size");
  if (domain_bits_ < kAddressBits && (target.value >> domain_bits_) != 0) {
    throw std::invalid_argument("dpf gen: target outside domain");
  }
  const auto& aes = kernels::active_aes();

  std::array<DpfKey, 2> keys;
  u128 seed[2] = {rng.next_u128(), rng.next_u128()};
  bool t[2] = {false, true};
  for (int b = 0; b < 2; ++b) {
    keys[b].party = static_cast<Party>(b);
    keys[b].root_seed = seed[b];
    keys[b].levels.resize(domain_bits_);
  }

  for (int level = 0; level < domain_bits_; ++level) {
    const bool a = bit(target, level);
    // child[b][side], expanded from party b's current seed.
    const u128 in[4] = {seed[0], seed[0], seed[1], seed[1]};
    const uint8_t side[4] = {0, 1, 0, 1};
    u128 out[4];
    aes.prg_expand(std::span<const u128>(in), std::span<const uint8_t>(side), std::span<u128>(out));
    u128 child[2][2] = {{out[0], out[1]}, {out[2], out[3]}};
    bool tc[2][2];
    for (int b = 0; b < 2; ++b) {
      for (int s = 0; s < 2; ++s) tc[b][s] = take_lsb(child[b][s]);
    }
    const int keep = a ? 1 : 0, lose = 1 - keep;

    CorrectionWord cw;
    cw.seed = child[0][lose] ^ child[1][lose];
    cw.t_left = tc[0][0] ^ tc[1][0] ^ a ^ true;
    cw.t_right = tc[0][1] ^ tc[1][1] ^ a;
    const bool t_keep_cw = a ? cw.t_right : cw.t_left;

    for (int b = 0; b < 2; ++b) {
      seed[b] = child[b][keep] ^ (t[b] ? cw.seed : 0);
      t[b] = tc[b][keep] ^ (t[b] && t_keep_cw);
    }
    keys[0].levels[level] = cw;
    keys[1].levels[level] = cw;
  }

  const auto conv0 = convert(seed[0]);
  const auto conv1 = convert(seed[1]);
  std::vector<FieldElement> cw(payload_blocks_);
  for (size_t j = 0; j < payload_blocks_; ++j) {
    FieldElement x = field_->add(field_->sub(payload[j], conv0[j]), conv1[j]);
    cw[j] = t[1] ? field_->neg(x) : x;
  }
  keys[0].payload_cw = cw;
  keys[1].payload_cw = std::move(cw);
  return {std::move(keys[0]), std::move(keys[1])};
}

void Dpf::check_key(const DpfKey& key) const {
  if (key.levels.size() != static_cast<size_t>(domain_bits_) ||
      key.payload_cw.size() != payload_blocks_) {
    throw std::invalid_argument("dpf key does not match parameters");
  }
}

void Dpf::finish_leaf(const DpfKey& key, u128 seed, bool t, std::span<FieldElement> out) const {
  prf_range(*field_, u128_to_key(seed), kConvertLabel, 0, out);
  if (t) add_into(*field_, out, key.payload_cw);
  if (key.party == Party::kB) {
    for (FieldElement& x : out) x = field_->neg(x);
  }
}

std::vector<FieldElement> Dpf::eval(const DpfKey& key, VirtualAddress x) const {
  check_key(key);
  const auto& aes = kernels::active_aes();
  u128 seed = key.root_seed;
  bool t = key.party == Party::kB;
  for (int level = 0; level < domain_bits_; ++level) {
    const uint8_t side = bit(x, level) ? 1 : 0;
    aes.prg_expand(std::span<const u128>(&seed, 1), std::span<const uint8_t>(&side, 1),
                   std::span<u128>(&seed, 1));
    bool tc = take_lsb(seed);
    if (t) {
      const CorrectionWord& cw = key.levels[level];
      seed ^= cw.seed;
      tc ^= side ? cw.t_right : cw.t_left;
    }
    t = tc;
  }
  std::vector<FieldElement> out(payload_blocks_);
  finish_leaf(key, seed, t, out);
  return out;
}

FieldMatrix Dpf::eval_many(const DpfKey& key, std::span<const VirtualAddress> addrs) const {
  check_key(key);
  const auto& aes = kernels::active_aes();
  FieldMatrix out(addrs.size(), payload_blocks_);
  std::array<u128, kBatch> seed;
  std::array<uint8_t, kBatch> side;
  std::array<bool, kBatch> t;

  for (size_t base = 0; base < addrs.size(); base += kBatch) {
    const size_t m = std::min(kBatch, addrs.size() - base);
    std::fill_n(seed.begin(), m, key.root_seed);
    std::fill_n(t.begin(), m, key.party == Party::kB);
    for (int level = 0; level < domain_bits_; ++level) {
      const CorrectionWord& cw = key.levels[level];
      for (size_t j = 0; j < m; ++j) side[j] = bit(addrs[base + j], level) ? 1 : 0;
      aes.prg_expand(std::span<const u128>(seed.data(), m),
                     std::span<const uint8_t>(side.data(), m), std::span<u128>(seed.data(), m));
      for (size_t j = 0; j < m; ++j) {
        bool tc = take_lsb(seed[j]);
        if (t[j]) {
          seed[j] ^= cw.seed;
          tc ^= side[j] ? cw.t_right : cw.t_left;
        }
        t[j] = tc;
      }
    }
    for (size_t j = 0; j < m; ++j) finish_leaf(key, seed[j], t[j], out.row(base + j));
  }
  return out;
}

size_t payload_elements_for(size_t message_bytes) {
  return (message_bytes + kPackedBytesPerElement - 1) / kPackedBytesPerElement;
}

std::vector<FieldElement> pack_message(const Field& f, std::span<const uint8_t> msg,
                                       size_t message_bytes) {
  if (hi64(f.modulus()) >> 56 == 0) {
    throw std::invalid_argument("message packing needs a modulus above 2^120");
  }
  if (msg.size() > message_bytes) throw std::invalid_argument("message longer than slot");
  const size_t elements = payload_elements_for(message_bytes);
  std::vector<FieldElement> out(elements);
  for (size_t e = 0; e < elements; ++e) {
    uint8_t chunk[16] = {};
    for (size_t k = 0; k < kPackedBytesPerElement; ++k) {
      const size_t i = e * kPackedBytesPerElement + k;
      if (i < msg.size()) chunk[k] = msg[i];
    }
    out[e] = {load_u128_le(chunk)};
  }
  return out;
}

Bytes unpack_message(std::span<const FieldElement> blocks, size_t message_bytes) {
  if (blocks.size() != payload_elements_for(message_bytes)) {
    throw DecodeError("unpack: wrong element count");
  }
  Bytes out(message_bytes);
  for (size_t e = 0; e < blocks.size(); ++e) {
    uint8_t chunk[16];
    store_u128_le(blocks[e].value, chunk);
    if (chunk[15] != 0) throw DecodeError("unpack: element exceeds 15 bytes");
    for (size_t k = 0; k < kPackedBytesPerElement; ++k) {
      const size_t i = e * kPackedBytesPerElement + k;
      if (i < message_bytes) {
        out[i] = chunk[k];
      } else if (chunk[k] != 0) {
        throw DecodeError("unpack: nonzero padding");
      }
    }
  }
  return out;
}

std::vector<FieldElement> make_payload(const Field& f, std::span<const uint8_t> msg,
                                       size_t message_bytes) {
  std::vector<FieldElement> payload{f.one()};
  const auto packed = pack_message(f, msg, message_bytes);
  payload.insert(payload.end(), packed.begin(), packed.end());
  return payload;
}

}  // namespace mmill
