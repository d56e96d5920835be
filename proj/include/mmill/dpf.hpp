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

// Tree-based distributed point function over [2^d] (d = 128 in production)
// with vector-of-field-element outputs.
//
// Each level of the tree expands a 128-bit seed with a fixed-key AES PRG
// into a child seed and a control bit. A key carries one seed correction
// word and two control-bit corrections per level. At the leaf, the seed is
// converted into payload_blocks field elements with prf_stream under a
// fixed label and corrected with the payload correction word. Party B
// negates its leaf output so that the two parties' evaluations add up to
// the point function.

#ifndef MMILL_DPF_HPP_
#define MMILL_DPF_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "mmill/bytes.hpp"
#include "mmill/field.hpp"

namespace mmill {

inline constexpr int kAddressBits = 128;
// Message bytes packed per field element. 15 bytes stay below any modulus
// above 2^120, so packing never wraps.
inline constexpr size_t kPackedBytesPerElement = 15;

struct VirtualAddress {
  u128 value = 0;
  friend bool operator==(VirtualAddress, VirtualAddress) = default;
  friend auto operator<=>(VirtualAddress, VirtualAddress) = default;
};

struct VirtualAddressHash {
  size_t operator()(VirtualAddress v) const noexcept {
    return static_cast<size_t>(lo64(v.value) ^ (hi64(v.value) * 0x9e3779b97f4a7c15ULL));
  }
};

enum class Party : uint8_t { kA = 0, kB = 1 };

struct CorrectionWord {
  u128 seed = 0;
  bool t_left = false;
  bool t_right = false;
};

struct DpfKey {
  Party party = Party::kA;
  u128 root_seed = 0;
  std::vector<CorrectionWord> levels;
  std::vector<FieldElement> payload_cw;

  static size_t serialized_size(int domain_bits, size_t payload_blocks) {
    return 1 + 16 + static_cast<size_t>(domain_bits) * 17 + 16 * payload_blocks;
  }

  // [party 1B][root_seed 16B][per level: seed_cw 16B, control byte][payload_cw]
  Bytes serialize() const;
  // Validates exact length, party byte, control-byte high bits and the
  // canonical form of every payload element. Throws DecodeError.
  static DpfKey deserialize(const Field& f, std::span<const uint8_t> in, int domain_bits,
                            size_t payload_blocks);
};

// Row-major n x cols matrix of field elements.
class FieldMatrix {
 public:
  FieldMatrix() = default;
  FieldMatrix(size_t rows, size_t cols) : rows_(rows), cols_(cols), data_(rows * cols) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  std::span<FieldElement> row(size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const FieldElement> row(size_t i) const { return {data_.data() + i * cols_, cols_}; }
  FieldElement& at(size_t i, size_t j) { return data_[i * cols_ + j]; }
  FieldElement at(size_t i, size_t j) const { return data_[i * cols_ + j]; }
  std::vector<FieldElement> column(size_t j) const;

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<FieldElement> data_;
};

class Dpf {
 public:
  // payload_blocks = L + 1 (audit tag plus L message blocks).
  Dpf(const Field& field, int domain_bits, size_t payload_blocks);

  const Field& field() const { return *field_; }
  int domain_bits() const { return domain_bits_; }
  size_t payload_blocks() const { return payload_blocks_; }
  size_t key_size() const { return DpfKey::serialized_size(domain_bits_, payload_blocks_); }

  // Keys whose evaluations sum to payload at `target` and to zero elsewhere.
  std::pair<DpfKey, DpfKey> gen(VirtualAddress target, std::span<const FieldElement> payload,
                                Rng& rng) const;

  std::vector<FieldElement> eval(const DpfKey& key, VirtualAddress x) const;

  // Row i is eval(key, addrs[i]); rows keep the input order.
  FieldMatrix eval_many(const DpfKey& key, std::span<const VirtualAddress> addrs) const;

  // Leaf-seed to output conversion, before correction and sign.
  std::vector<FieldElement> convert(u128 leaf_seed) const;

 private:
  void check_key(const DpfKey& key) const;
  bool bit(VirtualAddress x, int level) const {
    return ((x.value >> (domain_bits_ - 1 - level)) & 1) != 0;
  }
  void finish_leaf(const DpfKey& key, u128 seed, bool t, std::span<FieldElement> out) const;

  const Field* field_;
  int domain_bits_;
  size_t payload_blocks_;
};

// Number of payload elements L needed for messages of `message_bytes`.
size_t payload_elements_for(size_t message_bytes);

// Message packing: bytes -> L elements of 15 little-endian bytes each, the
// final one zero-padded. Requires a modulus above 2^120.
std::vector<FieldElement> pack_message(const Field& f, std::span<const uint8_t> msg,
                                       size_t message_bytes);
// Inverse of pack_message; throws DecodeError when an element does not fit
// in 15 bytes or the padding region is nonzero.
Bytes unpack_message(std::span<const FieldElement> blocks, size_t message_bytes);

// [1, pack_message(msg)]: the honest write payload with its audit tag.
std::vector<FieldElement> make_payload(const Field& f, std::span<const uint8_t> msg,
                                       size_t message_bytes);

}  // namespace mmill

#endif  // MMILL_DPF_HPP_
