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

// One server's mailbox store.
//
// Physical slots are dense; slot 0 is the write-only dummy mailbox used for
// cover traffic. Each slot holds this server's additive share of the
// mailbox, encrypted in additive counter mode over F_p:
//
//   ct = pt + keystream(key, nonce)
//
// Writes add their share rows straight into ct without touching the nonce.
// Re-encryption happens only when a mailbox is read and cleared, which
// bumps the nonce and stores a fresh encryption of zero.

#ifndef MMILL_VAULT_HPP_
#define MMILL_VAULT_HPP_

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mmill/bytes.hpp"
#include "mmill/dpf.hpp"
#include "mmill/field.hpp"

namespace mmill {

using Digest = std::array<uint8_t, 32>;

// Deliberately uninformative: callers cannot tell which check failed.
class AccessDenied : public std::runtime_error {
 public:
  AccessDenied() : std::runtime_error("access denied") {}
};

class AddressCollision : public std::runtime_error {
 public:
  AddressCollision() : std::runtime_error("virtual address already registered") {}
};

std::vector<FieldElement> keystream(const Field& f, const Key16& key, uint64_t nonce,
                                    size_t length);
std::vector<FieldElement> encrypt_share(const Field& f, const Key16& key, uint64_t nonce,
                                        std::span<const FieldElement> pt);
std::vector<FieldElement> decrypt_share(const Field& f, const Key16& key, uint64_t nonce,
                                        std::span<const FieldElement> ct);

struct MailboxRecord {
  VirtualAddress v;
  // Unset on a replica until the owner hands this server its key.
  std::optional<Key16> key;
  uint64_t nonce = 0;
  std::vector<FieldElement> ct;
};

struct ReadResult {
  std::vector<FieldElement> ct;
  uint64_t nonce = 0;
};

struct Registration {
  uint64_t p;
  VirtualAddress v;
};

class Vault {
 public:
  static constexpr uint64_t kDummyIndex = 0;

  // message_elements = L.
  Vault(const Field& f, size_t message_elements);

  const Field& field() const { return *field_; }
  size_t message_elements() const { return elements_; }
  size_t size() const { return records_.size(); }

  // Must run first. The dummy key never leaves this object.
  Registration setup_dummy(Rng& rng);
  Registration setup_dummy(VirtualAddress v, Rng& key_rng);

  // Appends a mailbox at the next physical index. A supplied address that is
  // already active throws AddressCollision; fresh random addresses are
  // resampled on collision.
  Registration register_mailbox(const Key16& key, std::optional<VirtualAddress> v_opt, Rng& rng);

  // Replica path: the slot and address were decided by the leader; the key
  // arrives later through bind_key. Throws if p is not the next index or v is
  // taken.
  void register_pending(uint64_t p, VirtualAddress v);
  // Returns the physical index. Throws AccessDenied if v is unknown or
  // already has a key.
  uint64_t bind_key(VirtualAddress v, const Key16& key);

  // Adds rows [0, rows) of blocks 1..L into the ciphertexts. Column 0 (the
  // audit tag) is ignored. Rows beyond a later registration are allowed to be
  // missing: a write evaluated before a registration leaves the new slot
  // untouched. Throws std::invalid_argument on shape mismatch.
  void apply_write(const FieldMatrix& rows);

  // Returns the current (ct, nonce) and replaces the slot with a fresh
  // encryption of zero under nonce + 1. Throws AccessDenied on any mismatch
  // and for the dummy slot.
  ReadResult read_and_clear(uint64_t p, VirtualAddress v);

  // p for v if v is active and bound to a key.
  std::optional<uint64_t> lookup(VirtualAddress v) const;
  bool contains(VirtualAddress v) const { return index_.count(v) != 0; }
  const MailboxRecord& record(uint64_t p) const { return records_.at(p); }
  // Addresses of slots [0, count) in physical order.
  std::vector<VirtualAddress> addresses(size_t count) const;

  // SHA-256 over (v, nonce) of every slot: must agree across servers.
  Digest public_digest() const;
  // SHA-256 over everything this server stores.
  Digest full_digest() const;

  // [n 8B][per record: v 16B, key 16B, nonce 8B, ct L x 16B], little-endian.
  // An unbound key is written as zeros and read back as unbound.
  void save(std::ostream& out) const;
  static Vault load(const Field& f, size_t message_elements, std::istream& in);

 private:
  void append(MailboxRecord rec);

  const Field* field_;
  size_t elements_;
  std::vector<MailboxRecord> records_;
  std::unordered_map<VirtualAddress, uint64_t, VirtualAddressHash> index_;
};

}  // namespace mmill

#endif  // MMILL_VAULT_HPP_
