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

#include "mmill/vault.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "mmill/hash.hpp"

namespace mmill {

std::vector<FieldElement> keystream(const Field& f, const Key16& key, uint64_t nonce,
                                    size_t length) {
  // Block j is keyed on the 16-byte counter [j: 8B LE][nonce: 8B LE].
  return prf_stream(f, key, u128_to_key(static_cast<u128>(nonce) << 64), length);
}

std::vector<FieldElement> encrypt_share(const Field& f, const Key16& key, uint64_t nonce,
                                        std::span<const FieldElement> pt) {
  auto out = keystream(f, key, nonce, pt.size());
  add_into(f, out, pt);
  return out;
}

std::vector<FieldElement> decrypt_share(const Field& f, const Key16& key, uint64_t nonce,
                                        std::span<const FieldElement> ct) {
  std::vector<FieldElement> out(ct.begin(), ct.end());
  sub_into(f, out, keystream(f, key, nonce, ct.size()));
  return out;
}

Vault::Vault(const Field& f, size_t message_elements) : field_(&f), elements_(message_elements) {
  if (message_elements == 0) throw std::invalid_argument("vault: zero-length mailboxes");
}

void Vault::append(MailboxRecord rec) {
  index_.emplace(rec.v, records_.size());
  records_.push_back(std::move(rec));
}

Registration Vault::setup_dummy(Rng& rng) {
  const VirtualAddress v{rng.next_u128()};
  return setup_dummy(v, rng);
}

Registration Vault::setup_dummy(VirtualAddress v, Rng& key_rng) {
  if (!records_.empty()) throw std::logic_error("vault: dummy must be the first slot");
  const Key16 key = key_rng.next_key();
  append({v, key, 0, keystream(*field_, key, 0, elements_)});
  return {kDummyIndex, v};
}

Registration Vault::register_mailbox(const Key16& key, std::optional<VirtualAddress> v_opt,
                                     Rng& rng) {
  if (records_.empty()) throw std::logic_error("vault: setup_dummy first");
  VirtualAddress v;
  if (v_opt) {
    if (contains(*v_opt)) throw AddressCollision();
    v = *v_opt;
  } else {
    do {
      v = {rng.next_u128()};
    } while (contains(v));
  }
  const uint64_t p = records_.size();
  append({v, key, 0, keystream(*field_, key, 0, elements_)});
  return {p, v};
}

void Vault::register_pending(uint64_t p, VirtualAddress v) {
  if (records_.empty()) throw std::logic_error("vault: setup_dummy first");
  if (p != records_.size()) throw std::invalid_argument("vault: replicated index out of order");
  if (contains(v)) throw AddressCollision();
  append({v, std::nullopt, 0, std::vector<FieldElement>(elements_, field_->zero())});
}

uint64_t Vault::bind_key(VirtualAddress v, const Key16& key) {
  auto it = index_.find(v);
  if (it == index_.end() || it->second == kDummyIndex) throw AccessDenied();
  MailboxRecord& rec = records_[it->second];
  if (rec.key) throw AccessDenied();
  // Writes that landed before the key arrived are plaintext shares; adding
  // the keystream now encrypts them under the current nonce.
  add_into(*field_, rec.ct, keystream(*field_, key, rec.nonce, elements_));
  rec.key = key;
  return it->second;
}

void Vault::apply_write(const FieldMatrix& rows) {
  if (rows.cols() != elements_ + 1) throw std::invalid_argument("apply_write: column count");
  if (rows.rows() > records_.size()) throw std::invalid_argument("apply_write: row count");
  for (size_t p = 0; p < rows.rows(); ++p) {
    add_into(*field_, records_[p].ct, rows.row(p).subspan(1));
  }
}

ReadResult Vault::read_and_clear(uint64_t p, VirtualAddress v) {
  if (p == kDummyIndex || p >= records_.size()) throw AccessDenied();
  MailboxRecord& rec = records_[p];
  if (rec.v != v || !rec.key) throw AccessDenied();
  ReadResult out{std::move(rec.ct), rec.nonce};
  rec.nonce += 1;
  rec.ct = keystream(*field_, *rec.key, rec.nonce, elements_);
  return out;
}

std::optional<uint64_t> Vault::lookup(VirtualAddress v) const {
  auto it = index_.find(v);
  if (it == index_.end() || !records_[it->second].key) return std::nullopt;
  return it->second;
}

std::vector<VirtualAddress> Vault::addresses(size_t count) const {
  count = std::min(count, records_.size());
  std::vector<VirtualAddress> out(count);
  for (size_t i = 0; i < count; ++i) out[i] = records_[i].v;
  return out;
}

Digest Vault::public_digest() const {
  Sha256 h;
  h.update_u64(records_.size());
  for (const MailboxRecord& r : records_) h.update_u128(r.v.value).update_u64(r.nonce);
  return h.finish();
}

Digest Vault::full_digest() const {
  Sha256 h;
  h.update_u64(records_.size());
  for (const MailboxRecord& r : records_) {
    h.update_u128(r.v.value).update_u64(r.nonce);
    h.update_u64(r.key ? 1 : 0);
    if (r.key) h.update(*r.key);
    for (FieldElement x : r.ct) h.update_u128(x.value);
  }
  return h.finish();
}

void Vault::save(std::ostream& out) const {
  ByteWriter w;
  w.u64le(records_.size());
  for (const MailboxRecord& r : records_) {
    w.u128le(r.v.value);
    w.bytes(r.key.value_or(Key16{}));
    w.u64le(r.nonce);
    for (FieldElement x : r.ct) w.u128le(x.value);
  }
  const Bytes& b = w.view();
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
  if (!out) throw std::runtime_error("vault snapshot: write failed");
}

Vault Vault::load(const Field& f, size_t message_elements, std::istream& in) {
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ByteReader r(data);
  Vault vault(f, message_elements);
  const uint64_t n = r.u64le();
  const size_t record_bytes = 16 + 16 + 8 + 16 * message_elements;
  if (n == 0 || r.remaining() != n * record_bytes) {
    throw DecodeError("vault snapshot: size mismatch");
  }
  for (uint64_t p = 0; p < n; ++p) {
    MailboxRecord rec;
    rec.v = {r.u128le()};
    Key16 key;
    auto kb = r.bytes(16);
    std::copy(kb.begin(), kb.end(), key.begin());
    if (key != Key16{}) rec.key = key;
    rec.nonce = r.u64le();
    rec.ct.resize(message_elements);
    for (FieldElement& x : rec.ct) x = f.decode_canonical(r.bytes(16));
    if (vault.contains(rec.v)) throw DecodeError("vault snapshot: duplicate address");
    vault.append(std::move(rec));
  }
  return vault;
}

}  // namespace mmill
