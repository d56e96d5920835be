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


// Client side: registration, private sends, mailbox checks and cover traffic.

#ifndef MMILL_CLIENT_HPP_
#define MMILL_CLIENT_HPP_

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "mmill/audit.hpp"
#include "mmill/dpf.hpp"
#include "mmill/field.hpp"
#include "mmill/net.hpp"
#include "mmill/wire.hpp"

namespace mmill {

inline constexpr size_t kMacBytes = 16;

// [p 8B][v 16B][k_A 16B][k_B 16B][flag 1B][master_secret 32B if flag]
struct MailboxCredential {
  uint64_t p = 0;
  VirtualAddress v;
  Key16 k_a{};
  Key16 k_b{};
  std::optional<Secret32> master_secret;

  Bytes serialize() const;
  static MailboxCredential parse(std::span<const uint8_t> in);
};

// What a sender needs: [p 8B][v 16B][flag 1B][master_secret 32B if flag]
struct MailboxAddress {
  uint64_t p = 0;
  VirtualAddress v;
  std::optional<Secret32> master_secret;

  Bytes serialize() const;
  static MailboxAddress parse(std::span<const uint8_t> in);
};

MailboxAddress address_of(const MailboxCredential& cred);

Key16 derive_mac_key(const Secret32& master_secret);

struct SendTarget {
  uint64_t p = 0;
  VirtualAddress v;
  std::optional<Key16> mac_key;

  static SendTarget to(const MailboxAddress& a);
  static SendTarget dummy(VirtualAddress v) { return {0, v, std::nullopt}; }
};

// msg || 0x80 || zeros, then the tag if a MAC key is given; always B bytes.
Bytes seal_body(std::span<const uint8_t> msg, const std::optional<Key16>& mac_key,
                size_t message_bytes);

struct CheckResult {
  enum class Kind { kEmpty, kMessage, kIntegrityFailure };
  Kind kind = Kind::kEmpty;
  Bytes message;
};

// Inverse of seal_body on a decrypted plaintext.
CheckResult open_body(std::span<const uint8_t> body, const std::optional<Key16>& mac_key);

class ClientError : public std::runtime_error {
 public:
  explicit ClientError(const std::string& what, std::optional<ErrorCode> code = std::nullopt)
      : std::runtime_error(what), code_(code) {}
  std::optional<ErrorCode> code() const { return code_; }

 private:
  std::optional<ErrorCode> code_;
};

enum class SendStatus { kAccepted, kRejected, kSeedMismatch };
std::string_view to_string(SendStatus s);

struct SendTimings {
  uint64_t gen_us = 0;    // DPF key generation plus the two local evaluations
  uint64_t audit_us = 0;  // client checks plus proof generation
  uint64_t total_us = 0;  // whole round trip
};

// Keys and audit inputs for one write, computed before any network traffic.
struct PreparedWrite {
  RequestId id{};
  uint64_t p = 0;
  Bytes key_a;
  Bytes key_b;
  FieldElement w_a;
  FieldElement w_b;
};

struct Traffic {
  uint64_t sent_a = 0, received_a = 0, sent_b = 0, received_b = 0;
  uint64_t total() const { return sent_a + received_a + sent_b + received_b; }
};

struct ClientOptions {
  Endpoint server_a;
  Endpoint server_b;
  size_t message_bytes = 160;
  const Field* field = nullptr;  // production field when null
  Millis timeout{30000};
  std::optional<uint64_t> rng_seed;  // tests only
};

class Client {
 public:
  explicit Client(ClientOptions options);
  ~Client();

  size_t message_bytes() const { return options_.message_bytes; }
  size_t max_message(bool with_mac) const;

  MailboxCredential register_mailbox(bool with_master_secret,
                                     std::optional<VirtualAddress> v_opt = std::nullopt);

  SendStatus send(const SendTarget& target, std::span<const uint8_t> msg);
  SendStatus cover_send(const SendTarget& dummy);

  // body must be exactly B bytes.
  PreparedWrite prepare(const SendTarget& target, std::span<const uint8_t> body);
  // Runs the protocol for an already prepared write; raw keys are sent as
  // given, so tests can submit malformed or malicious ones.
  SendStatus submit(const PreparedWrite& w);

  CheckResult check(const MailboxCredential& cred);

  const SendTimings& last_timings() const { return timings_; }
  Traffic traffic() const;

 private:
  Connection& conn(int which);
  void reset();
  void send_to(int which, const Frame& f);
  Frame expect(int which, MsgType type);

  ClientOptions options_;
  const Field* field_;
  size_t elements_;
  Dpf dpf_;
  std::unique_ptr<Rng> rng_;
  std::shared_ptr<Connection> conns_[2];
  Traffic closed_traffic_;
  SendTimings timings_;
};

}  // namespace mmill

#endif  // MMILL_CLIENT_HPP_
