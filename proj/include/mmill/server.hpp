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


// One half of the two-server deployment. Server A leads: it assigns a
// gap-free sequence number to every registration, write commit and read, and
// server B applies them in that order.

#ifndef MMILL_SERVER_HPP_
#define MMILL_SERVER_HPP_

#include <atomic>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <thread>
#include <vector>

#include "mmill/audit.hpp"
#include "mmill/dpf.hpp"
#include "mmill/field.hpp"
#include "mmill/net.hpp"
#include "mmill/vault.hpp"
#include "mmill/wire.hpp"

namespace mmill {

enum class Role : uint8_t { kA, kB };

struct ServerConfig {
  Role role = Role::kA;
  Endpoint listen;
  // For A: where B listens. Unused by B.
  Endpoint peer;
  Secret32 shared_secret{};
  size_t message_bytes = 160;
  std::optional<u128> test_modulus;
  // Mailboxes registered at startup with addresses derived from the shared
  // secret, so both servers agree without talking. For benchmarks.
  size_t preload = 0;
  // Makes server-local randomness reproducible (tests only).
  std::optional<uint64_t> rng_seed;
  Millis session_timeout{10000};
  Millis peer_dial_timeout{10000};
};

struct ServerStats {
  uint64_t registrations = 0;
  uint64_t writes_accepted = 0;
  uint64_t writes_rejected = 0;
  uint64_t reads = 0;
  uint64_t eval_us = 0;   // DPF evaluation, summed over writes
  uint64_t audit_us = 0;  // sketch plus verifier message and decision
  uint64_t peer_bytes_sent = 0;
  uint64_t peer_bytes_received = 0;
};

struct SeqLogEntry {
  uint64_t seq;
  SeqKind kind;
  RequestId request_id;  // zero for registrations and reads
  uint64_t p;
  friend bool operator==(const SeqLogEntry&, const SeqLogEntry&) = default;
};

// Address of the write-only dummy mailbox for a given shared secret.
VirtualAddress dummy_address_for(const Secret32& secret);
// Seeds a server derives per request id.
AuditSeed sketch_seed_for(const Secret32& secret, const RequestId& id);
AuditSeed challenge_seed_for(const Secret32& secret, const RequestId& id);

class Server {
 public:
  explicit Server(ServerConfig config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds the listen socket and starts serving. A also starts dialing B.
  void start();
  void stop();
  // Bound port (useful with port 0).
  uint16_t port() const;
  bool wait_for_peer(Millis timeout);
  bool peer_connected() const { return peer_up_.load(); }

  const Field& field() const { return *field_; }
  size_t message_elements() const { return elements_; }
  VirtualAddress dummy_address() const { return dummy_; }

  size_t mailbox_count() const;
  Digest public_digest() const;
  Digest full_digest() const;
  Vault vault_copy() const;
  ServerStats stats() const;
  std::vector<SeqLogEntry> seq_log() const;

  // Test hook: adds one to the first ciphertext element of slot p.
  void corrupt_slot(uint64_t p);

 private:
  struct WriteSession;
  struct PendingRead {
    VirtualAddress v;
    std::optional<ReadResult> result;  // nullopt: denied
    std::chrono::steady_clock::time_point at;
  };

  bool is_leader() const { return config_.role == Role::kA; }
  std::unique_ptr<Rng> make_rng() const;

  void accept_loop();
  void spawn(std::function<void()> fn);
  void serve_client(std::shared_ptr<Connection> conn, Frame first);
  void serve_peer(std::shared_ptr<Connection> conn);
  void dial_peer();
  void on_peer_lost();
  std::shared_ptr<Connection> peer() const;

  void handle_register(Connection& conn, const Frame& f);
  void handle_write(Connection& conn, const Frame& f);
  void handle_read(Connection& conn, const Frame& f);

  // Leader only. Runs under seq_mu_: sends the op, waits for the ack, then
  // runs apply() locally if the follower accepted.
  bool sequence(const Frame& propose, uint64_t seq, const std::function<void()>& apply);
  uint64_t next_seq();

  // Follower-side appliers, run on the peer reader thread.
  void apply_reg_sync(Connection& peer, const RegSync& m);
  void apply_propose(Connection& peer, const SeqPropose& m);

  std::shared_ptr<WriteSession> session_for(const RequestId& id, bool create);
  void drop_session(const RequestId& id);
  void send_error(Connection& conn, ErrorCode code);
  void log_op(uint64_t seq, SeqKind kind, const RequestId& id, uint64_t p);

  ServerConfig config_;
  std::unique_ptr<Field> own_field_;
  const Field* field_;
  size_t elements_;
  Dpf dpf_;
  VirtualAddress dummy_;

  mutable std::mutex vault_mu_;
  Vault vault_;

  std::mutex rng_mu_;
  std::unique_ptr<Rng> rng_;

  mutable std::mutex state_mu_;
  std::condition_variable state_cv_;
  std::map<RequestId, std::shared_ptr<WriteSession>> sessions_;
  std::set<RequestId> seen_ids_;
  std::map<uint64_t, std::deque<PendingRead>> pending_reads_;
  std::map<uint64_t, bool> acks_;
  uint64_t applied_seq_ = 0;
  std::vector<SeqLogEntry> log_;
  ServerStats stats_;

  std::mutex seq_mu_;
  uint64_t last_seq_ = 0;

  mutable std::mutex peer_mu_;
  std::shared_ptr<Connection> peer_;
  std::atomic<bool> peer_up_{false};
  std::atomic<bool> peer_lost_{false};

  std::unique_ptr<Listener> listener_;
  std::atomic<bool> running_{false};
  std::mutex threads_mu_;
  std::condition_variable threads_cv_;
  size_t active_handlers_ = 0;
  std::vector<std::thread> threads_;
  std::vector<std::weak_ptr<Connection>> conns_;
};

}  // namespace mmill

#endif  // MMILL_SERVER_HPP_
