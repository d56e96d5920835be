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


#include "mmill/server.hpp"

#include <chrono>

#include "mmill/hash.hpp"

namespace mmill {
namespace {

using Clock = std::chrono::steady_clock;

constexpr Millis kPoll{200};

Key16 secret_prf(const Secret32& secret, std::string_view label, std::span<const uint8_t> data) {
  Bytes msg(label.begin(), label.end());
  msg.insert(msg.end(), data.begin(), data.end());
  return truncate16(hmac_sha256(secret, msg));
}

uint64_t micros_since(Clock::time_point t0) {
  return static_cast<uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - t0).count());
}

VirtualAddress preload_address(const Secret32& secret, uint64_t i) {
  uint8_t le[8];
  store_u64_le(i, le);
  return {key_to_u128(secret_prf(secret, "preload", le))};
}

}  // namespace

struct Server::WriteSession {
  enum class Outcome { kOpen, kCommitted, kFailed };

  std::optional<uint64_t> n;
  bool has_key = false;
  FieldMatrix matrix;
  std::optional<AuditMessage> own;
  std::optional<AuditMessage> peer;
  bool aborted = false;
  Outcome outcome = Outcome::kOpen;
  Clock::time_point created = Clock::now();
};

VirtualAddress dummy_address_for(const Secret32& secret) {
  return {key_to_u128(secret_prf(secret, "dummy", {}))};
}

AuditSeed sketch_seed_for(const Secret32& secret, const RequestId& id) {
  return {secret_prf(secret, "r", id)};
}

AuditSeed challenge_seed_for(const Secret32& secret, const RequestId& id) {
  return {secret_prf(secret, "t", id)};
}

Server::Server(ServerConfig config)
    : config_(std::move(config)),
      own_field_(config_.test_modulus ? std::make_unique<Field>(*config_.test_modulus) : nullptr),
      field_(own_field_ ? own_field_.get() : &Field::production()),
      elements_(payload_elements_for(config_.message_bytes)),
      dpf_(*field_, kAddressBits, elements_ + 1),
      dummy_(dummy_address_for(config_.shared_secret)),
      vault_(*field_, elements_),
      rng_(make_rng()) {
  if (config_.message_bytes == 0) throw std::invalid_argument("message size must be positive");
  vault_.setup_dummy(dummy_, *rng_);
  for (size_t i = 0; i < config_.preload; ++i) {
    vault_.register_mailbox(rng_->next_key(), preload_address(config_.shared_secret, i), *rng_);
  }
}

Server::~Server() { stop(); }

std::unique_ptr<Rng> Server::make_rng() const {
  if (config_.rng_seed) return std::make_unique<SeededRng>(*config_.rng_seed);
  return std::make_unique<SystemRng>();
}

void Server::start() {
  if (running_) return;
  listener_ = std::make_unique<Listener>(config_.listen);
  running_ = true;
  threads_.emplace_back([this] { accept_loop(); });
  if (is_leader()) threads_.emplace_back([this] { dial_peer(); });
}

void Server::stop() {
  if (!running_.exchange(false)) return;
  listener_->close();
  if (auto p = peer()) p->shutdown();
  {
    std::lock_guard lock(threads_mu_);
    for (auto& w : conns_) {
      if (auto c = w.lock()) c->shutdown();
    }
  }
  state_cv_.notify_all();
  for (auto& t : threads_) t.join();
  threads_.clear();
  std::unique_lock lock(threads_mu_);
  threads_cv_.wait(lock, [&] { return active_handlers_ == 0; });
}

uint16_t Server::port() const { return listener_ ? listener_->port() : 0; }

bool Server::wait_for_peer(Millis timeout) {
  const auto deadline = Clock::now() + timeout;
  while (Clock::now() < deadline) {
    if (peer_up_) return true;
    std::this_thread::sleep_for(Millis(5));
  }
  return peer_up_;
}

void Server::spawn(std::function<void()> fn) {
  {
    std::lock_guard lock(threads_mu_);
    ++active_handlers_;
  }
  std::thread([this, fn = std::move(fn)] {
    try {
      fn();
    } catch (const std::exception&) {
      // A broken connection ends only its own handler.
    }
    std::lock_guard lock(threads_mu_);
    --active_handlers_;
    threads_cv_.notify_all();
  }).detach();
}

void Server::accept_loop() {
  while (running_) {
    std::shared_ptr<Connection> conn;
    try {
      conn = listener_->accept(kPoll);
    } catch (const NetError&) {
      continue;
    }
    {
      // Expire abandoned sessions and unclaimed read results.
      std::lock_guard lock(state_mu_);
      const auto now = Clock::now();
      for (auto it = sessions_.begin(); it != sessions_.end();) {
        it = now - it->second->created > 3 * config_.session_timeout ? sessions_.erase(it)
                                                                      : std::next(it);
      }
      for (auto it = pending_reads_.begin(); it != pending_reads_.end();) {
        auto& q = it->second;
        while (!q.empty() && now - q.front().at > config_.session_timeout) q.pop_front();
        it = q.empty() ? pending_reads_.erase(it) : std::next(it);
      }
    }
    if (!conn) continue;
    {
      std::lock_guard lock(threads_mu_);
      std::erase_if(conns_, [](const auto& w) { return w.expired(); });
      conns_.push_back(conn);
    }
    spawn([this, conn] {
      auto first = conn->recv(config_.session_timeout);
      if (!first) return;
      if (first->type == MsgType::kPeerHello) {
        const PeerHello hello = PeerHello::parse(first->payload);
        const Key16 expect = secret_prf(config_.shared_secret, "peer-hello", {});
        if (is_leader() || hello.tag != expect || peer_up_ || peer_lost_) {
          conn->shutdown();
          return;
        }
        {
          std::lock_guard lock(peer_mu_);
          peer_ = conn;
        }
        peer_up_ = true;
        serve_peer(conn);
        return;
      }
      serve_client(conn, std::move(*first));
    });
  }
}

void Server::dial_peer() {
  std::shared_ptr<Connection> conn;
  const auto deadline = Clock::now() + config_.peer_dial_timeout;
  while (running_ && !conn) {
    try {
      conn = Connection::dial(config_.peer, kPoll);
    } catch (const NetError&) {
      if (Clock::now() > deadline) return;
    }
  }
  if (!conn) return;
  {
    std::lock_guard lock(threads_mu_);
    conns_.push_back(conn);
  }
  try {
    conn->send(PeerHello{secret_prf(config_.shared_secret, "peer-hello", {})}.frame());
  } catch (const NetError&) {
    return;
  }
  {
    std::lock_guard lock(peer_mu_);
    peer_ = conn;
  }
  peer_up_ = true;
  serve_peer(conn);
}

std::shared_ptr<Connection> Server::peer() const {
  std::lock_guard lock(peer_mu_);
  return peer_;
}

void Server::on_peer_lost() {
  if (peer_lost_.exchange(true)) return;
  peer_up_ = false;
  if (auto p = peer()) p->shutdown();
  std::lock_guard lock(state_mu_);
  state_cv_.notify_all();
}

void Server::send_error(Connection& conn, ErrorCode code) { conn.send(ErrorMsg{code}.frame()); }

std::shared_ptr<Server::WriteSession> Server::session_for(const RequestId& id, bool create) {
  auto it = sessions_.find(id);
  if (it != sessions_.end()) return it->second;
  if (!create) return nullptr;
  auto s = std::make_shared<WriteSession>();
  sessions_.emplace(id, s);
  return s;
}

void Server::drop_session(const RequestId& id) {
  std::lock_guard lock(state_mu_);
  sessions_.erase(id);
}

void Server::log_op(uint64_t seq, SeqKind kind, const RequestId& id, uint64_t p) {
  log_.push_back({seq, kind, id, p});
}

uint64_t Server::next_seq() { return ++last_seq_; }

void Server::serve_peer(std::shared_ptr<Connection> conn) {
  try {
    while (running_) {
      auto f = conn->recv(kPoll);
      if (!f) continue;
      switch (f->type) {
        case MsgType::kSeqAck: {
          if (!is_leader()) throw DecodeError("unexpected ack");
          const SeqAck a = SeqAck::parse(f->payload);
          std::lock_guard lock(state_mu_);
          acks_[a.seq] = a.ok;
          state_cv_.notify_all();
          break;
        }
        case MsgType::kRegSync:
          if (is_leader()) throw DecodeError("unexpected registration sync");
          apply_reg_sync(*conn, RegSync::parse(f->payload));
          break;
        case MsgType::kSeqPropose:
          if (is_leader()) throw DecodeError("unexpected proposal");
          apply_propose(*conn, SeqPropose::parse(f->payload));
          break;
        case MsgType::kWriteOpen: {
          if (is_leader()) throw DecodeError("unexpected write open");
          const WriteOpen w = WriteOpen::parse(f->payload);
          std::lock_guard lock(state_mu_);
          auto s = session_for(w.request_id, !seen_ids_.count(w.request_id));
          if (s && !s->n) s->n = w.n;
          state_cv_.notify_all();
          break;
        }
        case MsgType::kAuditXchg: {
          const AuditMessage m = AuditMessage::deserialize(*field_, f->payload);
          std::lock_guard lock(state_mu_);
          if (auto s = session_for(m.request_id, false)) s->peer = m;
          state_cv_.notify_all();
          break;
        }
        case MsgType::kAuditAbort: {
          const AuditAbort a = AuditAbort::parse(f->payload);
          std::lock_guard lock(state_mu_);
          // The abort can overtake the client's own WRITE_KEY to this server.
          if (auto s = session_for(a.request_id, !seen_ids_.count(a.request_id))) {
            s->aborted = true;
          }
          state_cv_.notify_all();
          break;
        }
        default:
          throw DecodeError("unexpected peer message");
      }
    }
  } catch (const std::exception&) {
    // Fall through: any peer failure is terminal.
  }
  on_peer_lost();
}

void Server::apply_reg_sync(Connection& peer, const RegSync& m) {
  bool ok = false;
  {
    std::lock_guard lock(state_mu_);
    if (m.seq != applied_seq_ + 1) throw DecodeError("sequence gap");
    applied_seq_ = m.seq;
    try {
      std::lock_guard vlock(vault_mu_);
      vault_.register_pending(m.p, m.v);
      ok = true;
    } catch (const std::exception&) {
      ok = false;
    }
    if (ok) {
      log_op(m.seq, SeqKind::kRegister, {}, m.p);
      ++stats_.registrations;
    }
  }
  peer.send(SeqAck{m.seq, ok}.frame());
}

void Server::apply_propose(Connection& peer, const SeqPropose& m) {
  bool ok = false;
  {
    std::lock_guard lock(state_mu_);
    if (m.seq != applied_seq_ + 1) throw DecodeError("sequence gap");
    applied_seq_ = m.seq;
    if (m.kind == SeqKind::kWriteCommit) {
      auto s = session_for(m.request_id, false);
      if (s && s->outcome == WriteSession::Outcome::kOpen && !s->aborted && s->own && s->peer &&
          audit_decide(*field_, *s->own, *s->peer).accept) {
        {
          std::lock_guard vlock(vault_mu_);
          vault_.apply_write(s->matrix);
        }
        s->outcome = WriteSession::Outcome::kCommitted;
        ok = true;
      } else if (s) {
        s->outcome = WriteSession::Outcome::kFailed;
      }
    } else {
      PendingRead r{m.v, std::nullopt, Clock::now()};
      try {
        std::lock_guard vlock(vault_mu_);
        r.result = vault_.read_and_clear(m.p, m.v);
        ok = true;
      } catch (const AccessDenied&) {
      }
      pending_reads_[m.p].push_back(std::move(r));
    }
    if (ok) log_op(m.seq, m.kind, m.request_id, m.p);
    state_cv_.notify_all();
  }
  peer.send(SeqAck{m.seq, ok}.frame());
}

bool Server::sequence(const Frame& propose, uint64_t seq, const std::function<void()>& apply) {
  auto p = peer();
  if (!p || !peer_up_) return false;
  try {
    p->send(propose);
  } catch (const NetError&) {
    on_peer_lost();
    return false;
  }
  std::unique_lock lock(state_mu_);
  const bool answered = state_cv_.wait_for(lock, config_.session_timeout, [&] {
    return acks_.count(seq) != 0 || peer_lost_ || !running_;
  });
  if (!answered || !acks_.count(seq)) {
    lock.unlock();
    // The follower's state is unknown from here on.
    on_peer_lost();
    return false;
  }
  const bool ok = acks_[seq];
  acks_.erase(seq);
  if (ok) {
    apply();
    applied_seq_ = seq;
  }
  return ok;
}

void Server::serve_client(std::shared_ptr<Connection> conn, Frame first) {
  std::optional<Frame> f = std::move(first);
  while (running_) {
    if (f) {
      try {
        switch (f->type) {
          case MsgType::kRegister:
            handle_register(*conn, *f);
            break;
          case MsgType::kWriteKey:
            handle_write(*conn, *f);
            break;
          case MsgType::kRead:
            handle_read(*conn, *f);
            break;
          default:
            send_error(*conn, ErrorCode::kBadRequest);
        }
      } catch (const DecodeError&) {
        send_error(*conn, ErrorCode::kBadRequest);
      }
    }
    f = conn->recv(kPoll);
  }
}

void Server::handle_register(Connection& conn, const Frame& f) {
  const RegisterMsg m = RegisterMsg::parse(f.payload);
  if (!is_leader()) {
    if (!m.v) return send_error(conn, ErrorCode::kBadRequest);
    uint64_t p;
    try {
      std::lock_guard lock(vault_mu_);
      p = vault_.bind_key(*m.v, m.key);
    } catch (const AccessDenied&) {
      return send_error(conn, ErrorCode::kAccessDenied);
    }
    return conn.send(RegisterResp{p, *m.v}.frame());
  }

  if (!peer_up_) return send_error(conn, ErrorCode::kUnavailable);
  std::unique_lock seq_lock(seq_mu_);
  VirtualAddress v;
  uint64_t p;
  {
    std::lock_guard lock(vault_mu_);
    if (m.v) {
      if (vault_.contains(*m.v)) return send_error(conn, ErrorCode::kConflict);
      v = *m.v;
    } else {
      std::lock_guard rlock(rng_mu_);
      do {
        v = {rng_->next_u128()};
      } while (vault_.contains(v));
    }
    p = vault_.size();
  }
  const uint64_t seq = next_seq();
  const bool ok = sequence(RegSync{seq, v, p}.frame(), seq, [&] {
    std::lock_guard lock(vault_mu_);
    std::lock_guard rlock(rng_mu_);
    vault_.register_mailbox(m.key, v, *rng_);
    log_op(seq, SeqKind::kRegister, {}, p);
    ++stats_.registrations;
  });
  seq_lock.unlock();
  if (!ok) return send_error(conn, ErrorCode::kUnavailable);
  conn.send(RegisterResp{p, v}.frame());
}

void Server::handle_write(Connection& conn, const Frame& f) {
  const WriteKeyMsg m = WriteKeyMsg::parse(f.payload);
  const RequestId id = m.request_id;
  auto reply = [&](bool accept) {
    {
      std::lock_guard lock(state_mu_);
      ++(accept ? stats_.writes_accepted : stats_.writes_rejected);
      sessions_.erase(id);
    }
    conn.send(WriteResultMsg{id, accept}.frame());
  };
  auto abort_peer = [&] {
    if (auto p = peer()) {
      try {
        p->send(AuditAbort{id}.frame());
      } catch (const NetError&) {
        on_peer_lost();
      }
    }
  };

  std::shared_ptr<WriteSession> session;
  {
    std::lock_guard lock(state_mu_);
    if (!seen_ids_.insert(id).second) return send_error(conn, ErrorCode::kConflict);
    session = session_for(id, true);
    session->has_key = true;
  }
  if (!peer_up_) {
    drop_session(id);
    return send_error(conn, ErrorCode::kUnavailable);
  }

  DpfKey key;
  try {
    key = DpfKey::deserialize(*field_, m.key, kAddressBits, elements_ + 1);
    if (key.party != (is_leader() ? Party::kA : Party::kB)) throw DecodeError("wrong party");
  } catch (const DecodeError&) {
    drop_session(id);
    abort_peer();
    return send_error(conn, ErrorCode::kBadRequest);
  }

  // Fix the set of rows this write covers.
  uint64_t n = 0;
  if (is_leader()) {
    {
      std::lock_guard lock(vault_mu_);
      n = vault_.size();
    }
    {
      std::lock_guard lock(state_mu_);
      session->n = n;
    }
    try {
      peer()->send(WriteOpen{id, n}.frame());
    } catch (const std::exception&) {
      on_peer_lost();
      drop_session(id);
      return send_error(conn, ErrorCode::kUnavailable);
    }
  } else {
    std::unique_lock lock(state_mu_);
    state_cv_.wait_for(lock, config_.session_timeout,
                       [&] { return session->n || session->aborted || peer_lost_ || !running_; });
    if (!session->n || session->aborted) {
      const ErrorCode code = session->aborted ? ErrorCode::kBadRequest : ErrorCode::kTimeout;
      sessions_.erase(id);
      lock.unlock();
      return send_error(conn, code);
    }
    n = *session->n;
  }

  std::vector<VirtualAddress> addrs;
  {
    std::lock_guard lock(vault_mu_);
    if (n > vault_.size()) {
      drop_session(id);
      abort_peer();
      return send_error(conn, ErrorCode::kConflict);
    }
    addrs = vault_.addresses(n);
  }
  auto t0 = Clock::now();
  FieldMatrix matrix = dpf_.eval_many(key, addrs);
  const uint64_t eval_us = micros_since(t0);
  t0 = Clock::now();
  const AuditSeed seed = sketch_seed_for(config_.shared_secret, id);
  const ServerSketch sketch = server_sketch(*field_, matrix.column(0), seed);
  uint64_t audit_us = micros_since(t0);
  {
    std::lock_guard lock(state_mu_);
    stats_.eval_us += eval_us;
    session->matrix = std::move(matrix);
  }
  conn.send(AuditSeedMsg{id, seed}.frame());

  // The proof share arrives on this same connection.
  std::optional<SnipProofShare> proof;
  try {
    auto pf = conn.recv(config_.session_timeout);
    if (pf && pf->type == MsgType::kProof) {
      const ProofMsg pm = ProofMsg::parse(pf->payload);
      if (pm.request_id == id) proof = SnipProofShare::deserialize(*field_, pm.proof);
    }
  } catch (const DecodeError&) {
  } catch (const NetError&) {
    drop_session(id);
    abort_peer();
    throw;
  }
  if (!proof) {
    abort_peer();
    return reply(false);
  }

  t0 = Clock::now();
  const FieldElement t = challenge_point(*field_, challenge_seed_for(config_.shared_secret, id));
  const AuditMessage own = verifier_message(*field_, id, sketch, *proof, t);
  audit_us += micros_since(t0);
  {
    std::lock_guard lock(state_mu_);
    session->own = own;
  }
  try {
    peer()->send(audit_xchg_frame(own));
  } catch (const std::exception&) {
    on_peer_lost();
    return reply(false);
  }

  AuditDecision decision;
  {
    std::unique_lock lock(state_mu_);
    state_cv_.wait_for(lock, config_.session_timeout,
                       [&] { return session->peer || session->aborted || peer_lost_ || !running_; });
    if (session->peer && !session->aborted) {
      t0 = Clock::now();
      decision = audit_decide(*field_, own, *session->peer);
      audit_us += micros_since(t0);
    }
    stats_.audit_us += audit_us;
  }
  if (!decision.accept) return reply(false);

  if (is_leader()) {
    std::unique_lock seq_lock(seq_mu_);
    const uint64_t seq = next_seq();
    SeqPropose prop{seq, SeqKind::kWriteCommit, id, 0, {}};
    const bool ok = sequence(prop.frame(), seq, [&] {
      {
        std::lock_guard lock(vault_mu_);
        vault_.apply_write(session->matrix);
      }
      log_op(seq, SeqKind::kWriteCommit, id, 0);
    });
    seq_lock.unlock();
    return reply(ok);
  }

  bool committed;
  {
    std::unique_lock lock(state_mu_);
    state_cv_.wait_for(lock, config_.session_timeout, [&] {
      return session->outcome != WriteSession::Outcome::kOpen || peer_lost_ || !running_;
    });
    if (session->outcome == WriteSession::Outcome::kOpen) {
      session->outcome = WriteSession::Outcome::kFailed;
    }
    committed = session->outcome == WriteSession::Outcome::kCommitted;
  }
  reply(committed);
}

void Server::handle_read(Connection& conn, const Frame& f) {
  const ReadMsg m = ReadMsg::parse(f.payload);
  {
    std::lock_guard lock(vault_mu_);
    if (m.p == Vault::kDummyIndex || vault_.lookup(m.v) != std::optional<uint64_t>(m.p)) {
      return send_error(conn, ErrorCode::kAccessDenied);
    }
  }
  if (!peer_up_) return send_error(conn, ErrorCode::kUnavailable);

  if (is_leader()) {
    std::unique_lock seq_lock(seq_mu_);
    const uint64_t seq = next_seq();
    ReadResult result;
    const bool ok = sequence(SeqPropose{seq, SeqKind::kRead, {}, m.p, m.v}.frame(), seq, [&] {
      {
        std::lock_guard lock(vault_mu_);
        result = vault_.read_and_clear(m.p, m.v);
      }
      log_op(seq, SeqKind::kRead, {}, m.p);
      ++stats_.reads;
    });
    seq_lock.unlock();
    if (!ok) return send_error(conn, ErrorCode::kUnavailable);
    return conn.send(ReadResp{result.nonce, std::move(result.ct)}.frame());
  }

  std::optional<PendingRead> got;
  {
    std::unique_lock lock(state_mu_);
    auto take = [&] {
      auto it = pending_reads_.find(m.p);
      if (it == pending_reads_.end()) return false;
      auto& q = it->second;
      for (auto e = q.begin(); e != q.end(); ++e) {
        if (e->v == m.v) {
          got = std::move(*e);
          q.erase(e);
          if (q.empty()) pending_reads_.erase(it);
          return true;
        }
      }
      return false;
    };
    state_cv_.wait_for(lock, config_.session_timeout,
                       [&] { return take() || peer_lost_ || !running_; });
    if (got && got->result) ++stats_.reads;
  }
  if (!got) return send_error(conn, peer_up_ ? ErrorCode::kTimeout : ErrorCode::kUnavailable);
  if (!got->result) return send_error(conn, ErrorCode::kAccessDenied);
  conn.send(ReadResp{got->result->nonce, std::move(got->result->ct)}.frame());
}

size_t Server::mailbox_count() const {
  std::lock_guard lock(vault_mu_);
  return vault_.size();
}

Digest Server::public_digest() const {
  std::lock_guard lock(vault_mu_);
  return vault_.public_digest();
}

Digest Server::full_digest() const {
  std::lock_guard lock(vault_mu_);
  return vault_.full_digest();
}

Vault Server::vault_copy() const {
  std::lock_guard lock(vault_mu_);
  return vault_;
}

ServerStats Server::stats() const {
  ServerStats s;
  {
    std::lock_guard lock(state_mu_);
    s = stats_;
  }
  if (auto p = peer()) {
    s.peer_bytes_sent = p->bytes_sent();
    s.peer_bytes_received = p->bytes_received();
  }
  return s;
}

std::vector<SeqLogEntry> Server::seq_log() const {
  std::lock_guard lock(state_mu_);
  return log_;
}

void Server::corrupt_slot(uint64_t p) {
  std::lock_guard lock(vault_mu_);
  FieldMatrix delta(p + 1, elements_ + 1);
  delta.at(p, 1) = field_->one();
  vault_.apply_write(delta);
}

}  // namespace mmill
