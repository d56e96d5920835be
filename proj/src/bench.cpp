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


#include "mmill/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <thread>

namespace mmill {
namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

}  // namespace

LocalPair::LocalPair(LocalPairOptions options) : options_(options) {
  if (options_.rng_seed) {
    SeededRng(*options_.rng_seed ^ 0x5ec7e7).fill(secret_);
  } else {
    SystemRng().fill(secret_);
  }
  ServerConfig base;
  base.listen = Endpoint{"127.0.0.1", 0};
  base.shared_secret = secret_;
  base.message_bytes = options_.message_bytes;
  base.test_modulus = options_.test_modulus;
  base.preload = options_.preload;
  base.session_timeout = options_.session_timeout;

  ServerConfig cb = base;
  cb.role = Role::kB;
  if (options_.rng_seed) cb.rng_seed = *options_.rng_seed * 2 + 1;
  b_ = std::make_unique<Server>(cb);
  b_->start();

  ServerConfig ca = base;
  ca.role = Role::kA;
  ca.peer = Endpoint{"127.0.0.1", b_->port()};
  if (options_.rng_seed) ca.rng_seed = *options_.rng_seed * 2;
  a_ = std::make_unique<Server>(ca);
  a_->start();
  if (!a_->wait_for_peer(Millis(10000)) || !b_->wait_for_peer(Millis(10000))) {
    throw NetError("local server pair failed to connect");
  }
}

LocalPair::~LocalPair() {
  a_->stop();
  b_->stop();
}

ClientOptions LocalPair::client_options(std::optional<uint64_t> rng_seed) const {
  ClientOptions o;
  o.server_a = Endpoint{"127.0.0.1", a_->port()};
  o.server_b = Endpoint{"127.0.0.1", b_->port()};
  o.message_bytes = options_.message_bytes;
  o.field = &a_->field();
  o.rng_seed = rng_seed;
  return o;
}

std::string bench_csv_header() {
  return "n,B,client_bytes,server_bytes,write_latency_us,audit_client_us,audit_server_us,"
         "throughput_wps";
}

std::string to_csv(const BenchRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%zu,%zu,%llu,%llu,%.1f,%.2f,%.1f,%.2f", r.n, r.message_bytes,
                static_cast<unsigned long long>(r.client_bytes),
                static_cast<unsigned long long>(r.server_bytes), r.write_latency_us,
                r.audit_client_us, r.audit_server_us, r.throughput_wps);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : (v[m - 1] + v[m]) / 2;
}

double linear_r2(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n < 2 || y.size() != n) return 0;
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0;
  return sxy * sxy / (sxx * syy);
}

BenchRecord run_bench(size_t n, size_t message_bytes, const BenchOptions& options) {
  if (n < 2) throw std::invalid_argument("bench needs n >= 2");
  LocalPairOptions po;
  po.message_bytes = message_bytes;
  po.preload = n - 2;
  LocalPair pair(po);

  BenchRecord rec;
  rec.n = n;
  rec.message_bytes = message_bytes;

  Client owner(pair.client_options());
  const MailboxCredential cred = owner.register_mailbox(true);
  const SendTarget target = SendTarget::to(address_of(cred));
  const Bytes msg(std::min<size_t>(8, owner.max_message(true)), 0x42);

  // Latency, traffic and audit timing: one client, write then read.
  {
    Client c(pair.client_options());
    SystemRng scratch_rng;
    std::vector<double> latency, audit_client, compute;
    uint64_t peer_bytes = 0, audit_us = 0;
    for (size_t i = 0; i < options.writes; ++i) {
      const Traffic t0 = c.traffic();
      const ServerStats s0 = pair.a().stats();
      const auto start = Clock::now();
      const SendStatus st = c.send(target, msg);
      const Traffic t1 = c.traffic();
      const ServerStats s1 = pair.a().stats();
      owner.check(cred);
      peer_bytes += s1.peer_bytes_sent + s1.peer_bytes_received - s0.peer_bytes_sent -
                    s0.peer_bytes_received;
      audit_us += s1.audit_us - s0.audit_us;
      latency.push_back(micros_since(start));
      if (st != SendStatus::kAccepted) ++rec.rejected;
      rec.client_bytes_each.push_back(t1.total() - t0.total());
      audit_client.push_back(static_cast<double>(c.last_timings().audit_us));
      compute.push_back(
          static_cast<double>(c.last_timings().audit_us + c.last_timings().gen_us));
    }
    const uint64_t w = std::max<size_t>(options.writes, 1);
    rec.client_bytes = rec.client_bytes_each.empty() ? 0 : rec.client_bytes_each.front();
    rec.server_bytes = peer_bytes / w;
    rec.write_latency_us = median(latency);
    rec.audit_client_us = median(audit_client);
    rec.client_compute_inline_us = median(compute);
    // Same client work again, back to back. Inline samples follow a server
    // pass over the whole vault on the same machine and start cache-cold.
    std::vector<double> warm;
    const Bytes body = seal_body(msg, target.mac_key, message_bytes);
    for (size_t i = 0; i < 201; ++i) {
      const auto start = Clock::now();
      const PreparedWrite w = c.prepare(target, body);
      const ClientChecks checks = client_checks(pair.a().field(), AuditSeed{}, w.p, w.w_a, w.w_b);
      Rng& rng = scratch_rng;
      snip_gen(pair.a().field(), checks, rng);
      warm.push_back(micros_since(start));
    }
    rec.client_compute_us = median(warm);
    rec.audit_server_us = static_cast<double>(audit_us) / static_cast<double>(w);
  }

  // Throughput: concurrent writers, no reads.
  {
    const size_t workers = std::max<size_t>(options.concurrency, 1);
    const size_t per = std::max<size_t>(options.writes / workers, 1);
    std::vector<std::thread> threads;
    std::vector<uint64_t> rejected(workers, 0);
    const auto start = Clock::now();
    for (size_t k = 0; k < workers; ++k) {
      threads.emplace_back([&, k] {
        Client c(pair.client_options());
        for (size_t i = 0; i < per; ++i) {
          if (c.send(target, msg) != SendStatus::kAccepted) ++rejected[k];
        }
      });
    }
    for (auto& t : threads) t.join();
    const double secs = micros_since(start) / 1e6;
    rec.throughput_wps = static_cast<double>(per * workers) / secs;
    for (uint64_t r : rejected) rec.rejected += r;
  }
  return rec;
}

BenchRecord bench_comm(size_t n, size_t message_bytes, size_t writes) {
  return run_bench(n, message_bytes, {writes, 1});
}

BenchRecord bench_latency(size_t n, size_t message_bytes, size_t writes) {
  return run_bench(n, message_bytes, {writes, 1});
}

BenchRecord bench_throughput(size_t n, size_t message_bytes, size_t concurrency, size_t writes) {
  return run_bench(n, message_bytes, {writes, concurrency});
}

}  // namespace mmill
