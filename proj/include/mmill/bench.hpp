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


// In-process server pair and the benchmark drivers built on it.

#ifndef MMILL_BENCH_HPP_
#define MMILL_BENCH_HPP_

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmill/client.hpp"
#include "mmill/server.hpp"

namespace mmill {

struct LocalPairOptions {
  size_t message_bytes = 160;
  size_t preload = 0;
  std::optional<u128> test_modulus;
  std::optional<uint64_t> rng_seed;
  Millis session_timeout{10000};
};

// Two servers on loopback ephemeral ports, already connected to each other.
class LocalPair {
 public:
  explicit LocalPair(LocalPairOptions options = {});
  ~LocalPair();

  Server& a() { return *a_; }
  Server& b() { return *b_; }
  const Secret32& secret() const { return secret_; }
  ClientOptions client_options(std::optional<uint64_t> rng_seed = std::nullopt) const;
  SendTarget dummy_target() const { return SendTarget::dummy(a_->dummy_address()); }
  bool converged() const { return a_->public_digest() == b_->public_digest(); }

 private:
  LocalPairOptions options_;
  Secret32 secret_{};
  std::unique_ptr<Server> b_;
  std::unique_ptr<Server> a_;
};

struct BenchRecord {
  size_t n = 0;
  size_t message_bytes = 0;
  uint64_t client_bytes = 0;  // both directions, both servers, per write
  uint64_t server_bytes = 0;  // server-to-server, both directions, per write
  double write_latency_us = 0;
  double audit_client_us = 0;
  double audit_server_us = 0;
  double throughput_wps = 0;
  // Extra detail not in the CSV.
  double client_compute_us = 0;         // key generation plus audit work, median
  double client_compute_inline_us = 0;  // the same, timed inside the writes
  uint64_t rejected = 0;
  std::vector<uint64_t> client_bytes_each;
};

std::string bench_csv_header();
std::string to_csv(const BenchRecord& r);

struct BenchOptions {
  size_t writes = 10;
  size_t concurrency = 1;
};

// n counts every slot including the dummy. Each call builds a fresh pair.
BenchRecord bench_comm(size_t n, size_t message_bytes, size_t writes = 3);
// Median write-then-read latency.
BenchRecord bench_latency(size_t n, size_t message_bytes, size_t writes = 10);
BenchRecord bench_throughput(size_t n, size_t message_bytes, size_t concurrency,
                             size_t writes = 20);
BenchRecord run_bench(size_t n, size_t message_bytes, const BenchOptions& options);

// Least-squares fit y = a + b x; returns R^2.
double linear_r2(const std::vector<double>& x, const std::vector<double>& y);
double median(std::vector<double> v);

}  // namespace mmill

#endif  // MMILL_BENCH_HPP_
