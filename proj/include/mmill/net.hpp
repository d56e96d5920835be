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


// Blocking TCP transport for frames, with per-connection byte counters.

#ifndef MMILL_NET_HPP_
#define MMILL_NET_HPP_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

#include "mmill/wire.hpp"

namespace mmill {

class NetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Endpoint {
  std::string host = "127.0.0.1";
  uint16_t port = 0;

  // "host:port" or ":port".
  static Endpoint parse(const std::string& text);
  std::string str() const;
};

using Millis = std::chrono::milliseconds;

class Connection {
 public:
  explicit Connection(int fd);
  ~Connection();
  Connection(const Connection&) = delete;
  Connection& operator=(const Connection&) = delete;

  static std::shared_ptr<Connection> dial(const Endpoint& ep, Millis timeout);

  // Safe to call from several threads.
  void send(const Frame& f);
  // At most one receiving thread. Returns nullopt on timeout; throws
  // NetError when the peer closes or the socket fails, DecodeError on a
  // malformed stream.
  std::optional<Frame> recv(Millis timeout);
  // Like recv, but a timeout throws NetError.
  Frame recv_or_throw(Millis timeout);

  // Unblocks pending receives; further sends fail.
  void shutdown();

  uint64_t bytes_sent() const { return sent_.load(); }
  uint64_t bytes_received() const { return received_.load(); }

 private:
  int fd_;
  std::mutex send_mu_;
  FrameDecoder decoder_;
  std::atomic<uint64_t> sent_{0};
  std::atomic<uint64_t> received_{0};
  std::atomic<bool> closed_{false};
};

class Listener {
 public:
  explicit Listener(const Endpoint& ep);
  ~Listener();
  Listener(const Listener&) = delete;
  Listener& operator=(const Listener&) = delete;

  uint16_t port() const { return port_; }
  // nullptr on timeout or after close().
  std::shared_ptr<Connection> accept(Millis timeout);
  void close();

 private:
  int fd_;
  uint16_t port_;
  std::atomic<bool> closed_{false};
};

}  // namespace mmill

#endif  // MMILL_NET_HPP_
