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


#include "mmill/net.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

namespace mmill {
namespace {

[[noreturn]] void fail(const std::string& what) {
  throw NetError(what + ": " + std::strerror(errno));
}

int poll_one(int fd, short events, Millis timeout) {
  pollfd p{fd, events, 0};
  const int ms = static_cast<int>(std::min<int64_t>(timeout.count(), INT32_MAX));
  int rc;
  do {
    rc = ::poll(&p, 1, ms);
  } while (rc < 0 && errno == EINTR);
  if (rc < 0) fail("poll");
  return rc == 0 ? 0 : p.revents;
}

sockaddr_in resolve(const Endpoint& ep) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  addrinfo* res = nullptr;
  const std::string host = ep.host.empty() ? "127.0.0.1" : ep.host;
  if (::getaddrinfo(host.c_str(), nullptr, &hints, &res) != 0 || !res) {
    throw NetError("cannot resolve " + host);
  }
  sockaddr_in addr{};
  std::memcpy(&addr, res->ai_addr, sizeof(addr));
  ::freeaddrinfo(res);
  addr.sin_port = htons(ep.port);
  return addr;
}

}  // namespace

Endpoint Endpoint::parse(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw std::invalid_argument("endpoint needs host:port: " + text);
  Endpoint ep;
  if (colon > 0) ep.host = text.substr(0, colon);
  const std::string port = text.substr(colon + 1);
  size_t used = 0;
  unsigned long value = 0;
  try {
    value = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != port.size() || port.empty() || value > 65535) {
    throw std::invalid_argument("bad port in endpoint: " + text);
  }
  ep.port = static_cast<uint16_t>(value);
  return ep;
}

std::string Endpoint::str() const { return host + ":" + std::to_string(port); }

Connection::Connection(int fd) : fd_(fd) {
  const int one = 1;
  ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
}

Connection::~Connection() { ::close(fd_); }

std::shared_ptr<Connection> Connection::dial(const Endpoint& ep, Millis timeout) {
  const sockaddr_in addr = resolve(ep);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    const int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
    if (fd < 0) fail("socket");
    if (::connect(fd, reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) == 0) {
      return std::make_shared<Connection>(fd);
    }
    const int err = errno;
    ::close(fd);
    if (std::chrono::steady_clock::now() >= deadline) {
      errno = err;
      fail("connect " + ep.str());
    }
    std::this_thread::sleep_for(Millis(20));
  }
}

void Connection::send(const Frame& f) {
  const Bytes wire = encode_frame(f);
  std::lock_guard lock(send_mu_);
  if (closed_) throw NetError("send on closed connection");
  size_t off = 0;
  while (off < wire.size()) {
    const ssize_t n = ::send(fd_, wire.data() + off, wire.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail("send");
    }
    off += static_cast<size_t>(n);
  }
  sent_ += wire.size();
}

std::optional<Frame> Connection::recv(Millis timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  for (;;) {
    if (auto f = decoder_.next()) {
      received_ += f->wire_size();
      return f;
    }
    if (closed_) throw NetError("connection closed");
    const auto left = std::chrono::duration_cast<Millis>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return std::nullopt;
    // Short poll slices so shutdown() is noticed promptly.
    const int ev = poll_one(fd_, POLLIN, std::min(left, Millis(200)));
    if (ev == 0) continue;
    uint8_t buf[16384];
    const ssize_t n = ::recv(fd_, buf, sizeof(buf), 0);
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail("recv");
    }
    if (n == 0) throw NetError("peer closed connection");
    decoder_.feed(std::span<const uint8_t>(buf, static_cast<size_t>(n)));
  }
}

Frame Connection::recv_or_throw(Millis timeout) {
  auto f = recv(timeout);
  if (!f) throw NetError("receive timed out");
  return std::move(*f);
}

void Connection::shutdown() {
  closed_ = true;
  ::shutdown(fd_, SHUT_RDWR);
}

Listener::Listener(const Endpoint& ep) {
  fd_ = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd_ < 0) fail("socket");
  const int one = 1;
  ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = resolve(ep);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const int err = errno;
    ::close(fd_);
    errno = err;
    fail("bind " + ep.str());
  }
  if (::listen(fd_, 128) != 0) fail("listen");
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Listener::~Listener() { ::close(fd_); }

std::shared_ptr<Connection> Listener::accept(Millis timeout) {
  if (closed_) return nullptr;
  if (poll_one(fd_, POLLIN, timeout) == 0 || closed_) return nullptr;
  const int fd = ::accept4(fd_, nullptr, nullptr, SOCK_CLOEXEC);
  if (fd < 0) {
    if (errno == EINTR || errno == EAGAIN || errno == ECONNABORTED) return nullptr;
    if (closed_) return nullptr;
    fail("accept");
  }
  return std::make_shared<Connection>(fd);
}

void Listener::close() {
  closed_ = true;
  ::shutdown(fd_, SHUT_RDWR);
}

}  // namespace mmill
