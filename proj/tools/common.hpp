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


// File and parsing helpers shared by the command-line tools.

#ifndef MMILL_TOOLS_COMMON_HPP_
#define MMILL_TOOLS_COMMON_HPP_

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "mmill/bytes.hpp"

namespace mmill::tools {

inline Bytes read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Writes with the given permission bits; an existing file is replaced.
inline void write_file(const std::string& path, std::span<const uint8_t> data,
                       mode_t mode = 0644) {
  ::unlink(path.c_str());
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, mode);
  if (fd < 0) throw std::runtime_error("cannot create " + path + ": " + std::strerror(errno));
  size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      throw std::runtime_error("write " + path + ": " + std::strerror(errno));
    }
    off += static_cast<size_t>(n);
  }
  ::close(fd);
}

// Decimal, or hex with a 0x prefix.
inline u128 parse_u128(const std::string& s) {
  if (s.rfind("0x", 0) == 0) return u128_from_hex(s.substr(2));
  if (s.empty()) throw std::invalid_argument("empty number");
  u128 x = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw std::invalid_argument("bad number: " + s);
    const u128 d = static_cast<u128>(c - '0');
    if (x > (~static_cast<u128>(0) - d) / 10) throw std::invalid_argument("number too large: " + s);
    x = x * 10 + d;
  }
  return x;
}

}  // namespace mmill::tools

#endif  // MMILL_TOOLS_COMMON_HPP_
