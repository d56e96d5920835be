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


// mmill: client command line.
//
//   mmill register --out me.cred --address-out me.addr
//   mmill send --to friend.addr --msg "hi"
//   mmill check --cred me.cred
//   mmill cover --dummy dummy.addr --rate 2
//   mmill bench --n 1000,10000 --out bench.csv

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "common.hpp"
#include "mmill/bench.hpp"
#include "mmill/client.hpp"

using namespace mmill;

namespace {

struct Globals {
  std::string server_a = "127.0.0.1:7000";
  std::string server_b = "127.0.0.1:7001";
  size_t msg_size = 160;
  int timeout_ms = 30000;

  ClientOptions options() const {
    ClientOptions o;
    o.server_a = Endpoint::parse(server_a);
    o.server_b = Endpoint::parse(server_b);
    o.message_bytes = msg_size;
    o.timeout = Millis(timeout_ms);
    return o;
  }
};

int report(SendStatus s) {
  std::cout << to_string(s) << "\n";
  return s == SendStatus::kAccepted ? 0 : 1;
}

std::vector<size_t> parse_sizes(const std::string& list) {
  std::vector<size_t> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(static_cast<size_t>(std::stoull(item)));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmill client"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--server-a", g.server_a, "host:port of server A")->envname("MMILL_SERVER_A");
  app.add_option("--server-b", g.server_b, "host:port of server B")->envname("MMILL_SERVER_B");
  app.add_option("--msg-size", g.msg_size, "mailbox size B; must match the servers")
      ->envname("MMILL_MSG_SIZE");
  app.add_option("--timeout-ms", g.timeout_ms, "per-reply timeout")->envname("MMILL_TIMEOUT_MS");

  auto* reg = app.add_subcommand("register", "create a mailbox");
  std::string cred_out, addr_out;
  bool no_mac = false;
  reg->add_option("--out", cred_out, "credential file to write (mode 0600)")->required();
  reg->add_option("--address-out", addr_out, "address file to hand to senders");
  reg->add_flag("--no-mac", no_mac, "no master secret, so no integrity tag");

  auto* addr = app.add_subcommand("address", "derive the sender address file from a credential");
  std::string addr_cred;
  addr->add_option("--cred", addr_cred)->required();
  addr->add_option("--out", addr_out)->required();

  auto* send = app.add_subcommand("send", "write a message into a mailbox");
  std::string to, msg, msg_file;
  send->add_option("--to", to, "address file of the recipient")->required();
  auto* msg_opt = send->add_option("--msg", msg, "message text");
  send->add_option("--msg-file", msg_file, "read the message from a file")->excludes(msg_opt);

  auto* check = app.add_subcommand("check", "read and clear a mailbox");
  std::string check_cred;
  check->add_option("--cred", check_cred)->required();

  auto* cover = app.add_subcommand("cover", "send cover writes to the dummy mailbox");
  std::string dummy;
  double rate = 1.0;
  size_t count = 0;
  cover->add_option("--dummy", dummy, "dummy address file from mmill-server --dummy-out")
      ->required();
  cover->add_option("--rate", rate, "writes per second")->check(CLI::PositiveNumber);
  cover->add_option("--count", count, "stop after this many writes (0: run forever)");

  auto* bench = app.add_subcommand("bench", "run an in-process server pair and write CSV");
  std::string ns = "1000,10000,100000", bench_out;
  size_t writes = 10, concurrency = 1;
  bench->add_option("--n", ns, "comma-separated mailbox counts");
  bench->add_option("--writes", writes, "writes per n");
  bench->add_option("--concurrency", concurrency, "concurrent writers for the throughput pass");
  bench->add_option("--out", bench_out, "CSV file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*reg) {
      Client c(g.options());
      const MailboxCredential cred = c.register_mailbox(!no_mac);
      tools::write_file(cred_out, cred.serialize(), 0600);
      if (!addr_out.empty()) tools::write_file(addr_out, address_of(cred).serialize());
      std::cout << "registered slot " << cred.p << "\n";
      return 0;
    }
    if (*addr) {
      const MailboxCredential cred = MailboxCredential::parse(tools::read_file(addr_cred));
      tools::write_file(addr_out, address_of(cred).serialize());
      return 0;
    }
    if (*send) {
      const MailboxAddress a = MailboxAddress::parse(tools::read_file(to));
      const Bytes body = msg_file.empty() ? Bytes(msg.begin(), msg.end()) : tools::read_file(msg_file);
      Client c(g.options());
      if (body.size() > c.max_message(a.master_secret.has_value())) {
        std::cerr << "message too long: " << body.size() << " bytes, limit "
                  << c.max_message(a.master_secret.has_value()) << "\n";
        return 2;
      }
      return report(c.send(SendTarget::to(a), body));
    }
    if (*check) {
      const MailboxCredential cred = MailboxCredential::parse(tools::read_file(check_cred));
      Client c(g.options());
      const CheckResult r = c.check(cred);
      switch (r.kind) {
        case CheckResult::Kind::kEmpty:
          std::cout << "empty\n";
          return 0;
        case CheckResult::Kind::kMessage:
          std::cout.write(reinterpret_cast<const char*>(r.message.data()),
                          static_cast<std::streamsize>(r.message.size()));
          std::cout << "\n";
          return 0;
        case CheckResult::Kind::kIntegrityFailure:
          std::cerr << "integrity check failed (collision or tampering)\n";
          return 3;
      }
    }
    if (*cover) {
      const MailboxAddress d = MailboxAddress::parse(tools::read_file(dummy));
      Client c(g.options());
      const auto period = std::chrono::duration<double>(1.0 / rate);
      auto next = std::chrono::steady_clock::now();
      size_t sent = 0, rejected = 0;
      while (count == 0 || sent < count) {
        if (c.cover_send(SendTarget::dummy(d.v)) != SendStatus::kAccepted) ++rejected;
        ++sent;
        next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
        std::this_thread::sleep_until(next);
      }
      std::cout << sent << " cover writes, " << rejected << " rejected\n";
      return rejected == 0 ? 0 : 1;
    }
    if (*bench) {
      std::ofstream file;
      if (!bench_out.empty()) {
        file.open(bench_out);
        if (!file) throw std::runtime_error("cannot write " + bench_out);
      }
      std::ostream& out = bench_out.empty() ? std::cout : file;
      out << bench_csv_header() << "\n";
      for (size_t n : parse_sizes(ns)) {
        const BenchRecord r = run_bench(n, g.msg_size, {writes, concurrency});
        out << to_csv(r) << std::endl;
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "mmill: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
