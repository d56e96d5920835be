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


// mmill-server: one half of a two-server deployment.
//
//   mmill-server --role b --listen :7001 --secret-file shared.key
//   mmill-server --role a --listen :7000 --peer 127.0.0.1:7001 --secret-file shared.key
//
// Every flag can also come from the environment (MMILL_ROLE, MMILL_LISTEN, ...).

#include <csignal>
#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "common.hpp"
#include "mmill/client.hpp"
#include "mmill/server.hpp"

using namespace mmill;

int main(int argc, char** argv) {
  CLI::App app{"mmill server"};
  std::string role, listen, peer, secret_file, test_modulus, dummy_out;
  size_t msg_size = 160, preload = 0;
  bool new_secret = false;
  app.add_option("--role", role, "a (leader) or b (follower)")
      ->envname("MMILL_ROLE")
      ->check(CLI::IsMember({"a", "b", "A", "B"}));
  app.add_option("--listen", listen, "host:port to accept clients and the peer on")
      ->envname("MMILL_LISTEN");
  app.add_option("--peer", peer, "host:port of server B (role a only)")->envname("MMILL_PEER");
  app.add_option("--secret-file", secret_file, "32-byte secret shared by both servers")
      ->envname("MMILL_SECRET_FILE")
      ->required();
  app.add_option("--msg-size", msg_size, "mailbox size B in bytes")
      ->envname("MMILL_MSG_SIZE")
      ->check(CLI::Range(1, 1 << 20));
  app.add_option("--test-modulus", test_modulus, "prime modulus for testing (not for real use)")
      ->envname("MMILL_TEST_MODULUS");
  app.add_option("--preload", preload, "register this many placeholder mailboxes at startup")
      ->envname("MMILL_PRELOAD");
  app.add_option("--dummy-out", dummy_out, "write the dummy mailbox address file here")
      ->envname("MMILL_DUMMY_OUT");
  app.add_flag("--new-secret", new_secret, "create --secret-file with fresh randomness and exit");
  CLI11_PARSE(app, argc, argv);

  try {
    if (new_secret) {
      Secret32 s;
      SystemRng().fill(s);
      tools::write_file(secret_file, s, 0600);
      std::cerr << "wrote " << secret_file << "\n";
      return 0;
    }
    if (role.empty() || listen.empty()) {
      std::cerr << "--role and --listen are required\n";
      return 2;
    }
    ServerConfig cfg;
    cfg.role = (role == "a" || role == "A") ? Role::kA : Role::kB;
    cfg.listen = Endpoint::parse(listen);
    if (cfg.role == Role::kA) {
      if (peer.empty()) {
        std::cerr << "role a needs --peer\n";
        return 2;
      }
      cfg.peer = Endpoint::parse(peer);
    }
    const Bytes secret = tools::read_file(secret_file);
    if (secret.size() != cfg.shared_secret.size()) {
      std::cerr << secret_file << ": expected 32 bytes, got " << secret.size() << "\n";
      return 2;
    }
    std::copy(secret.begin(), secret.end(), cfg.shared_secret.begin());
    cfg.message_bytes = msg_size;
    if (!test_modulus.empty()) cfg.test_modulus = tools::parse_u128(test_modulus);
    cfg.preload = preload;
    // Servers are often started by hand, one after the other.
    cfg.peer_dial_timeout = Millis(60000);

    // Block the stop signals before any thread starts so only sigwait sees them.
    sigset_t stop;
    sigemptyset(&stop);
    sigaddset(&stop, SIGINT);
    sigaddset(&stop, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop, nullptr);

    Server server(cfg);
    server.start();
    if (!dummy_out.empty()) {
      tools::write_file(dummy_out, MailboxAddress{0, server.dummy_address(), std::nullopt}.serialize());
    }
    std::cerr << "mmill-server " << (cfg.role == Role::kA ? "A" : "B") << " listening on port "
              << server.port() << ", B=" << msg_size << ", " << server.mailbox_count()
              << " slots\n";
    if (server.wait_for_peer(Millis(cfg.peer_dial_timeout))) {
      std::cerr << "peer connected\n";
    } else {
      std::cerr << "peer not connected yet; requests fail until it is\n";
    }

    int sig = 0;
    sigwait(&stop, &sig);
    const ServerStats st = server.stats();
    server.stop();
    std::cerr << "stopping: " << st.registrations << " registrations, " << st.writes_accepted
              << " writes accepted, " << st.writes_rejected << " rejected, " << st.reads
              << " reads\n";
  } catch (const std::exception& e) {
    std::cerr << "mmill-server: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
