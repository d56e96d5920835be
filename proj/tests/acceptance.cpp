// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Pass criterion numbers to run a subset.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "attack.hpp"
#include "mmill/bench.hpp"

using namespace mmill;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// 1. Random register/send/check round trips with MACs, B = 160 and 1024.
Outcome roundtrips() {
  const auto t0 = Clock::now();
  size_t ok = 0, total = 0;
  for (size_t B : {size_t{160}, size_t{1024}}) {
    LocalPair pair({.message_bytes = B});
    Client owner(pair.client_options()), sender(pair.client_options());
    SeededRng rng(1000 + B);
    for (int i = 0; i < 1000; ++i) {
      ++total;
      const MailboxCredential cred = owner.register_mailbox(true);
      Bytes msg(rng.uniform(owner.max_message(true) + 1));
      rng.fill(msg);
      if (sender.send(SendTarget::to(address_of(cred)), msg) != SendStatus::kAccepted) continue;
      const CheckResult r = owner.check(cred);
      if (r.kind == CheckResult::Kind::kMessage && r.message == msg) ++ok;
    }
  }
  const double secs = seconds_since(t0);
  return {ok == total && secs <= 120,
          fmt("%zu/%zu exact with MAC verified, %.1f s (limit 120 s)", ok, total, secs)};
}

// 2. Client bytes per write do not depend on n.
Outcome comm_constancy() {
  std::vector<uint64_t> seen;
  std::string detail;
  bool identical = true;
  uint64_t upload = 0;
  for (int log_n : {6, 10, 14, 17}) {
    const BenchRecord r = bench_comm(size_t{1} << log_n, 160, 2);
    for (uint64_t b : r.client_bytes_each) {
      if (!seen.empty() && b != seen.front()) identical = false;
      seen.push_back(b);
    }
    if (r.rejected) identical = false;
    detail += fmt("n=2^%d:%llu ", log_n, static_cast<unsigned long long>(r.client_bytes));
  }
  // Upload: the two WRITE_KEY and two PROOF frames.
  {
    LocalPair pair;
    Client c(pair.client_options());
    const Traffic t0 = c.traffic();
    c.cover_send(pair.dummy_target());
    const Traffic t1 = c.traffic();
    upload = t1.sent_a + t1.sent_b - t0.sent_a - t0.sent_b;
  }
  detail += fmt("bytes; upload %llu B (limit 8192)", static_cast<unsigned long long>(upload));
  return {identical && upload <= 8192, detail};
}

// 3. Honest writes always pass the audit.
Outcome completeness() {
  LocalPair pair;
  Client owner(pair.client_options()), sender(pair.client_options());
  std::vector<MailboxCredential> boxes;
  for (int i = 0; i < 16; ++i) boxes.push_back(owner.register_mailbox(i % 2 == 0));
  SeededRng rng(3);
  size_t rejected = 0;
  for (int i = 0; i < 10000; ++i) {
    SendStatus s;
    if (i % 2 == 0) {
      s = sender.cover_send(pair.dummy_target());
    } else {
      const auto& b = boxes[rng.uniform(boxes.size())];
      Bytes msg(rng.uniform(sender.max_message(true) + 1));
      rng.fill(msg);
      s = sender.send(SendTarget::to(address_of(b)), msg);
    }
    if (s != SendStatus::kAccepted) ++rejected;
    if (i % 1000 == 999) {
      for (const auto& b : boxes) owner.check(b);
    }
  }
  const bool converged = pair.converged();
  return {rejected == 0 && converged,
          fmt("%zu rejections of 10000 honest writes, servers converged: %s", rejected,
              converged ? "yes" : "no")};
}

// 4. Weight-two vectors with proofs forged to pass at one guessed challenge,
// at p = 10007, against a live pair.
Outcome statistical_soundness() {
  constexpr u128 kP = 10007;
  constexpr int kTrials = 100000;
  const auto t0 = Clock::now();
  LocalPair pair({.test_modulus = kP});
  const Field& f = pair.a().field();
  Client c(pair.client_options(4));
  SeededRng rng(4);
  const VirtualAddress v{rng.next_u128() & ~static_cast<u128>(1)};
  const MailboxCredential m0 = c.register_mailbox(false, v);
  const MailboxCredential m1 = c.register_mailbox(false, VirtualAddress{v.value ^ 1});
  const Dpf dpf(f, kAddressBits, pair.a().message_elements() + 1);
  std::vector<FieldElement> payload(dpf.payload_blocks());
  attack::RawWriter raw(pair.client_options());

  int accepted = 0, weight_two = 0, errors = 0;
  for (int trial = 0; trial < kTrials; ++trial) {
    for (auto& x : payload) x = f.random(rng);
    payload[0] = f.one();
    const auto [ka, kb] = attack::weight2_keys(dpf, v, payload, rng);
    auto col0 = [&](VirtualAddress x) {
      return std::make_pair(dpf.eval(ka, x)[0], dpf.eval(kb, x)[0]);
    };
    const auto [a0, b0] = col0(v);
    const auto [a1, b1] = col0({v.value ^ 1});
    if (!f.add(a1, b1).is_zero()) ++weight_two;
    const FieldElement guess{2 + rng.uniform(static_cast<uint64_t>(kP - 2))};
    const auto out = raw.write(rng.next_key(), ka.serialize(), kb.serialize(),
                               [&](const AuditSeed& seed) {
                                 const ClientChecks x0 = client_checks(f, seed, m0.p, a0, b0);
                                 const ClientChecks x1 = client_checks(f, seed, m1.p, a1, b1);
                                 const ServerSketch tot{f.add(x0.m, x1.m), f.add(x0.c, x1.c),
                                                        f.add(x0.C, x1.C)};
                                 const auto [pa, pb] = attack::forged_proof(f, tot, guess, rng);
                                 return std::make_pair(pa.serialize(), pb.serialize());
                               });
    if (!out.seeds_received) ++errors;
    if (out.accepted()) ++accepted;
  }
  const double rate = static_cast<double>(accepted) / kTrials;
  const double bound = 10.0 / static_cast<double>(kP);
  const double secs = seconds_since(t0);
  return {rate <= bound && errors == 0 && secs <= 600,
          fmt("%d/%d accepted (rate %.2e, bound %.2e), %d weight-two, %.0f s (limit 600 s)",
              accepted, kTrials, rate, bound, weight_two, secs)};
}

// 5. Soundness game: an adversary with its own mailboxes and a view of server
// A's state (minus the page table addresses) tries to write into mailboxes it
// holds no credentials for.
Outcome soundness_game() {
  LocalPair pair({.rng_seed = 5});
  const Field& f = pair.a().field();
  const size_t L = pair.a().message_elements();
  const Dpf dpf(f, kAddressBits, L + 1);

  Client honest(pair.client_options());
  std::vector<MailboxCredential> victims;
  for (int i = 0; i < 24; ++i) victims.push_back(honest.register_mailbox(i % 2 == 0));

  Client adv(pair.client_options(55));
  SeededRng rng(56);
  const VirtualAddress sib{rng.next_u128() & ~static_cast<u128>(1)};
  const MailboxCredential own0 = adv.register_mailbox(false, sib);
  const MailboxCredential own1 = adv.register_mailbox(false, VirtualAddress{sib.value ^ 1});
  std::vector<MailboxCredential> own{own0, own1};
  for (int i = 0; i < 6; ++i) own.push_back(adv.register_mailbox(false));
  for (int i = 0; i < 8; ++i) victims.push_back(honest.register_mailbox(true));

  // The corrupted server's view: keys, nonces, ciphertexts, physical indices.
  // Targets are every slot the adversary does not own, read off that view.
  const Vault view = pair.a().vault_copy();
  std::set<uint64_t> mine;
  for (const auto& m : own) mine.insert(m.p);
  std::vector<uint64_t> victim_slots;
  for (uint64_t p = 1; p < view.size(); ++p) {
    if (!mine.count(p) && view.record(p).key) victim_slots.push_back(p);
  }

  attack::RawWriter raw(pair.client_options());
  auto payload = [&] {
    std::vector<FieldElement> p(L + 1);
    for (auto& x : p) x = f.random(rng);
    p[0] = f.one();
    return p;
  };
  auto honest_proof = [&](uint64_t p, FieldElement wa, FieldElement wb) {
    return [&, p, wa, wb](const AuditSeed& seed) {
      const auto [pa, pb] = snip_gen(f, client_checks(f, seed, p, wa, wb), rng);
      return std::make_pair(pa.serialize(), pb.serialize());
    };
  };
  auto zero_proof = [&](const AuditSeed&) {
    const auto [pa, pb] = snip_gen(f, ClientChecks{f.zero(), f.zero(), f.zero()}, rng);
    return std::make_pair(pa.serialize(), pb.serialize());
  };
  auto random_key = [&](Party party) {
    DpfKey k;
    k.party = party;
    k.root_seed = rng.next_u128();
    k.levels.resize(kAddressBits);
    for (auto& cw : k.levels) {
      cw.seed = rng.next_u128();
      const uint64_t bits = rng.uniform(4);
      cw.t_left = bits & 1;
      cw.t_right = bits & 2;
    }
    for (int j = 0; j <= static_cast<int>(L); ++j) k.payload_cw.push_back(f.random(rng));
    return k.serialize();
  };
  auto victim_slot = [&] { return victim_slots[rng.uniform(victim_slots.size())]; };

  constexpr int kStrategies = 9;
  std::array<int, kStrategies> tried{}, accepted{};
  constexpr int kWrites = 10000;
  for (int i = 0; i < kWrites; ++i) {
    const int s = i % kStrategies;
    const RequestId id = rng.next_key();
    attack::RawOutcome out;
    switch (s) {
      case 0: {  // guessed address, proof claims the victim's slot
        const VirtualAddress g{rng.next_u128()};
        const auto [ka, kb] = dpf.gen(g, payload(), rng);
        out = raw.write(id, ka.serialize(), kb.serialize(),
                        honest_proof(victim_slot(), dpf.eval(ka, g)[0], dpf.eval(kb, g)[0]));
        break;
      }
      case 1: {  // guessed address, zero-vector proof
        const VirtualAddress g{rng.next_u128()};
        const auto [ka, kb] = dpf.gen(g, payload(), rng);
        out = raw.write(id, ka.serialize(), kb.serialize(), zero_proof);
        break;
      }
      case 2: {  // small addresses, in case the page table is the identity
        const VirtualAddress g{victim_slot()};
        const auto [ka, kb] = dpf.gen(g, payload(), rng);
        out = raw.write(id, ka.serialize(), kb.serialize(), zero_proof);
        break;
      }
      case 3: {  // weight two over own sibling slots, forged for a guessed t
        const auto [ka, kb] = attack::weight2_keys(dpf, sib, payload(), rng);
        const FieldElement a0 = dpf.eval(ka, sib)[0], b0 = dpf.eval(kb, sib)[0];
        const FieldElement a1 = dpf.eval(ka, {sib.value ^ 1})[0];
        const FieldElement b1 = dpf.eval(kb, {sib.value ^ 1})[0];
        const FieldElement guess{2 + rng.uniform(1000)};
        out = raw.write(id, ka.serialize(), kb.serialize(), [&](const AuditSeed& seed) {
          const ClientChecks x0 = client_checks(f, seed, own0.p, a0, b0);
          const ClientChecks x1 = client_checks(f, seed, own1.p, a1, b1);
          const auto [pa, pb] = attack::forged_proof(
              f, {f.add(x0.m, x1.m), f.add(x0.c, x1.c), f.add(x0.C, x1.C)}, guess, rng);
          return std::make_pair(pa.serialize(), pb.serialize());
        });
        break;
      }
      case 4: {  // random well-formed keys: dense pseudorandom vector
        out = raw.write(id, random_key(Party::kA), random_key(Party::kB), zero_proof);
        break;
      }
      case 5: {  // keys from two unrelated generations
        const auto [ka, kx] = dpf.gen({rng.next_u128()}, payload(), rng);
        const auto [ky, kb] = dpf.gen({rng.next_u128()}, payload(), rng);
        out = raw.write(id, ka.serialize(), kb.serialize(), zero_proof);
        break;
      }
      case 6: {  // malformed encodings
        const auto [ka, kb] = dpf.gen({rng.next_u128()}, payload(), rng);
        Bytes a = ka.serialize(), b = kb.serialize();
        switch (rng.uniform(3)) {
          case 0: a.resize(a.size() - 1); break;
          case 1: b[0] = 0; break;
          default: std::fill(b.end() - 16, b.end(), 0xff); break;
        }
        out = raw.write(id, a, b, zero_proof);
        break;
      }
      case 7: {  // a correct write to one of its own mailboxes
        const auto& m = own[rng.uniform(own.size())];
        const auto [ka, kb] = dpf.gen(m.v, payload(), rng);
        out = raw.write(id, ka.serialize(), kb.serialize(),
                        honest_proof(m.p, dpf.eval(ka, m.v)[0], dpf.eval(kb, m.v)[0]));
        break;
      }
      default: {  // own-mailbox keys, but the proof is for a victim's slot
        const auto& m = own[rng.uniform(own.size())];
        const auto [ka, kb] = dpf.gen(m.v, payload(), rng);
        out = raw.write(id, ka.serialize(), kb.serialize(),
                        honest_proof(victim_slot(), dpf.eval(ka, m.v)[0], dpf.eval(kb, m.v)[0]));
        break;
      }
    }
    ++tried[s];
    if (out.accepted()) ++accepted[s];
  }

  // Every victim mailbox must still hold zero, both by the owner's read and
  // by decrypting the stored shares directly.
  size_t failures = 0;
  const Vault va = pair.a().vault_copy(), vb = pair.b().vault_copy();
  for (const auto& m : victims) {
    auto plain = decrypt_share(f, m.k_a, va.record(m.p).nonce, va.record(m.p).ct);
    add_into(f, plain, decrypt_share(f, m.k_b, vb.record(m.p).nonce, vb.record(m.p).ct));
    const bool zero = std::all_of(plain.begin(), plain.end(), [](auto x) { return x.is_zero(); });
    if (!zero || honest.check(m).kind != CheckResult::Kind::kEmpty) ++failures;
  }
  std::string acc;
  for (int s = 0; s < kStrategies; ++s) acc += fmt("%s%d/%d", s ? " " : "", accepted[s], tried[s]);
  return {failures == 0 && accepted[7] == tried[7] && pair.converged(),
          fmt("%d writes, accepted per strategy [%s], %zu of %zu victim mailboxes nonzero", kWrites,
              acc.c_str(), failures, victims.size())};
}

// 6. eval_many over whole small domains against the point function itself.
Outcome small_domain_oracle() {
  const Field& f = Field::production();
  SeededRng rng(6);
  size_t mismatches = 0, instances = 0;
  for (int bits : {4, 8}) {
    std::vector<VirtualAddress> all;
    for (u128 x = 0; x < (static_cast<u128>(1) << bits); ++x) all.push_back({x});
    for (int i = 0; i < 1000; ++i, ++instances) {
      const size_t blocks = 1 + rng.uniform(12);
      const Dpf dpf(f, bits, blocks);
      const VirtualAddress v{rng.uniform(all.size())};
      std::vector<FieldElement> payload(blocks);
      for (auto& x : payload) x = f.random(rng);
      const auto [ka, kb] = dpf.gen(v, payload, rng);
      const FieldMatrix ma = dpf.eval_many(ka, all), mb = dpf.eval_many(kb, all);
      bool ok = true;
      for (size_t x = 0; x < all.size() && ok; ++x) {
        for (size_t j = 0; j < blocks; ++j) {
          const FieldElement want = x == v.value ? payload[j] : f.zero();
          if (f.add(ma.at(x, j), mb.at(x, j)) != want) ok = false;
        }
      }
      if (!ok) ++mismatches;
    }
  }
  return {mismatches == 0, fmt("%zu/%zu instances bit-exact over 4- and 8-bit domains",
                               instances - mismatches, instances)};
}

// 7. Replays of one fixed set of writes in different orders.
Outcome convergence() {
  constexpr uint64_t kSeed = 7;
  constexpr int kBoxes = 5, kWrites = 50, kReads = 10;
  const Field& f = Field::production();

  struct Fixed {
    PreparedWrite w;
    int box;
    std::vector<FieldElement> packed;
  };
  std::vector<MailboxCredential> creds;
  std::vector<Fixed> writes;

  auto fresh = [&] {
    auto pair = std::make_unique<LocalPair>(LocalPairOptions{.rng_seed = kSeed});
    Client reg(pair->client_options(kSeed));
    std::vector<MailboxCredential> got;
    for (int i = 0; i < kBoxes; ++i) got.push_back(reg.register_mailbox(false));
    return std::make_pair(std::move(pair), got);
  };

  {
    auto [pair, got] = fresh();
    creds = got;
    Client prep(pair->client_options(kSeed + 1));
    SeededRng rng(kSeed + 2);
    for (int i = 0; i < kWrites; ++i) {
      const int box = static_cast<int>(rng.uniform(kBoxes));
      Bytes body(160);
      rng.fill(body);
      writes.push_back(
          {prep.prepare(SendTarget::to(address_of(creds[box])), body), box, pack_message(f, body, 160)});
    }
  }

  std::mt19937_64 shuffle(kSeed);
  bool per_sequence = true, same_final = true, model_ok = true, all_accepted = true;
  std::optional<std::pair<Digest, Digest>> reference;
  for (int pass = 0; pass < 2; ++pass) {
    const bool with_reads = pass == 0;
    for (int seq = 0; seq < 10; ++seq) {
      auto [pair, got] = fresh();
      for (int i = 0; i < kBoxes; ++i) {
        if (got[i].v != creds[i].v || got[i].k_a != creds[i].k_a) per_sequence = false;
      }
      // Ops: write indices, then -1 for reads, shuffled together.
      std::vector<int> ops(kWrites);
      std::iota(ops.begin(), ops.end(), 0);
      if (with_reads) ops.insert(ops.end(), kReads, -1);
      std::shuffle(ops.begin(), ops.end(), shuffle);

      Client c(pair->client_options());
      std::vector<std::vector<FieldElement>> model(kBoxes,
                                                   std::vector<FieldElement>(11, f.zero()));
      for (int op : ops) {
        if (op >= 0) {
          if (c.submit(writes[op].w) != SendStatus::kAccepted) all_accepted = false;
          add_into(f, model[writes[op].box], writes[op].packed);
        } else {
          const int box = static_cast<int>(shuffle() % kBoxes);
          c.check(creds[box]);
          model[box].assign(11, f.zero());
        }
      }
      if (!pair->converged() || pair->a().seq_log() != pair->b().seq_log()) per_sequence = false;
      const Vault va = pair->a().vault_copy(), vb = pair->b().vault_copy();
      for (int i = 0; i < kBoxes; ++i) {
        const auto& ra = va.record(creds[i].p);
        const auto& rb = vb.record(creds[i].p);
        auto plain = decrypt_share(f, creds[i].k_a, ra.nonce, ra.ct);
        add_into(f, plain, decrypt_share(f, creds[i].k_b, rb.nonce, rb.ct));
        if (plain != model[i]) model_ok = false;
      }
      if (!with_reads) {
        const auto d = std::make_pair(pair->a().full_digest(), pair->b().full_digest());
        if (!reference) reference = d;
        if (d != *reference) same_final = false;
      }
    }
  }
  return {per_sequence && same_final && model_ok && all_accepted,
          fmt("10 interleavings with reads: cross-server digests %s; 10 write-only "
              "permutations: final digests %s; contents match model: %s",
              per_sequence ? "equal" : "DIFFER", same_final ? "identical" : "DIFFER",
              model_ok ? "yes" : "no")};
}

// 8. Latency grows linearly in n; client work does not grow.
Outcome scaling() {
  std::vector<double> ns, latency, compute, audit;
  std::string detail;
  for (size_t n : {1000, 25000, 50000, 75000, 100000}) {
    const BenchRecord r = bench_latency(n, 160, 9);
    ns.push_back(static_cast<double>(n));
    latency.push_back(r.write_latency_us);
    compute.push_back(r.client_compute_us);
    audit.push_back(r.audit_client_us);
    detail += fmt("n=%zu:%.0fms/%.0fus(%.0fus inline) ", n, r.write_latency_us / 1000,
                  r.client_compute_us, r.client_compute_inline_us);
  }
  const double r2 = linear_r2(ns, latency);
  const auto [lo, hi] = std::minmax_element(compute.begin(), compute.end());
  const double spread = (*hi - *lo) / *lo;
  const double worst_audit = *std::max_element(audit.begin(), audit.end());
  return {r2 >= 0.95 && spread <= 0.20 && worst_audit < 1000,
          detail + fmt("(latency/client compute); R^2 %.4f (min 0.95), client compute spread "
                       "%.1f%% (max 20%%), client audit max %.1f us (max 1000)",
                       r2, spread * 100, worst_audit)};
}

// 9. Published SNIP-1 values are a bijective image of the masks.
Outcome masking() {
  const Field f(101);
  SeededRng rng(9);
  size_t cases = 0, bijective = 0;
  for (int trial = 0; trial < 5; ++trial) {
    const ServerSketch s{f.random(rng), f.random(rng), f.random(rng)};
    const ServerSketch zero{f.zero(), f.zero(), f.zero()};
    for (uint64_t t = 2; t < 101; ++t) {
      ++cases;
      std::set<std::pair<uint64_t, uint64_t>> images;
      for (uint64_t rf = 0; rf < 101; ++rf) {
        for (uint64_t rg = 0; rg < 101; ++rg) {
          SnipProofShare pa, pb;
          pa.snip[0].rf = {rf};
          pa.snip[0].rg = {rg};
          const AuditMessage a = verifier_message(f, {}, s, pa, {t});
          const AuditMessage b = verifier_message(f, {}, zero, pb, {t});
          images.insert({lo64(f.add(a.shares[0], b.shares[0]).value),
                         lo64(f.add(a.shares[1], b.shares[1]).value)});
        }
      }
      if (images.size() == 101 * 101) ++bijective;
    }
  }
  return {bijective == cases,
          fmt("%zu/%zu (sketch, t) cases bijective over all 101^2 mask pairs", bijective, cases)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"end-to-end round trips", roundtrips},
      {"constant client communication", comm_constancy},
      {"audit completeness", completeness},
      {"statistical audit soundness", statistical_soundness},
      {"soundness game", soundness_game},
      {"small-domain oracle equivalence", small_domain_oracle},
      {"commutativity and convergence", convergence},
      {"scaling trends", scaling},
      {"masking bijection", masking},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
