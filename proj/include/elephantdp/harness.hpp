// Copyright 2026 The ElephantDP Authors
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

#pragma once

#include <algorithm>
#include <memory>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "elephantdp/baselines.hpp"
#include "elephantdp/enclave.hpp"
#include "elephantdp/scm_wire.hpp"
#include "elephantdp/transcript.hpp"

namespace elephantdp {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateTruthError : std::runtime_error {
  DegenerateTruthError() : std::runtime_error("truth vector has zero energy") {}
};

// Relative mean squared error of the attacker's reconstruction:
// sum((S_i - S'_i)^2) / sum(S_i^2).
inline double rmse(const std::vector<double>& truth, const std::vector<double>& guess) {
  if (truth.size() != guess.size()) throw ConfigError("rmse: length mismatch");
  double num = 0.0;
  double den = 0.0;
  for (size_t i = 0; i < truth.size(); ++i) {
    num += (truth[i] - guess[i]) * (truth[i] - guess[i]);
    den += truth[i] * truth[i];
  }
  if (den == 0.0) throw DegenerateTruthError();
  return num / den;
}

// ---------------------------------------------------------------------------
// Synthetic workloads. Shapes follow the attack setting: 1000 integer
// records with an age-like and an income-like column.

inline Dataset synthetic_attack_dataset(uint64_t seed, size_t rows = 1000) {
  DetRng rng(seed);
  std::vector<double> age(rows);
  std::vector<double> income(rows);
  for (size_t i = 0; i < rows; ++i) {
    age[i] = std::floor(rng.uniform() * 101.0);
    income[i] = std::floor(rng.uniform() * 1e6);
  }
  return Dataset::from_columns(
      {{"age", std::move(age)}, {"income", std::move(income)}},
      {{"age", {0.0, 100.0}}, {"income", {0.0, 1e6}}});
}

inline Dataset synthetic_bench_dataset(uint64_t seed, size_t rows) {
  DetRng rng(seed);
  std::vector<double> x(rows);
  std::vector<double> y(rows);
  for (size_t i = 0; i < rows; ++i) {
    x[i] = rng.uniform() * 100.0;
    y[i] = 0.5 * x[i] * 10.0 + rng.uniform() * 500.0;
  }
  return Dataset::from_columns({{"x", std::move(x)}, {"y", std::move(y)}},
                               {{"x", {0.0, 100.0}}, {"y", {0.0, 1000.0}}});
}

// Count queries over distinct age values, the attacker's battery.
inline std::vector<Query> count_battery(size_t k, double eps) {
  std::vector<Query> out;
  out.reserve(k);
  for (size_t j = 0; j < k; ++j) {
    out.push_back(Query::count("age", static_cast<double>(20 + (j % 60)), eps));
  }
  return out;
}

// A small mixed-kind workload for liveness runs.
inline std::vector<Query> mixed_battery(size_t k, double eps) {
  std::vector<Query> out;
  for (size_t j = 0; j < k; ++j) {
    switch (j % 4) {
      case 0: out.push_back(Query::count("age", static_cast<double>(30 + j), eps)); break;
      case 1: out.push_back(Query::avg("age", eps)); break;
      case 2: out.push_back(Query::var("income", eps)); break;
      default: out.push_back(Query::cor("age", "income", eps)); break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario description: fully determines an execution together with its seed.

enum class TargetSystem { kElephantDp, kRuntimeBudget, kSealedBudget, kNaiveDp };
enum class AttackKind { kNone, kRollback, kFork, kReplayScmReply, kCrashMatrix };

inline const char* target_name(TargetSystem t) {
  switch (t) {
    case TargetSystem::kElephantDp: return "elephantdp";
    case TargetSystem::kRuntimeBudget: return "instantiation1";
    case TargetSystem::kSealedBudget: return "instantiation2";
    case TargetSystem::kNaiveDp: return "naivedp";
  }
  return "?";
}

inline TargetSystem target_from_name(const std::string& s) {
  if (s == "elephantdp" || s == "elephant") return TargetSystem::kElephantDp;
  if (s == "instantiation1" || s == "runtime") return TargetSystem::kRuntimeBudget;
  if (s == "instantiation2" || s == "insecure" || s == "sealed") return TargetSystem::kSealedBudget;
  if (s == "naivedp" || s == "naive") return TargetSystem::kNaiveDp;
  throw ConfigError("unknown target: " + s);
}

inline const char* attack_name(AttackKind a) {
  switch (a) {
    case AttackKind::kNone: return "none";
    case AttackKind::kRollback: return "rollback";
    case AttackKind::kFork: return "fork";
    case AttackKind::kReplayScmReply: return "replay-scm";
    case AttackKind::kCrashMatrix: return "crash-matrix";
  }
  return "?";
}

inline AttackKind attack_from_name(const std::string& s) {
  if (s == "none") return AttackKind::kNone;
  if (s == "rollback") return AttackKind::kRollback;
  if (s == "fork") return AttackKind::kFork;
  if (s == "replay-scm" || s == "replay") return AttackKind::kReplayScmReply;
  if (s == "crash-matrix") return AttackKind::kCrashMatrix;
  throw ConfigError("unknown attack: " + s);
}

struct Scenario {
  TargetSystem target = TargetSystem::kElephantDp;
  AttackKind attack = AttackKind::kNone;
  uint64_t seed = 1;
  double budget = 10.0;
  double epsilon = 1.0;
  int n_r = 1;
  int fork_k = 2;
  int scm_nodes = 1;
  size_t query_count = 20;
  std::vector<Query> queries;  // overrides the generated battery when set
};

struct AttackMetrics {
  // Analyst tuples that carry an answer, after dropping the protocol's own
  // byte-equal resends. Against the insecure targets every delivery is a
  // fresh mechanism draw and counts.
  size_t answers_obtained = 0;
  double budget_consumed_claimed = 0.0;  // what the defender believes it spent
  double rmse = 0.0;
  size_t rollbacks = 0;  // restarts the attacker forced
};

inline Scenario scenario_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scenario file: ") + e.what());
  }
  Scenario sc;
  try {
    if (j.contains("target")) sc.target = target_from_name(j["target"].get<std::string>());
    if (j.contains("attack")) sc.attack = attack_from_name(j["attack"].get<std::string>());
    if (j.contains("seed")) sc.seed = j["seed"].get<uint64_t>();
    if (j.contains("budget")) sc.budget = j["budget"].get<double>();
    if (j.contains("epsilon")) sc.epsilon = j["epsilon"].get<double>();
    if (j.contains("n_r")) sc.n_r = j["n_r"].get<int>();
    if (j.contains("fork_k")) sc.fork_k = j["fork_k"].get<int>();
    if (j.contains("scm_nodes")) sc.scm_nodes = j["scm_nodes"].get<int>();
    if (j.contains("queries")) {
      if (j["queries"].is_number()) {
        sc.query_count = j["queries"].get<size_t>();
      } else {
        for (const auto& q : j["queries"]) {
          Query query;
          std::string kind = q.at("kind").get<std::string>();
          if (kind == "count") query.kind = QueryKind::kCount;
          else if (kind == "avg") query.kind = QueryKind::kAvg;
          else if (kind == "var") query.kind = QueryKind::kVar;
          else if (kind == "cor") query.kind = QueryKind::kCor;
          else throw ConfigError("unknown query kind: " + kind);
          query.column_a = q.value("column", q.value("column_a", "age"));
          query.column_b = q.value("column_b", "");
          query.predicate_value = q.value("value", 0.0);
          query.epsilon = q.value("epsilon", sc.epsilon);
          sc.queries.push_back(std::move(query));
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scenario field: ") + e.what());
  }
  return sc;
}

inline std::string metrics_csv_header() {
  return "scenario,n_r,epsilon,answers_obtained,rmse\n";
}

inline std::string metrics_csv_row(const std::string& scenario, int n_r, double epsilon,
                                   const AttackMetrics& m) {
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%s,%d,%.17g,%zu,%.12g\n", scenario.c_str(), n_r, epsilon,
                m.answers_obtained, m.rmse);
  return buf;
}

// ---------------------------------------------------------------------------
// A deployed world: storage, SCM, key service, analyst channel, trace.

class ElephantWorld {
 public:
  VersionedStore storage;
  KeyService keyservice;
  AnalystLog analyst;
  EventTrace trace;
  Dataset dataset;
  KeyBundle bundle;
  Bytes measurement = bytes_of("dp-query-enclave-v1");
  double total_budget = 0.0;
  uint64_t master_seed = 0;
  bool per_id_seeds = false;

  static std::unique_ptr<ElephantWorld> create(Dataset ds, double budget, int scm_nodes,
                                               uint64_t seed, bool per_id_seeds = false,
                                               size_t data_chunk_rows = 0) {
    auto w = std::make_unique<ElephantWorld>();
    w->dataset = std::move(ds);
    w->total_budget = budget;
    w->master_seed = seed;
    w->per_id_seeds = per_id_seeds;
    if (scm_nodes <= 1) {
      w->single_ = std::make_unique<SingleNodeScm>(ScmKeys::generate());
      w->single_->set_trace(&w->trace);
      w->scm_client_ = std::make_unique<ScmCodecClient>(*w->single_);
    } else {
      w->cluster_ = std::make_unique<ScmCluster>(static_cast<size_t>(scm_nodes));
      w->cluster_->set_trace(&w->trace);
      w->scm_client_ = std::make_unique<ScmCodecClient>(*w->cluster_);
    }
    SetupOptions opt;
    opt.measurement = w->measurement;
    opt.data_chunk_rows = data_chunk_rows;
    w->bundle = setup_deployment(w->dataset, budget, *w->scm_client_, w->storage,
                                 w->keyservice, &w->trace, opt);
    return w;
  }

  ScmHandle& scm() { return *scm_client_; }
  ScmCluster* cluster() { return cluster_.get(); }
  SingleNodeScm* single_node() { return single_.get(); }

  EnclaveEnv env(ScmHandle* scm_override = nullptr) {
    return EnclaveEnv{scm_override ? scm_override : scm_client_.get(), &storage, &keyservice,
                      &analyst, &trace};
  }

  std::unique_ptr<Enclave> start_enclave(ScmHandle* scm_override = nullptr) {
    uint64_t instance = next_instance_++;
    NoisePolicy noise = per_id_seeds
                            ? NoisePolicy::per_id(master_seed)
                            : NoisePolicy::per_instance(mix_seed(master_seed, 0x9000 + instance));
    return std::make_unique<Enclave>(env(scm_override), measurement, noise, instance);
  }

 private:
  std::unique_ptr<SingleNodeScm> single_;
  std::unique_ptr<ScmCluster> cluster_;
  std::unique_ptr<ScmCodecClient> scm_client_;
  uint64_t next_instance_ = 0;
};

// The attacker controls storage and sees SCM traffic, so it can line the
// served version up with the digest the SCM currently holds: it hashes each
// stored ciphertext (public bytes) against the digest in a GetState reply it
// requests itself. Returns false when no stored version matches.
inline bool attacker_align_storage(ElephantWorld& w) {
  Nonce nonce = Nonce::generate();
  ScmReply reply;
  try {
    reply = w.scm().get_state(nonce);
  } catch (const std::exception&) {
    return false;
  }
  StateDigest digest;
  try {
    digest = decode_curstate(reply.curstate);
  } catch (const CodecError&) {
    return false;
  }
  size_t n = w.storage.history_size(kStateTag);
  for (size_t v = n; v-- > 0;) {
    auto record = w.storage.version(kStateTag, v);
    if (!record) continue;
    try {
      SealedState s = decode_state_record(*record);
      if (sha256(s.ciphertext) == digest.h) {
        w.storage.set_policy(kStateTag, v + 1 == n ? ServePolicy::latest()
                                                   : ServePolicy::at_version(v));
        return true;
      }
    } catch (const CodecError&) {
      continue;
    }
  }
  return false;
}

// Counting helpers over the analyst channel.
inline size_t distinct_non_bottom(const AnalystLog& log) {
  std::set<Bytes> seen;
  size_t n = 0;
  for (const Bytes& raw : log.raw()) {
    AnalystTuple t = decode_analyst_tuple(raw);
    if (t.a.is_bottom) continue;
    if (seen.insert(raw).second) ++n;
  }
  return n;
}

inline size_t raw_non_bottom(const AnalystLog& log) {
  size_t n = 0;
  for (const AnalystTuple& t : log.tuples()) {
    if (!t.a.is_bottom) ++n;
  }
  return n;
}

// ---------------------------------------------------------------------------
// SCM interceptors for the replay attack.

// Delivers one captured GetState reply instead of a fresh one.
class CannedGetScm : public ScmHandle {
 public:
  CannedGetScm(ScmHandle& inner, ScmReply canned) : inner_(inner), canned_(std::move(canned)) {}

  ScmReply init_state(const Nonce& nonce, const Bytes& s) override {
    return inner_.init_state(nonce, s);
  }
  ScmReply get_state(const Nonce&) override { return canned_; }
  ScmReply update_state(const Nonce& nonce, uint64_t id, const Bytes& s) override {
    return inner_.update_state(nonce, id, s);
  }
  VerifyKey verify_key() const override { return inner_.verify_key(); }

 private:
  ScmHandle& inner_;
  ScmReply canned_;
};

// Re-signs genuine replies under the adversary's own key.
class ResignScm : public ScmHandle {
 public:
  explicit ResignScm(ScmHandle& inner) : inner_(inner), keys_(ScmKeys::generate()) {}

  ScmReply init_state(const Nonce& nonce, const Bytes& s) override {
    return resign(inner_.init_state(nonce, s));
  }
  ScmReply get_state(const Nonce& nonce) override { return resign(inner_.get_state(nonce)); }
  ScmReply update_state(const Nonce& nonce, uint64_t id, const Bytes& s) override {
    return resign(inner_.update_state(nonce, id, s));
  }
  VerifyKey verify_key() const override { return inner_.verify_key(); }

 private:
  ScmReply resign(ScmReply r) {
    if (r.state_reply) {
      r.sig = sign_tagged(keys_.sk, DomainTag::kScmState,
                          scm_state_payload(r.id, r.curstate, r.nonce_echo));
    } else {
      r.sig = sign_tagged(keys_.sk, DomainTag::kScmAck, scm_ack_payload(r.msg, r.nonce_echo));
    }
    return r;
  }

  ScmHandle& inner_;
  ScmKeys keys_;
};

// ---------------------------------------------------------------------------
// Attack drivers.

namespace detail {

inline double claimed_consumption(const EventTrace& trace, double total) {
  double last_budget = total;
  for (const Event& e : trace.snapshot()) {
    if (e.kind == Event::Kind::kAnalystSend) last_budget = e.budget;
  }
  return total - last_budget;
}

}  // namespace detail

// Rollback attack: whenever the target runs out of budget the attacker kills
// the TEE, serves the initial state version on restart and repeats each
// query until it has n_r samples; its guess is the per-query sample mean.
// Secure targets refuse the stale state at init and the attack stalls.
inline AttackMetrics rollback_attack(const Scenario& sc,
                                     std::unique_ptr<ElephantWorld>* world_out = nullptr) {
  Dataset ds = synthetic_attack_dataset(mix_seed(sc.seed, 1));
  std::vector<Query> battery =
      sc.queries.empty() ? count_battery(sc.query_count, sc.epsilon) : sc.queries;
  std::vector<double> truth;
  for (const Query& q : battery) truth.push_back(evaluate_exact(ds, q));
  std::vector<std::vector<double>> samples(battery.size());
  AttackMetrics m;

  if (sc.target == TargetSystem::kSealedBudget || sc.target == TargetSystem::kRuntimeBudget) {
    VersionedStore storage;
    AnalystLog analyst;
    EventTrace trace;
    KeyBundle bundle = sc.target == TargetSystem::kSealedBudget
                           ? setup_sealed_budget_deployment(ds, sc.budget, storage)
                           : KeyBundle{};
    if (sc.target == TargetSystem::kRuntimeBudget) {
      bundle.data_key = AeadKey::generate();
      store_encrypted_dataset(storage, bundle.data_key, ds, 0);
    }
    uint64_t instance = 0;
    auto make_sealed = [&] {
      auto e = std::make_unique<SealedBudgetEnclave>(
          &storage, &analyst, &trace, bundle,
          NoisePolicy::per_instance(mix_seed(sc.seed, 0x5e00 + instance)), instance);
      ++instance;
      e->init();
      return e;
    };
    auto make_runtime = [&] {
      auto e = std::make_unique<RuntimeBudgetEnclave>(
          &storage, &analyst, &trace, bundle, sc.budget,
          NoisePolicy::per_instance(mix_seed(sc.seed, 0x5e00 + instance)), instance);
      ++instance;
      e->init();
      return e;
    };
    std::unique_ptr<SealedBudgetEnclave> sealed;
    std::unique_ptr<RuntimeBudgetEnclave> runtime;
    if (sc.target == TargetSystem::kSealedBudget) sealed = make_sealed();
    else runtime = make_runtime();

    for (int r = 0; r < sc.n_r; ++r) {
      for (size_t j = 0; j < battery.size(); ++j) {
        for (int guard = 0; guard < 1000; ++guard) {
          Answer a = sealed ? sealed->reply_query(battery[j]) : runtime->reply_query(battery[j]);
          if (!a.is_bottom) {
            samples[j].push_back(a.value);
            break;
          }
          // Budget gone: kill the TEE, roll the state file back, restart.
          ++m.rollbacks;
          if (sealed) {
            sealed->crash();
            storage.set_policy(kStateTag, ServePolicy::at_version(0));
            sealed = make_sealed();
            storage.set_policy(kStateTag, ServePolicy::latest());
          } else {
            runtime->crash();
            runtime = make_runtime();
          }
        }
      }
    }
    m.answers_obtained = raw_non_bottom(analyst);
    m.budget_consumed_claimed = detail::claimed_consumption(trace, sc.budget);
  } else if (sc.target == TargetSystem::kElephantDp) {
    auto world = ElephantWorld::create(ds, sc.budget, sc.scm_nodes, sc.seed);
    ElephantWorld& w = *world;
    auto enclave = w.start_enclave();
    enclave->init();
    bool attack_dead = false;
    for (int r = 0; r < sc.n_r && !attack_dead; ++r) {
      for (size_t j = 0; j < battery.size() && !attack_dead; ++j) {
        for (int guard = 0;; ++guard) {
          if (guard >= 8) {
            attack_dead = true;  // every rollback restart aborted
            break;
          }
          if (enclave->phase() != Phase::kReady) {
            // The attacker's move: serve the initial version to the restart.
            ++m.rollbacks;
            w.storage.set_policy(kStateTag, ServePolicy::at_version(0));
            enclave = w.start_enclave();
            enclave->init();
            w.storage.set_policy(kStateTag, ServePolicy::latest());
            if (enclave->phase() != Phase::kReady) continue;
          }
          QueryRound round = enclave->begin_query(battery[j]);
          round.run_to_completion();
          auto last = w.analyst.last();
          if (last && !last->a.is_bottom && last->q == battery[j]) {
            samples[j].push_back(last->a.value);
            break;
          }
          if (last && last->a.is_bottom && enclave->phase() == Phase::kReady) {
            break;  // budget exhausted for good; bottom is the final answer
          }
        }
      }
    }
    m.answers_obtained = distinct_non_bottom(w.analyst);
    m.budget_consumed_claimed = detail::claimed_consumption(w.trace, sc.budget);
    if (world_out) *world_out = std::move(world);
  } else {
    throw ConfigError("rollback attack targets a budget-persisting system");
  }

  // Reconstruction error over the queries the attacker actually sampled.
  std::vector<double> t2;
  std::vector<double> g2;
  for (size_t j = 0; j < battery.size(); ++j) {
    if (samples[j].empty()) continue;
    double mean = std::accumulate(samples[j].begin(), samples[j].end(), 0.0) /
                  static_cast<double>(samples[j].size());
    t2.push_back(truth[j]);
    g2.push_back(mean);
  }
  m.rmse = t2.empty() ? 0.0 : rmse(t2, g2);
  return m;
}

// Fork attack: k enclaves started from the same storage/SCM snapshot race on
// every query. The SCM's per-id uniqueness lets exactly one of them answer;
// the rest abort at the update step and are restarted.
inline AttackMetrics fork_attack(const Scenario& sc,
                                 std::unique_ptr<ElephantWorld>* world_out = nullptr) {
  if (sc.fork_k < 2) throw ConfigError("fork attack needs k >= 2");
  Dataset ds = synthetic_attack_dataset(mix_seed(sc.seed, 1));
  std::vector<Query> battery =
      sc.queries.empty() ? count_battery(sc.query_count, sc.epsilon) : sc.queries;
  AttackMetrics m;

  if (sc.target == TargetSystem::kSealedBudget) {
    VersionedStore storage;
    AnalystLog analyst;
    EventTrace trace;
    KeyBundle bundle = setup_sealed_budget_deployment(ds, sc.budget, storage);
    for (int i = 0; i < sc.fork_k; ++i) {
      // Every fork initializes from the owner's snapshot: full budget each.
      storage.set_policy(kStateTag, ServePolicy::at_version(0));
      SealedBudgetEnclave e(&storage, &analyst, &trace, bundle,
                            NoisePolicy::per_instance(mix_seed(sc.seed, 0xF0 + i)),
                            static_cast<uint64_t>(i));
      e.init();
      storage.set_policy(kStateTag, ServePolicy::latest());
      size_t j = 0;
      for (int guard = 0; guard < 10000; ++guard) {
        Answer a = e.reply_query(battery[j++ % battery.size()]);
        if (a.is_bottom) break;
      }
    }
    m.answers_obtained = raw_non_bottom(analyst);
    m.budget_consumed_claimed = detail::claimed_consumption(trace, sc.budget);
    return m;
  }
  if (sc.target != TargetSystem::kElephantDp) {
    throw ConfigError("fork attack targets elephantdp or instantiation2");
  }

  auto world = ElephantWorld::create(ds, sc.budget, sc.scm_nodes, sc.seed);
  ElephantWorld& w = *world;
  DetRng sched(mix_seed(sc.seed, 0xF0));

  std::vector<std::unique_ptr<Enclave>> forks;
  for (int i = 0; i < sc.fork_k; ++i) {
    auto e = w.start_enclave();
    e->init();
    forks.push_back(std::move(e));
  }

  size_t rounds = static_cast<size_t>(sc.budget / sc.epsilon) + 2;
  for (size_t t = 0; t < rounds; ++t) {
    const Query& q = battery[t % battery.size()];
    // Restart any fork that aborted in the previous round; the attacker
    // aligns the served version with the SCM digest first.
    for (auto& e : forks) {
      if (e->phase() == Phase::kReady) continue;
      attacker_align_storage(w);
      e = w.start_enclave();
      e->init();
      w.storage.set_policy(kStateTag, ServePolicy::latest());
    }
    std::vector<std::pair<Enclave*, QueryRound>> racing;
    for (auto& e : forks) {
      if (e->phase() != Phase::kReady) continue;
      racing.emplace_back(e.get(), e->begin_query(q));
    }
    if (racing.empty()) break;
    // All racers compute and store, then hit the SCM in a schedule-drawn
    // order; per-id uniqueness gives the first one the Ack.
    for (auto& [e, round] : racing) round.advance();  // mechanism
    for (auto& [e, round] : racing) round.advance();  // store
    std::vector<size_t> order(racing.size());
    std::iota(order.begin(), order.end(), 0);
    for (size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[sched.below(i)]);
    for (size_t idx : order) racing[idx].second.run_to_completion();
  }

  m.answers_obtained = distinct_non_bottom(w.analyst);
  m.budget_consumed_claimed = detail::claimed_consumption(w.trace, sc.budget);
  if (world_out) *world_out = std::move(world);
  return m;
}

// Replay of a captured signed GetState reply (and a re-signed one) against a
// restarting enclave; the control case initializes against the live SCM.
struct ReplayOutcome {
  AbortReason stale_reply = AbortReason::kNone;
  AbortReason resigned_reply = AbortReason::kNone;
  Phase control = Phase::kFresh;
};

inline ReplayOutcome replay_scm_reply(const Scenario& sc) {
  Dataset ds = synthetic_attack_dataset(mix_seed(sc.seed, 1), 200);
  auto w = ElephantWorld::create(ds, sc.budget, sc.scm_nodes, sc.seed);

  // The adversary snoops an early reply off the network (here: asks itself).
  Nonce old_nonce = Nonce::generate();
  ScmReply captured = w->scm().get_state(old_nonce);

  // Move the system forward so the captured reply is genuinely stale.
  auto e0 = w->start_enclave();
  e0->init();
  e0->reply_query(Query::count("age", 30, sc.epsilon));
  e0->reply_query(Query::avg("age", sc.epsilon));
  e0->crash();

  ReplayOutcome out;
  CannedGetScm replayer(w->scm(), captured);
  auto e1 = w->start_enclave(&replayer);
  e1->init();
  out.stale_reply = e1->abort_reason();

  ResignScm resigner(w->scm());
  auto e2 = w->start_enclave(&resigner);
  e2->init();
  out.resigned_reply = e2->abort_reason();

  auto e3 = w->start_enclave();
  out.control = e3->init();
  return out;
}

// ---------------------------------------------------------------------------
// Crash matrix: every yield point x every query position, honest storage.

struct CrashMatrixCell {
  YieldPoint point = YieldPoint::kAfterMechanism;
  size_t query_index = 0;
  bool restart_ready = false;
  bool audit_ok = false;
  bool structural_ok = false;
  bool seed_exact_ok = true;  // checked only with pinned seeds
  size_t distinct_answers = 0;  // non-bottom entries in the built transcript
  size_t transcript_length = 0;
  bool final_entry_bottom = false;
  std::string detail;

  bool pass() const { return restart_ready && audit_ok && structural_ok && seed_exact_ok; }
};

struct CrashMatrixReport {
  std::vector<CrashMatrixCell> cells;

  bool all_pass() const {
    for (const auto& c : cells) {
      if (!c.pass()) return false;
    }
    return true;
  }

  std::string to_string() const {
    std::string out;
    for (const auto& c : cells) {
      out += std::string(yield_point_name(c.point)) + " q" + std::to_string(c.query_index) +
             ": " + (c.pass() ? "pass" : "FAIL " + c.detail) + "\n";
    }
    return out;
  }
};

// Runs queries [0, n); crashes the round for query `crash_index` at `point`;
// restarts, resubmits if the query was not accounted, finishes the workload.
inline CrashMatrixCell run_crash_cell(const Dataset& ds, double budget, int scm_nodes,
                                      const std::vector<Query>& workload, size_t crash_index,
                                      YieldPoint point, uint64_t seed, bool pinned) {
  CrashMatrixCell cell;
  cell.point = point;
  cell.query_index = crash_index;
  seed_process_randomness(seed);
  auto w = ElephantWorld::create(ds, budget, scm_nodes, seed, pinned);
  auto e = w->start_enclave();
  if (e->init() != Phase::kReady) {
    cell.detail = "initial init failed";
    return cell;
  }
  cell.restart_ready = true;
  for (size_t t = 0; t < workload.size(); ++t) {
    const Query& q = workload[t];
    uint64_t target_id = static_cast<uint64_t>(t) + 1;
    if (t == crash_index) {
      QueryRound round = e->begin_query(q);
      while (auto y = round.advance()) {
        if (*y == point) {
          e->crash(point);
          break;
        }
      }
      e = w->start_enclave();
      if (e->init() != Phase::kReady) {
        cell.restart_ready = false;
        cell.detail = std::string("restart aborted: ") + abort_reason_name(e->abort_reason());
        return cell;
      }
      if (e->current_id() != target_id) {
        // Not accounted before the crash; submit it again.
        e->reply_query(q);
      }
    } else {
      e->reply_query(q);
    }
    if (e->phase() == Phase::kAborted && e->abort_reason() == AbortReason::kBudgetExhausted) {
      e = w->start_enclave();
      if (e->init() != Phase::kReady) {
        cell.restart_ready = false;
        cell.detail = "restart after exhaustion aborted";
        return cell;
      }
    } else if (e->phase() != Phase::kReady) {
      cell.restart_ready = false;
      cell.detail = std::string("round aborted: ") + abort_reason_name(e->abort_reason());
      return cell;
    }
  }

  AuditReport audit = audit_trace(w->trace, budget);
  cell.audit_ok = audit.ok();
  if (!audit.ok()) cell.detail = audit.violations.front();
  try {
    Transcript t = transcript_from_trace(w->trace);
    cell.transcript_length = t.size();
    for (const TranscriptEntry& entry : t) {
      if (!entry.a.is_bottom) ++cell.distinct_answers;
    }
    cell.final_entry_bottom = !t.empty() && t.back().a.is_bottom;
    Transcript ideal_structural = ideal_dp(w->dataset, budget, transcript_queries(t),
                                           per_index_rngs(mix_seed(seed, 0xabc)));
    cell.structural_ok = equivalent(t, ideal_structural, w->dataset, EquivalenceMode::kStructural);
    if (!cell.structural_ok) cell.detail = "structural transcript mismatch";
    if (pinned) {
      Transcript ideal_exact =
          ideal_dp(w->dataset, budget, transcript_queries(t), per_index_rngs(seed));
      cell.seed_exact_ok = equivalent(t, ideal_exact, w->dataset, EquivalenceMode::kSeedExact);
      if (!cell.seed_exact_ok) cell.detail = "seed-exact transcript mismatch";
    }
  } catch (const MalformedTrace& ex) {
    cell.structural_ok = false;
    cell.detail = ex.what();
  }
  return cell;
}

inline CrashMatrixReport crash_matrix(const Scenario& sc, bool pinned = false) {
  Dataset ds = synthetic_attack_dataset(mix_seed(sc.seed, 1), 400);
  std::vector<Query> workload =
      sc.queries.empty() ? mixed_battery(5, sc.epsilon) : sc.queries;
  CrashMatrixReport report;
  for (YieldPoint p : kAllYieldPoints) {
    for (size_t i = 0; i < workload.size(); ++i) {
      uint64_t cell_seed = mix_seed(sc.seed, static_cast<uint64_t>(p) * 131 + i);
      report.cells.push_back(
          run_crash_cell(ds, sc.budget, sc.scm_nodes, workload, i, p, cell_seed, pinned));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Randomized confidentiality runs: random schedules, random crashes, and
// storage that turns adversarial for some restarts. Adversarial cells may
// abort; every completed run must be transcript-equivalent to the ideal
// functionality on the id-ordered queries.

struct RandomRunResult {
  bool completed = false;
  bool audit_ok = false;
  bool structural_ok = false;
  bool seed_exact_ok = true;
  size_t adversarial_aborts = 0;
  std::string detail;

  bool pass() const { return completed && audit_ok && structural_ok && seed_exact_ok; }
};

inline RandomRunResult randomized_run(uint64_t seed, bool pinned) {
  RandomRunResult res;
  seed_process_randomness(seed);
  DetRng sched(mix_seed(seed, 0xD1));
  Dataset ds = synthetic_attack_dataset(mix_seed(seed, 1), 300);
  double budget = 4.0 + static_cast<double>(sched.below(9));
  size_t nq = 4 + sched.below(7);
  std::vector<Query> workload;
  for (size_t t = 0; t < nq; ++t) {
    double eps = sched.chance(0.5) ? 0.5 : 1.0;
    switch (sched.below(4)) {
      case 0: workload.push_back(Query::count("age", static_cast<double>(sched.below(80)), eps)); break;
      case 1: workload.push_back(Query::avg("age", eps)); break;
      case 2: workload.push_back(Query::var("income", eps)); break;
      default: workload.push_back(Query::cor("age", "income", eps)); break;
    }
  }
  int nodes = sched.chance(0.25) ? 3 : 1;
  auto w = ElephantWorld::create(ds, budget, nodes, seed, pinned);
  auto e = w->start_enclave();
  if (e->init() != Phase::kReady) {
    res.detail = "initial init failed";
    return res;
  }

  auto restart_honest = [&]() -> bool {
    w->storage.set_policy(kStateTag, ServePolicy::latest());
    e = w->start_enclave();
    return e->init() == Phase::kReady;
  };

  for (size_t t = 0; t < workload.size(); ++t) {
    const Query& q = workload[t];
    uint64_t target_id = static_cast<uint64_t>(t) + 1;
    if (sched.chance(0.3)) {
      // Crash this round at a random yield point.
      YieldPoint p = kAllYieldPoints[sched.below(5)];
      QueryRound round = e->begin_query(q);
      while (auto y = round.advance()) {
        if (*y == p) {
          e->crash(p);
          break;
        }
      }
      if (e->phase() != Phase::kCrashed && e->phase() != Phase::kAborted) e->crash(p);
      if (sched.chance(0.4)) {
        // Adversarial restart first: stale, corrupted or absent state.
        size_t hist = w->storage.history_size(kStateTag);
        switch (sched.below(3)) {
          case 0:
            w->storage.set_policy(kStateTag, ServePolicy::at_version(sched.below(hist)));
            break;
          case 1:
            w->storage.set_policy(
                kStateTag, ServePolicy::corrupt([](Bytes& b) { if (!b.empty()) b[b.size() / 2] ^= 0x40; }));
            break;
          default:
            w->storage.set_policy(kStateTag, ServePolicy::absent());
            break;
        }
        e = w->start_enclave();
        if (e->init() != Phase::kReady) ++res.adversarial_aborts;
      }
      if (e->phase() != Phase::kReady && !restart_honest()) {
        res.detail = "honest restart failed";
        return res;
      }
      if (e->current_id() != target_id) e->reply_query(q);
    } else {
      e->reply_query(q);
    }
    if (e->phase() == Phase::kAborted && e->abort_reason() == AbortReason::kBudgetExhausted) {
      if (!restart_honest()) {
        res.detail = "restart after exhaustion failed";
        return res;
      }
    } else if (e->phase() != Phase::kReady) {
      res.detail = std::string("unexpected abort: ") + abort_reason_name(e->abort_reason());
      return res;
    }
  }
  res.completed = true;

  AuditReport audit = audit_trace(w->trace, budget);
  res.audit_ok = audit.ok();
  if (!audit.ok()) {
    res.detail = audit.violations.front();
    return res;
  }
  try {
    Transcript t = transcript_from_trace(w->trace);
    Transcript ideal_structural = ideal_dp(w->dataset, budget, transcript_queries(t),
                                           per_index_rngs(mix_seed(seed, 0xabc)));
    res.structural_ok =
        equivalent(t, ideal_structural, w->dataset, EquivalenceMode::kStructural);
    if (pinned) {
      Transcript ideal_exact =
          ideal_dp(w->dataset, budget, transcript_queries(t), per_index_rngs(seed));
      res.seed_exact_ok = equivalent(t, ideal_exact, w->dataset, EquivalenceMode::kSeedExact);
    }
    if (!res.structural_ok) res.detail = "structural transcript mismatch";
    if (!res.seed_exact_ok) res.detail = "seed-exact transcript mismatch";
  } catch (const MalformedTrace& ex) {
    res.structural_ok = false;
    res.detail = ex.what();
  }
  return res;
}

// ---------------------------------------------------------------------------
// Scenario dispatch.

struct RunResult {
  AttackMetrics metrics;
  Digest trace_fingerprint{};
  std::string report;
};

inline RunResult run_scenario(const Scenario& sc) {
  if (!(sc.budget > 0.0)) throw ConfigError("budget must be positive");
  if (!(sc.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (sc.n_r < 1) throw ConfigError("n_r must be at least 1");
  if (sc.scm_nodes < 1 || sc.scm_nodes % 2 == 0) throw ConfigError("scm_nodes must be odd");
  seed_process_randomness(sc.seed);
  RunResult out;
  switch (sc.attack) {
    case AttackKind::kRollback: {
      std::unique_ptr<ElephantWorld> w;
      out.metrics = rollback_attack(sc, &w);
      if (w) out.trace_fingerprint = w->trace.fingerprint();
      break;
    }
    case AttackKind::kFork: {
      std::unique_ptr<ElephantWorld> w;
      out.metrics = fork_attack(sc, &w);
      if (w) out.trace_fingerprint = w->trace.fingerprint();
      break;
    }
    case AttackKind::kReplayScmReply: {
      ReplayOutcome r = replay_scm_reply(sc);
      out.report = std::string("stale-reply: ") + abort_reason_name(r.stale_reply) +
                   "\nresigned-reply: " + abort_reason_name(r.resigned_reply) +
                   "\ncontrol: " + phase_name(r.control) + "\n";
      out.metrics.answers_obtained = 0;
      break;
    }
    case AttackKind::kCrashMatrix: {
      CrashMatrixReport report = crash_matrix(sc);
      out.report = report.to_string();
      out.metrics.answers_obtained = 0;
      for (const auto& c : report.cells) {
        if (c.pass()) ++out.metrics.answers_obtained;
      }
      break;
    }
    case AttackKind::kNone: {
      Dataset ds = synthetic_attack_dataset(mix_seed(sc.seed, 1));
      std::vector<Query> battery =
          sc.queries.empty() ? count_battery(sc.query_count, sc.epsilon) : sc.queries;
      if (sc.target == TargetSystem::kElephantDp) {
        auto w = ElephantWorld::create(ds, sc.budget, sc.scm_nodes, sc.seed);
        auto e = w->start_enclave();
        e->init();
        for (const Query& q : battery) {
          if (e->phase() != Phase::kReady) {
            e = w->start_enclave();
            if (e->init() != Phase::kReady) break;
          }
          e->reply_query(q);
        }
        out.metrics.answers_obtained = distinct_non_bottom(w->analyst);
        out.metrics.budget_consumed_claimed = detail::claimed_consumption(w->trace, sc.budget);
        out.trace_fingerprint = w->trace.fingerprint();
      } else if (sc.target == TargetSystem::kNaiveDp) {
        AnalystLog analyst;
        NaiveDpServer server(ds, sc.budget, &analyst, NoisePolicy::per_instance(sc.seed));
        for (const Query& q : battery) server.reply_query(q);
        out.metrics.answers_obtained = raw_non_bottom(analyst);
      } else if (sc.target == TargetSystem::kSealedBudget) {
        VersionedStore storage;
        AnalystLog analyst;
        EventTrace trace;
        KeyBundle bundle = setup_sealed_budget_deployment(ds, sc.budget, storage);
        SealedBudgetEnclave e(&storage, &analyst, &trace, bundle,
                              NoisePolicy::per_instance(sc.seed));
        e.init();
        for (const Query& q : battery) e.reply_query(q);
        out.metrics.answers_obtained = raw_non_bottom(analyst);
        out.metrics.budget_consumed_claimed = detail::claimed_consumption(trace, sc.budget);
        out.trace_fingerprint = trace.fingerprint();
      } else {
        VersionedStore storage;
        AnalystLog analyst;
        EventTrace trace;
        KeyBundle bundle;
        bundle.data_key = AeadKey::generate();
        store_encrypted_dataset(storage, bundle.data_key, ds, 0);
        RuntimeBudgetEnclave e(&storage, &analyst, &trace, bundle, sc.budget,
                               NoisePolicy::per_instance(sc.seed));
        e.init();
        for (const Query& q : battery) e.reply_query(q);
        out.metrics.answers_obtained = raw_non_bottom(analyst);
        out.metrics.budget_consumed_claimed = detail::claimed_consumption(trace, sc.budget);
        out.trace_fingerprint = trace.fingerprint();
      }
      break;
    }
  }
  return out;
}

}  // namespace elephantdp
