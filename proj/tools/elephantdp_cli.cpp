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

// Operator front end: set up a deployment, run protocol rounds against it,
// launch the attack scenarios and the crash matrix, and emit CSV metrics.
//
// Exit codes: 0 success, 2 configuration error, 3 protocol abort,
// 4 assertion failure in a matrix run.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "elephantdp/bench.hpp"
#include "elephantdp/harness.hpp"

namespace fs = std::filesystem;
using namespace elephantdp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitAbort = 3;
constexpr int kExitMatrixFailure = 4;

struct DeploymentConfig {
  double budget = 10.0;
  double epsilon = 1.0;
  int nodes = 3;
  uint64_t seed = 1;
  BoundsMap bounds;
  std::string measurement = "dp-query-enclave-v1";

  nlohmann::json to_json() const {
    nlohmann::json b;
    for (const auto& [name, range] : bounds) b[name] = {range.lo, range.hi};
    return nlohmann::json{{"budget", budget}, {"epsilon", epsilon}, {"nodes", nodes},
                          {"seed", seed},     {"bounds", b},        {"measurement", measurement}};
  }

  static DeploymentConfig from_json(const nlohmann::json& j) {
    DeploymentConfig c;
    c.budget = j.at("budget").get<double>();
    c.epsilon = j.at("epsilon").get<double>();
    c.nodes = j.at("nodes").get<int>();
    c.seed = j.at("seed").get<uint64_t>();
    c.measurement = j.at("measurement").get<std::string>();
    for (const auto& [name, range] : j.at("bounds").items()) {
      c.bounds[name] = ColumnBounds{range[0].get<double>(), range[1].get<double>()};
    }
    return c;
  }
};

BoundsMap parse_bounds(const std::vector<std::string>& specs) {
  BoundsMap out;
  for (const std::string& s : specs) {
    auto eq = s.find('=');
    auto colon = s.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos) {
      throw ConfigError("bad bounds spec '" + s + "', expected col=lo:hi");
    }
    try {
      out[s.substr(0, eq)] = ColumnBounds{std::stod(s.substr(eq + 1, colon - eq - 1)),
                                          std::stod(s.substr(colon + 1))};
    } catch (const std::exception&) {
      throw ConfigError("bad bounds numbers in '" + s + "'");
    }
  }
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::trunc);
  out << text;
}

void write_file(const fs::path& p, const Bytes& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

Bytes read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// A deployment directory: config.json + file-backed storage + SCM snapshot +
// key registry.
struct Deployment {
  fs::path root;
  DeploymentConfig config;
  std::unique_ptr<FileStore> storage;
  std::unique_ptr<ScmCluster> scm;
  std::unique_ptr<KeyService> keys;

  static Deployment open(const fs::path& root) {
    Deployment d;
    d.root = root;
    d.config = DeploymentConfig::from_json(nlohmann::json::parse(slurp(root / "config.json")));
    d.storage = std::make_unique<FileStore>(root / "storage");
    d.scm = ScmCluster::decode_snapshot(read_bytes(root / "scm.bin"));
    d.keys = KeyService::decode_ptr(read_bytes(root / "keys.bin"));
    return d;
  }

  void persist_scm() { write_file(root / "scm.bin", scm->encode_snapshot()); }
};

int cmd_setup(const std::string& data_path, const std::vector<std::string>& bounds_specs,
              double budget, double epsilon, int nodes, uint64_t seed,
              const std::string& out_dir) {
  if (nodes < 1 || nodes % 2 == 0) throw ConfigError("--nodes must be odd");
  if (!(budget > 0.0)) throw ConfigError("--budget must be positive");
  fs::path root(out_dir);
  if (fs::exists(root / "config.json")) {
    std::fprintf(stderr, "error: %s already holds a deployment\n", out_dir.c_str());
    return kExitConfig;
  }
  DeploymentConfig config;
  config.budget = budget;
  config.epsilon = epsilon;
  config.nodes = nodes;
  config.seed = seed;
  config.bounds = parse_bounds(bounds_specs);

  std::ifstream csv(data_path);
  if (!csv) throw ConfigError("cannot read dataset " + data_path);
  Dataset dataset = Dataset::from_csv(csv, config.bounds);

  seed_process_randomness(seed);
  fs::create_directories(root);
  FileStore storage(root / "storage");
  ScmCluster scm(static_cast<size_t>(nodes));
  KeyService keys;
  SetupOptions opt;
  opt.measurement = bytes_of(config.measurement);
  setup_deployment(dataset, budget, scm, storage, keys, nullptr, opt);

  write_file(root / "scm.bin", scm.encode_snapshot());
  write_file(root / "keys.bin", keys.encode());
  write_file(root / "config.json", config.to_json().dump(2) + "\n");
  std::printf("deployment ready at %s (rows=%zu, budget=%.17g, nodes=%d)\n", out_dir.c_str(),
              dataset.row_count(), budget, nodes);
  return kExitOk;
}

int cmd_query(const std::string& dir, const std::string& type, const std::string& column,
              const std::string& column_b, double value, double epsilon_flag, bool zero_noise) {
  Deployment d = Deployment::open(dir);
  double eps = epsilon_flag > 0.0 ? epsilon_flag : d.config.epsilon;

  Query q;
  if (type == "count") q = Query::count(column, value, eps);
  else if (type == "avg") q = Query::avg(column, eps);
  else if (type == "var") q = Query::var(column, eps);
  else if (type == "cor") q = Query::cor(column, column_b, eps);
  else throw ConfigError("unknown query type " + type);
  if (q.kind == QueryKind::kCor && column_b.empty()) {
    throw ConfigError("cor needs --column2");
  }

  // Fresh but reproducible randomness for this round: derived from the
  // deployment seed and the current register position.
  uint64_t round = d.scm->get_state(Nonce::generate()).id + 1;
  seed_process_randomness(mix_seed(d.config.seed, 0x0e00 + round));

  AnalystLog analyst;
  EventTrace trace;
  EnclaveEnv env{d.scm.get(), d.storage.get(), d.keys.get(), &analyst, &trace};
  NoisePolicy noise = NoisePolicy::per_id(d.config.seed);
  noise.zero_noise = zero_noise;
  Enclave enclave(env, bytes_of(d.config.measurement), noise, 0);

  if (enclave.init() != Phase::kReady) {
    std::fprintf(stderr, "abort at init: %s\n", abort_reason_name(enclave.abort_reason()));
    d.persist_scm();
    return kExitAbort;
  }
  for (const AnalystTuple& t : analyst.tuples()) {
    std::printf("resent: id=%llu query=%s answer=%s\n", (unsigned long long)t.id,
                t.q.describe().c_str(), t.a.describe().c_str());
  }
  size_t before = analyst.size();
  enclave.reply_query(q);
  if (analyst.size() == before) {
    std::fprintf(stderr, "abort at query: %s\n", abort_reason_name(enclave.abort_reason()));
    d.persist_scm();
    return kExitAbort;
  }
  AnalystTuple t = *analyst.last();
  std::printf("id=%llu query=%s answer=%s remaining_budget=%.17g\n", (unsigned long long)t.id,
              t.q.describe().c_str(), t.a.describe().c_str(), enclave.remaining_budget());
  d.persist_scm();
  return kExitOk;
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  return out;
}

void emit(const std::string& csv, const std::string& out_path) {
  if (out_path.empty()) {
    std::fputs(csv.c_str(), stdout);
  } else {
    write_file(out_path, csv);
    std::printf("wrote %s\n", out_path.c_str());
  }
}

int cmd_attack_rollback(const std::string& target, const std::string& nr_list,
                        const std::string& eps_list, double budget, size_t queries,
                        int trials, uint64_t seed, int nodes, const std::string& out_path) {
  std::string csv = metrics_csv_header();
  for (double eps : parse_list(eps_list)) {
    for (double nr : parse_list(nr_list)) {
      Scenario sc;
      sc.target = target_from_name(target);
      sc.attack = AttackKind::kRollback;
      sc.budget = budget;
      sc.epsilon = eps;
      sc.n_r = static_cast<int>(nr);
      sc.scm_nodes = nodes;
      sc.query_count = queries;
      double rmse_total = 0.0;
      AttackMetrics last;
      for (int t = 0; t < trials; ++t) {
        sc.seed = mix_seed(seed, static_cast<uint64_t>(t) * 1000 + static_cast<uint64_t>(nr) +
                                     static_cast<uint64_t>(eps * 16));
        seed_process_randomness(sc.seed);
        last = rollback_attack(sc);
        rmse_total += last.rmse;
      }
      last.rmse = rmse_total / trials;
      csv += metrics_csv_row("rollback-" + std::string(target_name(sc.target)), sc.n_r, eps,
                             last);
    }
  }
  emit(csv, out_path);
  return kExitOk;
}

int cmd_attack_fork(const std::string& target, int k, double budget, double eps,
                    size_t queries, uint64_t seed, int nodes, const std::string& out_path) {
  Scenario sc;
  sc.target = target_from_name(target);
  sc.attack = AttackKind::kFork;
  sc.fork_k = k;
  sc.budget = budget;
  sc.epsilon = eps;
  sc.seed = seed;
  sc.scm_nodes = nodes;
  sc.query_count = queries;
  seed_process_randomness(sc.seed);
  AttackMetrics m = fork_attack(sc);
  std::string csv = metrics_csv_header();
  csv += metrics_csv_row("fork" + std::to_string(k) + "-" + target_name(sc.target), 1, eps, m);
  emit(csv, out_path);
  return kExitOk;
}

int cmd_attack_replay(uint64_t seed) {
  Scenario sc;
  sc.seed = seed;
  seed_process_randomness(seed);
  ReplayOutcome out = replay_scm_reply(sc);
  std::printf("stale-reply:    abort %s\n", abort_reason_name(out.stale_reply));
  std::printf("resigned-reply: abort %s\n", abort_reason_name(out.resigned_reply));
  std::printf("fresh-control:  %s\n", phase_name(out.control));
  bool ok = out.stale_reply == AbortReason::kFreshnessFailure &&
            out.resigned_reply == AbortReason::kInvalidScmSignature &&
            out.control == Phase::kReady;
  return ok ? kExitOk : kExitMatrixFailure;
}

int cmd_attack_matrix(double budget, double eps, size_t queries, uint64_t seed, int nodes) {
  Scenario sc;
  sc.budget = budget;
  sc.epsilon = eps;
  sc.seed = seed;
  sc.scm_nodes = nodes;
  sc.queries = mixed_battery(queries, eps);
  CrashMatrixReport report = crash_matrix(sc);
  std::fputs(report.to_string().c_str(), stdout);
  size_t passes = 0;
  for (const auto& cell : report.cells) {
    if (cell.pass()) ++passes;
  }
  std::printf("%zu/%zu cells pass\n", passes, report.cells.size());
  return report.all_pass() ? kExitOk : kExitMatrixFailure;
}

int cmd_attack_scenario(const std::string& path, const std::string& out_path) {
  Scenario sc = scenario_from_json(slurp(path));
  RunResult r = run_scenario(sc);
  if (!r.report.empty()) std::fputs(r.report.c_str(), stdout);
  std::string csv = metrics_csv_header();
  csv += metrics_csv_row(std::string(attack_name(sc.attack)) + "-" + target_name(sc.target),
                         sc.n_r, sc.epsilon, r.metrics);
  emit(csv, out_path);
  return kExitOk;
}

int cmd_bench(size_t rows, size_t queries, uint64_t seed) {
  BenchResult r = relative_cost_bench(rows, queries, seed);
  std::fputs(r.csv().c_str(), stdout);
  std::printf("overhead shrinks from avg to cor: %s\n",
              r.ratio_cor < r.ratio_avg ? "yes" : "NO");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Crash-safe, rollback-resistant DP query server and attack simulator"};
  app.require_subcommand(1);

  const char* env_root = std::getenv("ELEPHANTDP_DEPLOYMENT");
  std::string default_dir = env_root ? env_root : "";

  // setup
  auto* setup = app.add_subcommand("setup", "create a deployment directory");
  std::string data_path, out_dir = default_dir;
  std::vector<std::string> bounds_specs;
  double budget = 10.0, epsilon = 1.0;
  int nodes = 3;
  uint64_t seed = 1;
  setup->add_option("--data", data_path, "CSV dataset with a header row")->required();
  setup->add_option("--bounds", bounds_specs, "per-column bounds, col=lo:hi")->required();
  setup->add_option("--budget", budget, "total privacy budget");
  setup->add_option("--epsilon", epsilon, "default per-query epsilon");
  setup->add_option("--nodes", nodes, "SCM replica count (odd)");
  setup->add_option("--seed", seed, "deployment seed");
  setup->add_option("--out", out_dir, "deployment directory")->required(default_dir.empty());

  // query
  auto* query = app.add_subcommand("query", "run one protocol round");
  std::string q_dir = default_dir, q_type, q_col, q_col2;
  double q_value = 0.0, q_eps = 0.0;
  bool q_zero_noise = false;
  query->add_option("--deployment", q_dir, "deployment directory")->required(default_dir.empty());
  query->add_option("--type", q_type, "count|avg|var|cor")->required();
  query->add_option("--column", q_col, "column name")->required();
  query->add_option("--column2", q_col2, "second column (cor)");
  query->add_option("--value", q_value, "predicate value (count)");
  query->add_option("--epsilon", q_eps, "query epsilon (default from config)");
  query->add_flag("--zero-noise", q_zero_noise, "test mode: no noise");

  // attack
  auto* attack = app.add_subcommand("attack", "drive an attack scenario");
  attack->require_subcommand(1);
  std::string a_target = "insecure", a_nr = "1,2,5,10", a_eps = "0.5,1", a_out, a_scenario;
  double a_budget = 10.0, a_eps_one = 1.0;
  size_t a_queries = 10;
  int a_trials = 20, a_k = 2, a_nodes = 1;
  uint64_t a_seed = 1;

  auto* rollback = attack->add_subcommand("rollback", "budget rollback attack");
  rollback->add_option("--target", a_target, "elephantdp|instantiation1|instantiation2|insecure");
  rollback->add_option("--nr", a_nr, "comma list of N_R values");
  rollback->add_option("--eps", a_eps, "comma list of epsilons");
  rollback->add_option("--budget", a_budget, "total budget");
  rollback->add_option("--queries", a_queries, "attack battery size");
  rollback->add_option("--trials", a_trials, "trials averaged into rmse");
  rollback->add_option("--seed", a_seed, "schedule seed");
  rollback->add_option("--nodes", a_nodes, "SCM replica count");
  rollback->add_option("--out", a_out, "CSV output path");

  auto* fork = attack->add_subcommand("fork", "parallel-enclave fork attack");
  fork->add_option("--target", a_target, "elephantdp|instantiation2");
  fork->add_option("--k", a_k, "fork instance count");
  fork->add_option("--budget", a_budget, "total budget");
  fork->add_option("--eps", a_eps_one, "per-query epsilon");
  fork->add_option("--queries", a_queries, "attack battery size");
  fork->add_option("--seed", a_seed, "schedule seed");
  fork->add_option("--nodes", a_nodes, "SCM replica count");
  fork->add_option("--out", a_out, "CSV output path");

  auto* replay = attack->add_subcommand("replay", "replay captured SCM replies");
  replay->add_option("--seed", a_seed, "schedule seed");

  auto* matrix = attack->add_subcommand("crash-matrix", "yield-point x query crash sweep");
  matrix->add_option("--budget", a_budget, "total budget");
  matrix->add_option("--eps", a_eps_one, "per-query epsilon");
  matrix->add_option("--queries", a_queries, "workload length");
  matrix->add_option("--seed", a_seed, "schedule seed");
  matrix->add_option("--nodes", a_nodes, "SCM replica count");

  auto* run = attack->add_subcommand("run", "run a scenario file");
  run->add_option("--scenario", a_scenario, "JSON scenario path")->required();
  run->add_option("--out", a_out, "CSV output path");

  // bench
  auto* bench = app.add_subcommand("bench", "relative-cost measurement over loopback TCP");
  size_t b_rows = 200000, b_queries = 200;
  uint64_t b_seed = 42;
  bench->add_option("--rows", b_rows, "synthetic dataset rows");
  bench->add_option("--queries", b_queries, "timed queries per kind");
  bench->add_option("--seed", b_seed, "dataset seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*setup) {
      return cmd_setup(data_path, bounds_specs, budget, epsilon, nodes, seed, out_dir);
    }
    if (*query) {
      return cmd_query(q_dir, q_type, q_col, q_col2, q_value, q_eps, q_zero_noise);
    }
    if (*attack) {
      if (*rollback) {
        return cmd_attack_rollback(a_target, a_nr, a_eps, a_budget, a_queries, a_trials,
                                   a_seed, a_nodes, a_out);
      }
      if (*fork) {
        return cmd_attack_fork(a_target, a_k, a_budget, a_eps_one, a_queries, a_seed, a_nodes,
                               a_out);
      }
      if (*replay) return cmd_attack_replay(a_seed);
      if (*matrix) return cmd_attack_matrix(a_budget, a_eps_one, a_queries, a_seed, a_nodes);
      if (*run) return cmd_attack_scenario(a_scenario, a_out);
    }
    if (*bench) return cmd_bench(b_rows, b_queries, b_seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const SchemaError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const UnboundedError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const SetupError& e) {
    std::fprintf(stderr, "abort: %s\n", e.what());
    return kExitAbort;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitOk;
}
