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
#include <chrono>
#include <string>

#include "elephantdp/harness.hpp"

namespace elephantdp {

// Relative per-query cost of the full protocol over the bare mechanism,
// measured with the SCM behind a loopback TCP transport. The protocol's
// extra work (sealing, hashing, signing, the SCM round trip) is constant per
// query, so the relative overhead shrinks as the query itself gets more
// expensive; no absolute times are asserted anywhere.
struct BenchResult {
  size_t rows = 0;
  size_t queries = 0;
  double naive_avg_ms = 0.0, elephant_avg_ms = 0.0, ratio_avg = 0.0;
  double naive_var_ms = 0.0, elephant_var_ms = 0.0, ratio_var = 0.0;
  double naive_cor_ms = 0.0, elephant_cor_ms = 0.0, ratio_cor = 0.0;

  std::string csv() const {
    char buf[400];
    std::snprintf(buf, sizeof(buf),
                  "query,naive_ms,elephant_ms,overhead\n"
                  "avg,%.5f,%.5f,%.3f\n"
                  "var,%.5f,%.5f,%.3f\n"
                  "cor,%.5f,%.5f,%.3f\n",
                  naive_avg_ms, elephant_avg_ms, ratio_avg, naive_var_ms, elephant_var_ms,
                  ratio_var, naive_cor_ms, elephant_cor_ms, ratio_cor);
    return buf;
  }
};

namespace detail {

// Median of three batch timings; keeps a stray scheduling hiccup in one
// batch from distorting the per-query figure.
template <typename F>
inline double time_per_call_ms(size_t calls, F&& fn) {
  double samples[3];
  for (double& s : samples) {
    auto start = std::chrono::steady_clock::now();
    for (size_t i = 0; i < calls; ++i) fn();
    auto stop = std::chrono::steady_clock::now();
    s = std::chrono::duration<double, std::milli>(stop - start).count() /
        static_cast<double>(calls);
  }
  std::sort(std::begin(samples), std::end(samples));
  return samples[1];
}

}  // namespace detail

inline BenchResult relative_cost_bench(size_t rows = 200000, size_t queries = 200,
                                       uint64_t seed = 42) {
  BenchResult res;
  res.rows = rows;
  res.queries = queries;
  Dataset ds = synthetic_bench_dataset(seed, rows);
  double budget = static_cast<double>(queries) * 6.0 + 16.0;

  const Query kinds[3] = {Query::avg("x", 1.0), Query::var("x", 1.0),
                          Query::cor("x", "y", 1.0)};
  double naive_ms[3];
  double elephant_ms[3];

  for (int k = 0; k < 3; ++k) {
    AnalystLog analyst;
    NaiveDpServer naive(ds, budget, &analyst, NoisePolicy::per_instance(seed));
    for (size_t i = 0; i < 8; ++i) naive.reply_query(kinds[k]);  // warmup
    naive_ms[k] = detail::time_per_call_ms(queries, [&] { naive.reply_query(kinds[k]); });
  }

  for (int k = 0; k < 3; ++k) {
    VersionedStore storage;
    KeyService keyservice;
    AnalystLog analyst;
    SingleNodeScm scm_backend(ScmKeys::generate());
    ScmTcpServer server(scm_backend);
    ScmTcpClient scm(server.port(), scm_backend.verify_key());
    Bytes measurement = bytes_of("dp-query-enclave-v1");
    SetupOptions opt;
    opt.measurement = measurement;
    setup_deployment(ds, budget, scm, storage, keyservice, nullptr, opt);
    Enclave enclave(EnclaveEnv{&scm, &storage, &keyservice, &analyst, nullptr}, measurement,
                    NoisePolicy::per_instance(seed), 0);
    if (enclave.init() != Phase::kReady) throw std::runtime_error("bench enclave init failed");
    for (size_t i = 0; i < 8; ++i) enclave.reply_query(kinds[k]);  // warmup
    elephant_ms[k] =
        detail::time_per_call_ms(queries, [&] { enclave.reply_query(kinds[k]); });
    server.stop();
  }

  res.naive_avg_ms = naive_ms[0];
  res.naive_var_ms = naive_ms[1];
  res.naive_cor_ms = naive_ms[2];
  res.elephant_avg_ms = elephant_ms[0];
  res.elephant_var_ms = elephant_ms[1];
  res.elephant_cor_ms = elephant_ms[2];
  res.ratio_avg = elephant_ms[0] / naive_ms[0];
  res.ratio_var = elephant_ms[1] / naive_ms[1];
  res.ratio_cor = elephant_ms[2] / naive_ms[2];
  return res;
}

}  // namespace elephantdp
