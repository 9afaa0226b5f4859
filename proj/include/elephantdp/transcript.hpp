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

#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "elephantdp/analyst.hpp"
#include "elephantdp/mechanism.hpp"
#include "elephantdp/trace.hpp"

namespace elephantdp {

struct MalformedTrace : std::runtime_error {
  explicit MalformedTrace(const std::string& what) : std::runtime_error(what) {}
};

// One processed query: the query, its answer (bottom iff no budget was
// consumed) and the budget remaining afterwards.
struct TranscriptEntry {
  Query q;
  Answer a;
  double budget = 0.0;
};

using Transcript = std::vector<TranscriptEntry>;

// The trusted-curator reference: processes queries in sequence order, always
// evaluates the mechanism, deducts the budget when it suffices and releases
// bottom otherwise.
inline Transcript ideal_dp(const Dataset& dataset, double total_budget,
                           const std::vector<Query>& queries,
                           const std::function<DetRng(uint64_t)>& rng_for_index,
                           const MechanismOptions& opt = {}) {
  Transcript t;
  double budget = total_budget;
  uint64_t i = 1;
  for (const Query& q : queries) {
    DetRng rng = rng_for_index(i);
    auto [answer, eps] = run_mechanism(dataset, q, rng, opt);
    if (budget - eps >= -1e-12) {
      budget -= eps;
    } else {
      answer = Answer::bottom();  // query exceeds the budget
    }
    t.push_back({q, answer, budget});
    ++i;
  }
  return t;
}

// Index-seeded randomness: entry i of the ideal run draws from
// mix(master, i), the same schedule a pinned-seed enclave uses for id i.
inline std::function<DetRng(uint64_t)> per_index_rngs(uint64_t master_seed) {
  return [master_seed](uint64_t i) { return DetRng(mix_seed(master_seed, i)); };
}

// Builds the system transcript from the analyst-visible tuples plus the
// defender-side budget recorded per id. Duplicate tuples must be byte-equal
// copies (resends); ids must cover 1..n without gaps. Violations are
// security failures, reported as MalformedTrace.
inline Transcript build_transcript(const std::vector<Bytes>& analyst_log,
                                   const std::map<uint64_t, double>& budget_by_id) {
  std::map<uint64_t, Bytes> by_id;
  for (const Bytes& wire : analyst_log) {
    AnalystTuple t = decode_analyst_tuple(wire);
    auto [it, fresh] = by_id.emplace(t.id, wire);
    if (!fresh && it->second != wire) {
      throw MalformedTrace("tuples with id " + std::to_string(t.id) + " differ");
    }
  }
  Transcript out;
  uint64_t expect = 1;
  for (const auto& [id, wire] : by_id) {
    if (id != expect) {
      throw MalformedTrace("ids not sequential: expected " + std::to_string(expect) +
                           ", found " + std::to_string(id));
    }
    ++expect;
    AnalystTuple t = decode_analyst_tuple(wire);
    auto b = budget_by_id.find(id);
    if (b == budget_by_id.end()) {
      throw MalformedTrace("no recorded budget for id " + std::to_string(id));
    }
    out.push_back({t.q, t.a, b->second});
  }
  return out;
}

// Convenience: both the tuples and the budgets straight from an event trace.
inline Transcript transcript_from_trace(const EventTrace& trace) {
  std::vector<Bytes> log;
  std::map<uint64_t, double> budgets;
  for (const Event& e : trace.snapshot()) {
    if (e.kind != Event::Kind::kAnalystSend) continue;
    log.push_back(e.payload);
    budgets.emplace(e.id, e.budget);
  }
  return build_transcript(log, budgets);
}

// Order pi on the answered queries, taken constructively from the id order.
inline std::vector<Query> transcript_queries(const Transcript& t) {
  std::vector<Query> out;
  out.reserve(t.size());
  for (const TranscriptEntry& e : t) out.push_back(e.q);
  return out;
}

enum class EquivalenceMode {
  kStructural,  // same queries, budgets, bottom pattern; answers plausible
  kSeedExact,   // additionally byte-equal answers (shared seed schedule)
};

// Largest |answer - exact| the checker accepts as "from M(D, q)". Ten
// calibrated sigmas for the single-draw kinds; the correlation coefficient is
// clamped to [-1, 1] so its full codomain diameter is the honest bound.
inline double plausible_radius(const Dataset& dataset, const Query& q) {
  if (q.kind == QueryKind::kCor) return 2.0;
  return 10.0 * mechanism_sigma(dataset, q);
}

inline bool equivalent(const Transcript& t1, const Transcript& t2, const Dataset& dataset,
                       EquivalenceMode mode) {
  if (t1.size() != t2.size()) return false;
  for (size_t i = 0; i < t1.size(); ++i) {
    const TranscriptEntry& a = t1[i];
    const TranscriptEntry& b = t2[i];
    if (!(a.q == b.q)) return false;
    if (std::abs(a.budget - b.budget) > 1e-9) return false;
    if (a.a.is_bottom != b.a.is_bottom) return false;
    if (a.a.is_bottom) continue;
    if (mode == EquivalenceMode::kSeedExact) {
      if (a.a.encode() != b.a.encode()) return false;
    } else {
      double exact = evaluate_exact(dataset, a.q);
      double radius = plausible_radius(dataset, a.q) + 1e-9;
      if (std::abs(a.a.value - exact) > radius) return false;
      if (std::abs(b.a.value - exact) > radius) return false;
    }
  }
  return true;
}

// Line format: id, the query fields, the answer or bottom, the budget.
inline std::string serialize_transcript(const Transcript& t) {
  std::ostringstream out;
  for (size_t i = 0; i < t.size(); ++i) {
    const TranscriptEntry& e = t[i];
    char line[320];
    std::snprintf(line, sizeof(line), "%zu\t%s\t%s\t%s\t%.17g\t%.17g\t%s\t%.17g\n", i + 1,
                  kind_name(e.q.kind), e.q.column_a.empty() ? "-" : e.q.column_a.c_str(),
                  e.q.column_b.empty() ? "-" : e.q.column_b.c_str(), e.q.predicate_value,
                  e.q.epsilon, e.a.is_bottom ? "bottom" : e.a.describe().c_str(), e.budget);
    out << line;
  }
  return out.str();
}

inline Transcript parse_transcript(const std::string& text) {
  Transcript t;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string idx, kind, col_a, col_b, pred, eps, answer, budget;
    if (!std::getline(ls, idx, '\t') || !std::getline(ls, kind, '\t') ||
        !std::getline(ls, col_a, '\t') || !std::getline(ls, col_b, '\t') ||
        !std::getline(ls, pred, '\t') || !std::getline(ls, eps, '\t') ||
        !std::getline(ls, answer, '\t') || !std::getline(ls, budget, '\t')) {
      throw MalformedTrace("bad transcript line: " + line);
    }
    TranscriptEntry e;
    if (kind == "count") e.q.kind = QueryKind::kCount;
    else if (kind == "avg") e.q.kind = QueryKind::kAvg;
    else if (kind == "var") e.q.kind = QueryKind::kVar;
    else if (kind == "cor") e.q.kind = QueryKind::kCor;
    else throw MalformedTrace("bad query kind: " + kind);
    e.q.column_a = col_a == "-" ? "" : col_a;
    e.q.column_b = col_b == "-" ? "" : col_b;
    e.q.predicate_value = std::stod(pred);
    e.q.epsilon = std::stod(eps);
    e.a = answer == "bottom" ? Answer::bottom() : Answer::of(std::stod(answer));
    e.budget = std::stod(budget);
    t.push_back(std::move(e));
  }
  return t;
}

}  // namespace elephantdp
