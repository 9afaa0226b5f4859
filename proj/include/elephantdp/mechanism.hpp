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
#include <cmath>
#include <vector>

#include "elephantdp/dataset.hpp"
#include "elephantdp/noise.hpp"
#include "elephantdp/query.hpp"
#include "elephantdp/rng.hpp"

namespace elephantdp {

namespace detail {

// Per-chunk partial sums; enough to recover count, mean, variance, covariance
// of the chunk union without keeping more than one chunk's rows resident.
struct Moments {
  double n = 0.0;
  double sum_a = 0.0;
  double sum_b = 0.0;
  double sum_aa = 0.0;
  double sum_bb = 0.0;
  double sum_ab = 0.0;
  double pred_count = 0.0;

  void absorb(const Moments& o) {
    n += o.n;
    sum_a += o.sum_a;
    sum_b += o.sum_b;
    sum_aa += o.sum_aa;
    sum_bb += o.sum_bb;
    sum_ab += o.sum_ab;
    pred_count += o.pred_count;
  }
};

inline Moments chunk_moments(const Dataset& d, const Query& q, size_t begin, size_t end) {
  Moments m;
  const std::vector<double>& a = d.column(q.column_a);
  const std::vector<double>* b = q.kind == QueryKind::kCor ? &d.column(q.column_b) : nullptr;
  for (size_t i = begin; i < end; ++i) {
    m.n += 1.0;
    m.sum_a += a[i];
    m.sum_aa += a[i] * a[i];
    if (b) {
      m.sum_b += (*b)[i];
      m.sum_bb += (*b)[i] * (*b)[i];
      m.sum_ab += a[i] * (*b)[i];
    }
    if (q.kind == QueryKind::kCount && a[i] == q.predicate_value) m.pred_count += 1.0;
  }
  return m;
}

inline Moments dataset_moments(const Dataset& d, const Query& q, size_t chunk_rows) {
  size_t rows = d.row_count();
  if (chunk_rows == 0) chunk_rows = rows == 0 ? 1 : rows;
  Moments total;
  for (size_t begin = 0; begin < rows; begin += chunk_rows) {
    total.absorb(chunk_moments(d, q, begin, std::min(begin + chunk_rows, rows)));
  }
  return total;
}

}  // namespace detail

// Noiseless inner computation of the mechanism. Count is an exact predicate
// count, Avg the sample mean, Var the (n-1)-denominator sample variance, Cor
// the Pearson coefficient (0 on a degenerate column). chunk_rows > 0 routes
// the evaluation through fixed-size chunks aggregated by partial sums; the
// result is the same up to floating-point association.
inline double evaluate_exact(const Dataset& dataset, const Query& query,
                             size_t chunk_rows = 0) {
  if (!dataset.has_column(query.column_a)) throw SchemaError("unknown column " + query.column_a);
  if (query.kind == QueryKind::kCor && !dataset.has_column(query.column_b)) {
    throw SchemaError("unknown column " + query.column_b);
  }
  detail::Moments m = detail::dataset_moments(dataset, query, chunk_rows);
  switch (query.kind) {
    case QueryKind::kCount:
      return m.pred_count;
    case QueryKind::kAvg:
      return m.n == 0.0 ? 0.0 : m.sum_a / m.n;
    case QueryKind::kVar: {
      if (m.n < 2.0) return 0.0;
      double mean = m.sum_a / m.n;
      return (m.sum_aa - m.n * mean * mean) / (m.n - 1.0);
    }
    case QueryKind::kCor: {
      if (m.n < 2.0) return 0.0;
      double ma = m.sum_a / m.n;
      double mb = m.sum_b / m.n;
      double va = m.sum_aa / m.n - ma * ma;
      double vb = m.sum_bb / m.n - mb * mb;
      if (va <= 0.0 || vb <= 0.0) return 0.0;
      double cov = m.sum_ab / m.n - ma * mb;
      return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
    }
  }
  throw SchemaError("unknown query kind");
}

// Worst-case change of the exact answer between neighboring datasets (one
// record replaced), from the declared bounds only. Count: membership of one
// record flips, 1. Avg with range R over n rows: R/n. Var: R^2/n (tight at
// the all-equal extreme). Cor is bounded by its codomain diameter 2; its
// mechanism routes through noised sub-aggregates rather than one calibrated
// draw, so this value only serves the neighbor-change contract.
inline double sensitivity(const Query& query, const BoundsMap& bounds, size_t row_count) {
  auto range_of = [&](const std::string& col) {
    auto it = bounds.find(col);
    if (it == bounds.end()) throw UnboundedError("no bounds declared for column " + col);
    if (!std::isfinite(it->second.lo) || !std::isfinite(it->second.hi)) {
      throw UnboundedError("bounds for column " + col + " are not finite");
    }
    return it->second.range();
  };
  double n = static_cast<double>(std::max<size_t>(row_count, 1));
  switch (query.kind) {
    case QueryKind::kCount:
      range_of(query.column_a);
      return 1.0;
    case QueryKind::kAvg:
      return range_of(query.column_a) / n;
    case QueryKind::kVar: {
      double r = range_of(query.column_a);
      return r * r / n;
    }
    case QueryKind::kCor:
      range_of(query.column_a);
      range_of(query.column_b);
      return 2.0;
  }
  throw SchemaError("unknown query kind");
}

struct MechanismResult {
  Answer answer;
  double epsilon = 0.0;
};

struct MechanismOptions {
  bool zero_noise = false;  // test mode; never on in a deployed server path
  size_t chunk_rows = 0;
};

namespace detail {

// Range of x*y over the bounds box; extremes of a bilinear form sit at
// corners.
inline double product_range(const ColumnBounds& a, const ColumnBounds& b) {
  double c1 = a.lo * b.lo, c2 = a.lo * b.hi, c3 = a.hi * b.lo, c4 = a.hi * b.hi;
  return std::max({c1, c2, c3, c4}) - std::min({c1, c2, c3, c4});
}

// Range of x^2 over the bounds interval.
inline double square_range(const ColumnBounds& a) {
  double hi = std::max(a.lo * a.lo, a.hi * a.hi);
  double lo = (a.lo <= 0.0 && a.hi >= 0.0) ? 0.0 : std::min(a.lo * a.lo, a.hi * a.hi);
  return hi - lo;
}

inline double noised(double exact, double eps_share, double sens, bool zero_noise,
                     DetRng& rng) {
  if (zero_noise) return exact;
  double sigma = calibrate_sigma(eps_share, kGlobalDelta, sens);
  return exact + sample_continuous_gaussian(sigma, rng);
}

// Correlation is released through five noised sub-aggregates: the two means
// (eps/6 each), the two raw second moments (eps/6 each) and the cross moment
// (eps/3), i.e. a third of the query budget per aggregate group under basic
// composition. Each aggregate is calibrated against its own range-based
// sensitivity; the coefficient is then reassembled and clamped to [-1, 1].
inline double noised_correlation(const Dataset& d, const Query& q,
                                 const MechanismOptions& opt, DetRng& rng) {
  Moments m = dataset_moments(d, q, opt.chunk_rows);
  double n = std::max(m.n, 1.0);
  const ColumnBounds& ba = d.bounds(q.column_a);
  const ColumnBounds& bb = d.bounds(q.column_b);
  double eps6 = q.epsilon / 6.0;
  double eps3 = q.epsilon / 3.0;

  double mean_a = noised(m.sum_a / n, eps6, ba.range() / n, opt.zero_noise, rng);
  double mean_b = noised(m.sum_b / n, eps6, bb.range() / n, opt.zero_noise, rng);
  double raw_aa = noised(m.sum_aa / n, eps6, square_range(ba) / n, opt.zero_noise, rng);
  double raw_bb = noised(m.sum_bb / n, eps6, square_range(bb) / n, opt.zero_noise, rng);
  double raw_ab = noised(m.sum_ab / n, eps3, product_range(ba, bb) / n, opt.zero_noise, rng);

  double va = raw_aa - mean_a * mean_a;
  double vb = raw_bb - mean_b * mean_b;
  if (va <= 0.0 || vb <= 0.0) return 0.0;
  double cov = raw_ab - mean_a * mean_b;
  return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

}  // namespace detail

// The DP mechanism M(D, q) -> (a, epsilon). The returned epsilon is the
// query's declared cost, computed without touching dataset values; the
// budget branch belongs to the caller. Counts get integer discrete-Gaussian
// noise, Avg/Var a calibrated continuous Gaussian, Cor the sub-aggregate
// composition above.
inline MechanismResult run_mechanism(const Dataset& dataset, const Query& query, DetRng& rng,
                                     const MechanismOptions& opt = {}) {
  if (query.kind == QueryKind::kCor) {
    if (!dataset.has_column(query.column_a)) throw SchemaError("unknown column " + query.column_a);
    if (!dataset.has_column(query.column_b)) throw SchemaError("unknown column " + query.column_b);
    return {Answer::of(detail::noised_correlation(dataset, query, opt, rng)), query.epsilon};
  }
  double exact = evaluate_exact(dataset, query, opt.chunk_rows);
  if (opt.zero_noise) return {Answer::of(exact), query.epsilon};
  double sens = sensitivity(query, dataset.bounds(), dataset.row_count());
  NoiseSpec spec{calibrate_sigma(query.epsilon, kGlobalDelta, sens),
                 query.kind == QueryKind::kCount};
  return {Answer::of(exact + sample_gaussian(spec, rng)), query.epsilon};
}

// Calibrated scale of the single-draw path; what the transcript checker uses
// to bound the plausible support of an answer.
inline double mechanism_sigma(const Dataset& dataset, const Query& query) {
  if (query.kind == QueryKind::kCor) return 0.0;  // clamped codomain, no single sigma
  double sens = sensitivity(query, dataset.bounds(), dataset.row_count());
  return calibrate_sigma(query.epsilon, kGlobalDelta, sens);
}

}  // namespace elephantdp
