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
#include <stdexcept>
#include <string>

#include "elephantdp/rng.hpp"

namespace elephantdp {

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct NoiseSpec {
  double sigma = 1.0;
  bool discrete = false;  // integer-valued discrete Gaussian, for counts
};

namespace detail {

// Standard normal CDF.
inline double std_normal_cdf(double x) { return std::erfc(-x / std::sqrt(2.0)) / 2.0; }

// Privacy loss of the Gaussian mechanism at unit sensitivity: the tightest
// delta for which N(0, sigma^2) noise gives (epsilon, delta)-DP. Monotone
// decreasing in sigma.
inline double gaussian_delta(double sigma, double epsilon) {
  double a = 1.0 / (2.0 * sigma);
  double b = epsilon * sigma;
  return std_normal_cdf(a - b) - std::exp(epsilon) * std_normal_cdf(-a - b);
}

}  // namespace detail

// Smallest sigma for which Gaussian noise of that scale gives
// (epsilon, delta)-DP at the given sensitivity, via the exact Gaussian-CDF
// characterization rather than the loose classical sqrt(2 ln(1.25/delta))
// bound. Solved at unit sensitivity by exponential bracketing plus bisection,
// then scaled, so sigma is exactly linear in the sensitivity.
inline double calibrate_sigma(double epsilon, double delta, double sensitivity) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be > 0");
  if (!(delta > 0.0) || !(delta < 1.0)) throw DomainError("delta must lie in (0, 1)");
  if (!(sensitivity > 0.0) || !std::isfinite(sensitivity)) {
    throw DomainError("sensitivity must be > 0");
  }
  double lo = 1e-12;
  double hi = 1.0;
  while (detail::gaussian_delta(hi, epsilon) > delta) hi *= 2.0;
  // ~200 halvings push the bracket far below the 1e-10 relative target.
  for (int i = 0; i < 200 && (hi - lo) > 1e-12 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    if (detail::gaussian_delta(mid, epsilon) > delta) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return sensitivity * hi;  // upper end of the bracket: on the safe side
}

// Mean-zero Gaussian of the given scale, sampled with Box-Muller so the
// result is a deterministic function of the PRNG stream.
inline double sample_continuous_gaussian(double sigma, DetRng& rng) {
  double u1 = rng.uniform_pos();
  double u2 = rng.uniform();
  return sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

namespace detail {

// Geometric number of failures: P(G >= k) = exp(-k/t).
inline int64_t sample_geometric(double t, DetRng& rng) {
  return static_cast<int64_t>(std::floor(-t * std::log(rng.uniform_pos())));
}

}  // namespace detail

// Integer-valued discrete Gaussian of parameter sigma: a two-sided geometric
// (discrete Laplace) proposal of scale t = floor(sigma) + 1, thinned by
// rejection with acceptance probability exp(-(|y| - sigma^2/t)^2 / (2 sigma^2)).
inline int64_t sample_discrete_gaussian(double sigma, DetRng& rng) {
  if (!(sigma > 0.0)) throw DomainError("sigma must be > 0");
  double t = std::floor(sigma) + 1.0;
  for (;;) {
    int64_t y = detail::sample_geometric(t, rng) - detail::sample_geometric(t, rng);
    double gap = std::abs(static_cast<double>(y)) - sigma * sigma / t;
    double accept = std::exp(-gap * gap / (2.0 * sigma * sigma));
    if (rng.uniform() < accept) return y;
  }
}

inline double sample_gaussian(const NoiseSpec& spec, DetRng& rng) {
  if (!(spec.sigma > 0.0)) throw DomainError("sigma must be > 0");
  if (spec.discrete) return static_cast<double>(sample_discrete_gaussian(spec.sigma, rng));
  return sample_continuous_gaussian(spec.sigma, rng);
}

}  // namespace elephantdp
