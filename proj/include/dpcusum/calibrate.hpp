// Copyright 2026 The dpcusum Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "dpcusum/errors.hpp"
#include "dpcusum/model.hpp"

namespace dpcusum {

/// Effective privacy factor min(epsilon / (2 sens), 1).
inline double h_factor(double epsilon, double sens) {
  if (!(epsilon > 0.0) || !(sens > 0.0)) throw input_error("h_factor: inputs must be > 0");
  return std::min(epsilon / (2.0 * sens), 1.0);
}

/// log of exp(h b - 2) / (4 (b+1)^2).
inline double log_arl_lower_bound_h(double b, double h) noexcept {
  return h * b - 2.0 - std::log(4.0) - 2.0 * std::log1p(b);
}

/// Lower bound on the false-alarm ARL of the private detector at threshold b,
/// parameterized directly by h.
inline double arl_lower_bound_h(double b, double h) {
  if (!(b > 0.0)) throw input_error("arl_lower_bound: b must be > 0");
  if (!(h > 0.0 && h <= 1.0)) throw input_error("arl_lower_bound: h must lie in (0,1]");
  return std::exp(log_arl_lower_bound_h(b, h));
}

inline double arl_lower_bound(double b, double epsilon, double sens) {
  return arl_lower_bound_h(b, h_factor(epsilon, sens));
}

struct CalibrationResult {
  double b = 0.0;
  double gamma_target = 0.0;
  double h_value = 0.0;
  double bound_at_b = 0.0;
};

/// Threshold b on the increasing branch (b > 2/h - 1) at which the ARL lower
/// bound equals gamma. Bisection runs on the log of the bound.
inline CalibrationResult solve_threshold_h(double gamma, double h) {
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw input_error("solve_threshold: gamma must be >= 1");
  if (!(h > 0.0 && h <= 1.0)) throw input_error("solve_threshold: h must lie in (0,1]");

  const double target = std::log(gamma);
  const auto f = [&](double b) { return log_arl_lower_bound_h(b, h) - target; };

  // The bound decreases until b = 2/h - 1 and increases afterwards; for
  // h <= 1 the turning point is >= 1 > 0.
  double lo = std::max(2.0 / h - 1.0, 0.0) + 1e-6;
  double hi = (std::log(4.0 * gamma) + 2.0) / h + 2.0;
  while (f(hi) < 0.0) hi *= 2.0;
  if (f(lo) >= 0.0) lo = std::max(2.0 / h - 1.0, 0.0);

  for (int i = 0; i < 200 && hi - lo > 1e-13 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // hi is the side where bound >= gamma.
  return CalibrationResult{hi, gamma, h, arl_lower_bound_h(hi, h)};
}

inline CalibrationResult solve_threshold(double gamma, double epsilon, double sens) {
  return solve_threshold_h(gamma, h_factor(epsilon, sens));
}

struct WaddBoundTerms {
  double leading = 0.0;  // b / I0
  double second = 0.0;   // 4 sens / (I0^{3/2} eps) * sqrt(b)
};

/// The two explicit terms of the detection-delay upper bound. The additive
/// constant is unknown, so no total is offered.
inline WaddBoundTerms wadd_bound_terms(double b, double epsilon, double sens, double i0) {
  if (!(i0 > 0.0) || !(epsilon > 0.0) || !(sens > 0.0)) throw input_error("wadd_bound_terms: inputs must be > 0");
  if (!(b > 8.0 * i0)) throw out_of_domain_error("wadd_bound_terms: requires b > 8 I0");
  return {b / i0, 4.0 * sens / (std::pow(i0, 1.5) * epsilon) * std::sqrt(b)};
}

struct HeatmapCell {
  double mu = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;
  double a_delta = 0.0;
  double h = 0.0;
  /// First epsilon grid point at or above 2 A_delta in this delta column,
  /// i.e. the cell the boundary curve passes through.
  bool on_boundary = false;
};

struct Heatmap {
  std::vector<HeatmapCell> cells;
  /// Boundary curve epsilon = 2 A_delta, one point per delta.
  std::vector<std::pair<double, double>> boundary;  // (delta, epsilon)
};

/// Gaussian-shift h(epsilon, A_delta) grid, row-major over (epsilon, delta).
inline Heatmap heatmap_grid(double mu, std::span<const double> epsilons, std::span<const double> deltas) {
  if (epsilons.empty() || deltas.empty()) throw input_error("heatmap_grid: grids must be nonempty");
  const auto model = ModelPair::gaussian_shift(mu);
  Heatmap out;
  out.cells.reserve(epsilons.size() * deltas.size());
  std::vector<double> a_values;
  a_values.reserve(deltas.size());
  for (double d : deltas) {
    a_values.push_back(a_delta(model, d));
    out.boundary.emplace_back(d, 2.0 * a_values.back());
  }
  std::vector<double> crossing(deltas.size(), std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < deltas.size(); ++j) {
    for (double eps : epsilons) {
      if (eps >= 2.0 * a_values[j]) crossing[j] = std::min(crossing[j], eps);
    }
  }
  for (double eps : epsilons) {
    for (std::size_t j = 0; j < deltas.size(); ++j) {
      const double a = a_values[j];
      out.cells.push_back({mu, eps, deltas[j], a, h_factor(eps, a), eps == crossing[j]});
    }
  }
  return out;
}

/// Evenly spaced interior points of (lo, hi): lo + (hi-lo) * (i+1)/(n+1).
inline std::vector<double> open_grid(double lo, double hi, std::size_t n) {
  std::vector<double> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(n + 1));
  }
  return out;
}

}  // namespace dpcusum
