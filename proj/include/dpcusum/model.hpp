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
#include <optional>
#include <string>
#include <string_view>

#include "dpcusum/errors.hpp"
#include "dpcusum/noise.hpp"
#include "dpcusum/rng.hpp"
#include "dpcusum/special.hpp"

namespace dpcusum {

enum class ModelKind { kLaplaceShift, kGaussianShift, kBernoulliShift };

enum class Regime { kPre, kPost };

inline std::string_view to_string(ModelKind kind) noexcept {
  switch (kind) {
    case ModelKind::kLaplaceShift:
      return "laplace_shift";
    case ModelKind::kGaussianShift:
      return "gaussian_shift";
    case ModelKind::kBernoulliShift:
      return "bernoulli_shift";
  }
  return "unknown";
}

inline ModelKind model_kind_from_string(std::string_view name) {
  if (name == "laplace_shift") return ModelKind::kLaplaceShift;
  if (name == "gaussian_shift") return ModelKind::kGaussianShift;
  if (name == "bernoulli_shift") return ModelKind::kBernoulliShift;
  throw input_error("unknown model kind '" + std::string(name) + "'");
}

struct SensitivityInfo {
  bool bounded = false;
  double delta = 0.0;  // meaningful only when bounded
};

/// A known pre/post-change pair f0 -> f1.
///
/// LaplaceShift:   Laplace(0,1) -> Laplace(mu,1)
/// GaussianShift:  N(0,1) -> N(mu,1)
/// BernoulliShift: Bernoulli(p0) -> Bernoulli(p1), observations in {0,1}
///
/// Immutable; safe to share between threads.
class ModelPair {
 public:
  static ModelPair laplace_shift(double mu, double scale = 1.0) {
    return ModelPair(ModelKind::kLaplaceShift, mu, 0.0, 0.0, scale);
  }
  static ModelPair gaussian_shift(double mu, double scale = 1.0) {
    return ModelPair(ModelKind::kGaussianShift, mu, 0.0, 0.0, scale);
  }
  static ModelPair bernoulli_shift(double p0, double p1) {
    return ModelPair(ModelKind::kBernoulliShift, 0.0, p0, p1, 1.0);
  }

  ModelKind kind() const noexcept { return kind_; }
  double mu() const noexcept { return mu_; }
  double p0() const noexcept { return p0_; }
  double p1() const noexcept { return p1_; }
  double scale() const noexcept { return scale_; }

  friend bool operator==(const ModelPair&, const ModelPair&) = default;

 private:
  ModelPair(ModelKind kind, double mu, double p0, double p1, double scale)
      : kind_(kind), mu_(mu), p0_(p0), p1_(p1), scale_(scale) {
    // Only unit scale is supported; the field is kept so configs stay stable
    // if other scales are added.
    if (scale != 1.0) throw input_error("model scale must be 1");
    if (kind == ModelKind::kBernoulliShift) {
      const auto inside = [](double p) { return std::isfinite(p) && p > 0.0 && p < 1.0; };
      if (!inside(p0) || !inside(p1)) throw input_error("bernoulli_shift requires p0, p1 in (0,1)");
      if (p0 == p1) throw input_error("bernoulli_shift requires p0 != p1");
    } else {
      if (!std::isfinite(mu) || mu == 0.0) throw input_error("shift models require finite mu != 0");
    }
  }

  ModelKind kind_;
  double mu_;
  double p0_;
  double p1_;
  double scale_;
};

/// Log-likelihood ratio log(f1(x)/f0(x)) in closed form.
inline double llr(const ModelPair& model, double x) {
  if (!std::isfinite(x)) throw input_error("llr: observation must be finite");
  switch (model.kind()) {
    case ModelKind::kLaplaceShift:
      return std::fabs(x) - std::fabs(x - model.mu());
    case ModelKind::kGaussianShift:
      return model.mu() * x - 0.5 * model.mu() * model.mu();
    case ModelKind::kBernoulliShift:
      if (x == 1.0) return std::log(model.p1() / model.p0());
      if (x == 0.0) return std::log((1.0 - model.p1()) / (1.0 - model.p0()));
      throw input_error("llr: bernoulli observation must be 0 or 1");
  }
  return 0.0;
}

inline SensitivityInfo sensitivity(const ModelPair& model) noexcept {
  switch (model.kind()) {
    case ModelKind::kLaplaceShift:
      return {true, 2.0 * std::fabs(model.mu())};
    case ModelKind::kBernoulliShift: {
      const double p0 = model.p0();
      const double p1 = model.p1();
      return {true, std::fabs(std::log(p1 * (1.0 - p0) / (p0 * (1.0 - p1))))};
    }
    case ModelKind::kGaussianShift:
      return {false, 0.0};
  }
  return {};
}

/// Kullback-Leibler number I0 = E_{f1}[llr(X)].
inline double kl_post(const ModelPair& model) noexcept {
  switch (model.kind()) {
    case ModelKind::kGaussianShift:
      return 0.5 * model.mu() * model.mu();
    case ModelKind::kLaplaceShift: {
      const double m = std::fabs(model.mu());
      return m + std::expm1(-m);
    }
    case ModelKind::kBernoulliShift: {
      const double p0 = model.p0();
      const double p1 = model.p1();
      return p1 * std::log(p1 / p0) + (1.0 - p1) * std::log((1.0 - p1) / (1.0 - p0));
    }
  }
  return 0.0;
}

namespace detail {

inline double laplace_cdf(double x) noexcept {
  return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x);
}

}  // namespace detail

/// Exact P_{X~f_i}(2|llr(X)| >= t).
inline double llr_magnitude_survival(const ModelPair& model, Regime regime, double t) {
  if (std::isnan(t)) throw input_error("survival: t is NaN");
  const double s = 0.5 * t;  // threshold on |llr|
  if (s <= 0.0) return 1.0;
  switch (model.kind()) {
    case ModelKind::kLaplaceShift: {
      // |llr| >= s iff x <= (m-s)/2 or x >= (m+s)/2 (mu > 0; mu < 0 mirrors).
      // Both regimes give the same value because f1 is f0 reflected about m/2.
      const double m = std::fabs(model.mu());
      if (s > m) return 0.0;
      return detail::laplace_cdf(0.5 * (m - s)) + 1.0 - detail::laplace_cdf(0.5 * (m + s));
    }
    case ModelKind::kGaussianShift: {
      // |mu x - mu^2/2| >= s iff |x - mu/2| >= s/|mu|; symmetric across regimes.
      const double m = std::fabs(model.mu());
      const double half = 0.5 * m;
      const double r = s / m;
      return special::normal_sf(half + r) + special::normal_cdf(half - r);
    }
    case ModelKind::kBernoulliShift: {
      const double p = regime == Regime::kPre ? model.p0() : model.p1();
      const double v1 = std::fabs(std::log(model.p1() / model.p0()));
      const double v0 = std::fabs(std::log((1.0 - model.p1()) / (1.0 - model.p0())));
      return (v1 >= s ? p : 0.0) + (v0 >= s ? 1.0 - p : 0.0);
    }
  }
  return 0.0;
}

/// Smallest t with max_i P_i(2|llr| >= t) <= delta/2, by bisection on the exact
/// survival functions. Returns the feasible end of the final bracket, so the
/// constraint always holds at the returned value.
inline double a_delta_bisect(const ModelPair& model, double delta, double tolerance = 1e-9) {
  if (!(delta > 0.0 && delta < 1.0)) throw input_error("a_delta: delta must lie in (0,1)");
  const double target = 0.5 * delta;
  const auto feasible = [&](double t) {
    return std::max(llr_magnitude_survival(model, Regime::kPre, t),
                    llr_magnitude_survival(model, Regime::kPost, t)) <= target;
  };
  double lo = 0.0;
  double hi = 1.0;
  while (!feasible(hi)) {
    lo = hi;
    hi *= 2.0;
  }
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return hi;
}

/// Distribution-dependent surrogate sensitivity A_delta.
///
/// GaussianShift uses 2|mu| z_{delta/4} + mu^2, which satisfies both survival
/// constraints (it is an upper bound on the exact infimum); other models use
/// a_delta_bisect.
inline double a_delta(const ModelPair& model, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw input_error("a_delta: delta must lie in (0,1)");
  if (model.kind() == ModelKind::kGaussianShift) {
    const double m = std::fabs(model.mu());
    return 2.0 * m * special::normal_upper_quantile(0.25 * delta) + m * m;
  }
  return a_delta_bisect(model, delta);
}

/// Draw one observation from f0 (Pre) or f1 (Post). One uniform per call.
template <class Generator>
double sample(const ModelPair& model, Regime regime, Generator& gen) {
  const bool post = regime == Regime::kPost;
  switch (model.kind()) {
    case ModelKind::kLaplaceShift: {
      static const NoiseScale unit(1.0);
      return (post ? model.mu() : 0.0) + lap_sample(unit, gen);
    }
    case ModelKind::kGaussianShift: {
      const double u = gen.uniform_open();
      return (post ? model.mu() : 0.0) + special::normal_quantile(u);
    }
    case ModelKind::kBernoulliShift: {
      const double p = post ? model.p1() : model.p0();
      return gen.uniform_open() < p ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

}  // namespace dpcusum
