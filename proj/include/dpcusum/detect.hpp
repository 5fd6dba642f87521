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
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpcusum/errors.hpp"
#include "dpcusum/model.hpp"
#include "dpcusum/noise.hpp"
#include "dpcusum/rng.hpp"

namespace dpcusum {

enum class Variant { kCusum, kDpCusum, kDeltaDpCusum, kOnlinePcpd };

inline std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::kCusum:
      return "cusum";
    case Variant::kDpCusum:
      return "dp_cusum";
    case Variant::kDeltaDpCusum:
      return "delta_dp_cusum";
    case Variant::kOnlinePcpd:
      return "online_pcpd";
  }
  return "unknown";
}

inline Variant variant_from_string(std::string_view name) {
  if (name == "cusum") return Variant::kCusum;
  if (name == "dp_cusum") return Variant::kDpCusum;
  if (name == "delta_dp_cusum") return Variant::kDeltaDpCusum;
  if (name == "online_pcpd") return Variant::kOnlinePcpd;
  throw input_error("unknown detector variant '" + std::string(name) + "'");
}

inline constexpr std::size_t kDefaultPcpdWindow = 700;

/// Fully resolved detector parameters. Build one with resolve_config().
struct DetectorConfig {
  Variant variant = Variant::kCusum;
  double b = 0.0;
  double epsilon = 0.0;
  double delta = 0.0;             // only for DeltaDpCusum and OnlinePcpd on unbounded models
  double sensitivity_used = 0.0;  // Delta (bounded) or A_delta (unbounded)
  std::size_t window = kDefaultPcpdWindow;

  bool is_private() const noexcept { return variant != Variant::kCusum; }
};

/// What a caller asks for; sensitivity is resolved against the model.
struct DetectorSpec {
  Variant variant = Variant::kCusum;
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<std::size_t> window;
};

inline DetectorConfig resolve_config(const DetectorSpec& spec, const ModelPair& model, double b) {
  if (std::isnan(b)) throw config_error("threshold b is NaN");
  DetectorConfig cfg;
  cfg.variant = spec.variant;
  cfg.b = b;
  if (spec.variant == Variant::kCusum) return cfg;

  if (!spec.epsilon || !(*spec.epsilon > 0.0) || !std::isfinite(*spec.epsilon)) {
    throw config_error(std::string(to_string(spec.variant)) + " requires epsilon > 0");
  }
  cfg.epsilon = *spec.epsilon;
  const SensitivityInfo sens = sensitivity(model);

  const auto need_delta = [&] {
    if (!spec.delta || !(*spec.delta > 0.0 && *spec.delta < 1.0)) {
      throw config_error(std::string(to_string(spec.variant)) + " requires delta in (0,1)");
    }
    cfg.delta = *spec.delta;
    cfg.sensitivity_used = a_delta(model, cfg.delta);
  };

  switch (spec.variant) {
    case Variant::kDpCusum:
      if (!sens.bounded) {
        throw config_error("dp_cusum needs a bounded LLR sensitivity; use delta_dp_cusum for " +
                           std::string(to_string(model.kind())));
      }
      cfg.sensitivity_used = sens.delta;
      break;
    case Variant::kDeltaDpCusum:
      need_delta();
      break;
    case Variant::kOnlinePcpd:
      if (sens.bounded) {
        cfg.sensitivity_used = sens.delta;
      } else {
        need_delta();
      }
      cfg.window = spec.window.value_or(kDefaultPcpdWindow);
      if (cfg.window == 0) throw config_error("online_pcpd window must be positive");
      break;
    case Variant::kCusum:
      break;
  }
  return cfg;
}

enum class Decision { kContinue, kStop };

struct DetectorState {
  std::uint64_t t = 0;
  double s = 0.0;
  /// S_t + Z_t after the latest step; no comparison happens before t = 1.
  double s_tilde = -std::numeric_limits<double>::infinity();
  double w = 0.0;
  bool stopped = false;
};

/// One detector instance. Owns no randomness: the caller passes the generator
/// for statistic noise on every step and the threshold-noise generator once at
/// construction.
class Detector {
 public:
  template <class Generator>
  Detector(const DetectorConfig& cfg, const ModelPair& model, Generator& threshold_gen)
      : cfg_(cfg), model_(model) {
    switch (cfg_.variant) {
      case Variant::kCusum:
        break;
      case Variant::kDpCusum:
      case Variant::kDeltaDpCusum:
        stat_scale_ = detector_scale(cfg_.epsilon, cfg_.sensitivity_used, 2.0);
        state_.w = lap_sample(detector_scale(cfg_.epsilon, cfg_.sensitivity_used, 2.0), threshold_gen);
        break;
      case Variant::kOnlinePcpd:
        stat_scale_ = detector_scale(cfg_.epsilon, cfg_.sensitivity_used, 4.0);
        state_.w = lap_sample(detector_scale(cfg_.epsilon, cfg_.sensitivity_used, 8.0), threshold_gen);
        break;
    }
  }

  const DetectorState& state() const noexcept { return state_; }
  const DetectorConfig& config() const noexcept { return cfg_; }

  template <class Generator>
  Decision step(double x, Generator& stat_gen) {
    return step_llr(llr(model_, x), stat_gen);
  }

  /// Advance with an already-evaluated LLR value.
  template <class Generator>
  Decision step_llr(double l, Generator& stat_gen) {
    if (state_.stopped) throw usage_error("step called on a stopped detector");
    ++state_.t;
    bool stop = false;
    switch (cfg_.variant) {
      case Variant::kCusum:
        state_.s = std::max(0.0, state_.s) + l;
        state_.s_tilde = state_.s;
        stop = state_.s >= cfg_.b;
        break;
      case Variant::kDpCusum:
      case Variant::kDeltaDpCusum:
        state_.s = std::max(0.0, state_.s) + l;
        state_.s_tilde = state_.s + lap_sample(*stat_scale_, stat_gen);
        stop = state_.s_tilde >= cfg_.b + state_.w;
        break;
      case Variant::kOnlinePcpd:
        stop = step_window(l, stat_gen);
        break;
    }
    state_.stopped = stop;
    return stop ? Decision::kStop : Decision::kContinue;
  }

 private:
  // Windowed offline CUSUM: max_{k in window} sum_{j=k}^{t} l_j
  // = P_t - min_{t-m <= j <= t-1} P_j over prefix sums P, tracked with a
  // monotone deque so each step is O(1) amortized.
  template <class Generator>
  bool step_window(double l, Generator& stat_gen) {
    const std::uint64_t t = state_.t;
    const std::uint64_t m = cfg_.window;
    while (!prefix_min_.empty() && prefix_min_.back().second >= prefix_) prefix_min_.pop_back();
    prefix_min_.emplace_back(t - 1, prefix_);
    prefix_ += l;
    while (prefix_min_.front().first + m < t) prefix_min_.pop_front();
    if (t < m) {
      state_.s = std::numeric_limits<double>::quiet_NaN();
      state_.s_tilde = state_.s;
      return false;
    }
    state_.s = prefix_ - prefix_min_.front().second;
    state_.s_tilde = state_.s + lap_sample(*stat_scale_, stat_gen);
    return state_.s_tilde >= cfg_.b + state_.w;
  }

  DetectorConfig cfg_;
  ModelPair model_;
  DetectorState state_;
  std::optional<NoiseScale> stat_scale_;
  double prefix_ = 0.0;
  std::deque<std::pair<std::uint64_t, double>> prefix_min_;
};

inline constexpr std::uint64_t kNoChange = std::numeric_limits<std::uint64_t>::max();

struct TracePoint {
  std::uint64_t t;
  double s;
  double s_tilde;
};

struct RunOutcome {
  std::uint64_t stopping_time = 0;  // equals the horizon when censored
  bool censored = false;
  std::vector<TracePoint> trajectory;
};

/// Feed observations (f0 for t <= changepoint, f1 afterwards) until the
/// detector stops or the horizon is reached. Draw order per step: data, then
/// statistic noise, each from its own lane of `stream`.
inline RunOutcome run_to_stop(const DetectorConfig& cfg, const ModelPair& model, std::uint64_t changepoint,
                              std::uint64_t horizon, const RngStream& stream, bool record_trajectory = false) {
  if (horizon == 0) throw input_error("run_to_stop: horizon must be >= 1");
  auto data_gen = stream.lane(Lane::kData);
  auto stat_gen = stream.lane(Lane::kStatNoise);
  auto threshold_gen = stream.lane(Lane::kThresholdNoise);
  Detector detector(cfg, model, threshold_gen);

  RunOutcome out;
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    const Regime regime = t <= changepoint ? Regime::kPre : Regime::kPost;
    const double x = sample(model, regime, data_gen);
    const Decision d = detector.step(x, stat_gen);
    if (record_trajectory) out.trajectory.push_back({t, detector.state().s, detector.state().s_tilde});
    if (d == Decision::kStop) {
      out.stopping_time = t;
      return out;
    }
  }
  out.stopping_time = horizon;
  out.censored = true;
  return out;
}

}  // namespace dpcusum
