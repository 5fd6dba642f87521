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

// JSON config parsing and report serialization. Requires nlohmann/json.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "dpcusum/calibrate.hpp"
#include "dpcusum/detect.hpp"
#include "dpcusum/errors.hpp"
#include "dpcusum/harness.hpp"
#include "dpcusum/model.hpp"

namespace dpcusum::io {

using nlohmann::json;

namespace detail {

inline double get_number(const json& j, const char* key) {
  if (!j.contains(key)) throw input_error(std::string("missing key '") + key + "'");
  if (!j.at(key).is_number()) throw input_error(std::string("key '") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline std::optional<double> opt_number(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return get_number(j, key);
}

inline std::vector<double> number_list(const json& j, const char* key) {
  std::vector<double> out;
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (v.is_number()) {
    out.push_back(v.get<double>());
    return out;
  }
  if (!v.is_array()) throw input_error(std::string("key '") + key + "' must be a number or an array of numbers");
  for (const auto& e : v) {
    if (!e.is_number()) throw input_error(std::string("key '") + key + "' must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

inline std::uint64_t get_count(const json& j, const char* key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw input_error(std::string("key '") + key + "' must be a nonnegative integer");
}

}  // namespace detail

/// {"kind":"gaussian_shift","mu":0.5} / {"kind":"bernoulli_shift","p0":0.3,"p1":0.6}
inline ModelPair model_from_json(const json& j) {
  if (!j.is_object()) throw input_error("model must be a JSON object");
  if (!j.contains("kind") || !j.at("kind").is_string()) throw input_error("model requires a string 'kind'");
  const ModelKind kind = model_kind_from_string(j.at("kind").get<std::string>());
  const double scale = detail::opt_number(j, "scale").value_or(1.0);
  switch (kind) {
    case ModelKind::kLaplaceShift:
      return ModelPair::laplace_shift(detail::get_number(j, "mu"), scale);
    case ModelKind::kGaussianShift:
      return ModelPair::gaussian_shift(detail::get_number(j, "mu"), scale);
    case ModelKind::kBernoulliShift:
      if (scale != 1.0) throw input_error("model scale must be 1");
      return ModelPair::bernoulli_shift(detail::get_number(j, "p0"), detail::get_number(j, "p1"));
  }
  throw input_error("unreachable model kind");
}

inline json model_to_json(const ModelPair& m) {
  json j;
  j["kind"] = std::string(to_string(m.kind()));
  if (m.kind() == ModelKind::kBernoulliShift) {
    j["p0"] = m.p0();
    j["p1"] = m.p1();
  } else {
    j["mu"] = m.mu();
  }
  return j;
}

/// One config detector entry may list several epsilons; each becomes its own
/// SweepDetector.
inline std::vector<SweepDetector> detectors_from_json(const json& j) {
  if (!j.is_array() || j.empty()) throw input_error("'detectors' must be a nonempty array");
  std::vector<SweepDetector> out;
  for (const auto& d : j) {
    if (!d.is_object() || !d.contains("variant") || !d.at("variant").is_string()) {
      throw input_error("each detector needs a string 'variant'");
    }
    SweepDetector base;
    base.spec.variant = variant_from_string(d.at("variant").get<std::string>());
    base.spec.delta = detail::opt_number(d, "delta");
    if (d.contains("window")) base.spec.window = detail::get_count(d, "window", kDefaultPcpdWindow);
    base.thresholds = detail::number_list(d, "thresholds");
    const auto eps = detail::number_list(d, "epsilon");
    if (eps.empty() || base.spec.variant == Variant::kCusum) {
      out.push_back(base);
    } else {
      for (double e : eps) {
        SweepDetector copy = base;
        copy.spec.epsilon = e;
        out.push_back(copy);
      }
    }
  }
  return out;
}

inline json detector_spec_to_json(const SweepDetector& d) {
  json j;
  j["variant"] = std::string(to_string(d.spec.variant));
  if (d.spec.epsilon) j["epsilon"] = *d.spec.epsilon;
  if (d.spec.delta) j["delta"] = *d.spec.delta;
  if (d.spec.window) j["window"] = *d.spec.window;
  if (!d.thresholds.empty()) j["thresholds"] = d.thresholds;
  return j;
}

/// Harness config: {model, detectors:[...], thresholds:[...], epsilons?, gamma?, trials, horizon, seed}.
struct ExperimentConfig {
  ModelPair model = ModelPair::gaussian_shift(1.0);
  std::vector<SweepDetector> detectors;
  std::vector<double> thresholds;
  std::vector<double> epsilons;
  std::optional<double> gamma;
  std::uint64_t trials = kDefaultTrials;
  std::uint64_t horizon = kDefaultHorizon;
  std::optional<std::uint64_t> seed;
};

inline ExperimentConfig experiment_config_from_json(const json& j) {
  if (!j.is_object()) throw input_error("config must be a JSON object");
  ExperimentConfig c;
  if (!j.contains("model")) throw input_error("config requires 'model'");
  c.model = model_from_json(j.at("model"));
  if (!j.contains("detectors")) throw input_error("config requires 'detectors'");
  c.detectors = detectors_from_json(j.at("detectors"));
  c.thresholds = detail::number_list(j, "thresholds");
  c.epsilons = detail::number_list(j, "epsilons");
  c.gamma = detail::opt_number(j, "gamma");
  c.trials = detail::get_count(j, "trials", kDefaultTrials);
  c.horizon = detail::get_count(j, "horizon", kDefaultHorizon);
  if (j.contains("seed")) c.seed = detail::get_count(j, "seed", 0);
  if (c.trials == 0) throw input_error("trials must be >= 1");
  if (c.horizon == 0) throw input_error("horizon must be >= 1");
  // Resolve every detector once so configuration errors surface before any
  // simulation starts.
  for (const auto& d : c.detectors) {
    std::vector<std::optional<double>> eps{d.spec.epsilon};
    if (!d.spec.epsilon && d.spec.variant != Variant::kCusum) {
      if (c.epsilons.empty()) throw config_error(std::string(to_string(d.spec.variant)) + " requires epsilon");
      eps.assign(c.epsilons.begin(), c.epsilons.end());
    }
    for (const auto& e : eps) {
      DetectorSpec spec = d.spec;
      spec.epsilon = e;
      (void)resolve_config(spec, c.model, 0.0);
    }
    if (d.thresholds.empty() && c.thresholds.empty()) throw input_error("no thresholds given");
  }
  return c;
}

inline json experiment_config_to_json(const ExperimentConfig& c) {
  json j;
  j["model"] = model_to_json(c.model);
  j["detectors"] = json::array();
  for (const auto& d : c.detectors) j["detectors"].push_back(detector_spec_to_json(d));
  j["thresholds"] = c.thresholds;
  if (!c.epsilons.empty()) j["epsilons"] = c.epsilons;
  if (c.gamma) j["gamma"] = *c.gamma;
  j["trials"] = c.trials;
  j["horizon"] = c.horizon;
  if (c.seed) j["seed"] = *c.seed;
  return j;
}

inline json detector_config_to_json(const DetectorConfig& cfg) {
  json j;
  j["variant"] = std::string(to_string(cfg.variant));
  j["b"] = std::isfinite(cfg.b) ? json(cfg.b) : json(cfg.b > 0 ? "inf" : "-inf");
  if (cfg.is_private()) {
    j["epsilon"] = cfg.epsilon;
    j["sensitivity_used"] = cfg.sensitivity_used;
  }
  if (cfg.delta > 0.0) j["delta"] = cfg.delta;
  if (cfg.variant == Variant::kOnlinePcpd) j["window"] = cfg.window;
  return j;
}

inline json report_to_json(const ExperimentReport& r) {
  json j;
  j["metric"] = std::string(to_string(r.metric));
  j["estimate"] = r.estimate;
  j["std_error"] = r.std_error;
  j["trials"] = r.trials;
  j["censored_fraction"] = r.censored_fraction;
  j["horizon"] = r.horizon;
  j["seed"] = r.master_seed;
  j["detector"] = detector_config_to_json(r.config);
  j["model"] = model_to_json(r.model);
  return j;
}

inline json calibration_to_json(const CalibrationResult& c) {
  return json{{"b", c.b}, {"gamma", c.gamma_target}, {"h", c.h_value}, {"bound_at_b", c.bound_at_b}};
}

inline json audit_to_json(const AuditReport& r) {
  json j;
  j["horizon"] = r.horizon;
  j["epsilon"] = r.epsilon;
  j["b"] = r.b;
  j["noise_draws"] = r.noise_draws;
  j["seed"] = r.seed;
  j["confidence"] = r.confidence;
  j["slack"] = r.slack;
  j["max_upper_bound"] = r.max_upper_bound;
  j["limit"] = std::exp(r.epsilon) * r.slack;
  j["pass"] = r.pass;
  j["entries"] = json::array();
  for (const auto& e : r.entries) {
    json row{{"t", e.t}, {"p_x", e.p_x}, {"p_xprime", e.p_xprime}, {"reliable", e.reliable}};
    if (e.no_stop) row["event"] = "no_stop";
    row["ratio_upper"] = e.reliable ? json(e.ratio_upper) : json(nullptr);
    j["entries"].push_back(row);
  }
  return j;
}

inline void write_heatmap_csv(std::ostream& os, const std::vector<HeatmapCell>& cells) {
  os << "mu,epsilon,delta,a_delta,h,on_boundary\n";
  char buf[256];
  for (const auto& c : cells) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%.10g,%.10g,%d\n", c.mu, c.epsilon, c.delta, c.a_delta, c.h,
                  c.on_boundary ? 1 : 0);
    os << buf;
  }
}

}  // namespace dpcusum::io
