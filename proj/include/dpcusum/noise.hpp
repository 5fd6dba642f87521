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

#include <cmath>
#include <string>

#include "dpcusum/errors.hpp"
#include "dpcusum/rng.hpp"

namespace dpcusum {

/// Scale parameter of a zero-mean Laplace variable with density exp(-|x|/beta)/(2 beta).
class NoiseScale {
 public:
  explicit NoiseScale(double beta) : beta_(beta) {
    if (!std::isfinite(beta) || !(beta > 0.0)) {
      throw input_error("noise scale must be finite and > 0, got " + std::to_string(beta));
    }
  }

  double beta() const noexcept { return beta_; }

 private:
  double beta_;
};

/// Inverse-CDF Laplace draw. Consumes exactly one uniform per call.
template <class Generator>
double lap_sample(const NoiseScale& scale, Generator& gen) noexcept {
  const double u = gen.uniform_open() - 0.5;
  const double magnitude = -scale.beta() * std::log(1.0 - 2.0 * std::fabs(u));
  return u < 0.0 ? -magnitude : magnitude;
}

/// beta = multiplier * sensitivity / epsilon. Private detectors use multiplier 2;
/// the sliding-window baseline uses 4 (statistic) and 8 (threshold).
inline NoiseScale detector_scale(double epsilon, double sensitivity, double multiplier) {
  if (!std::isfinite(epsilon) || !(epsilon > 0.0)) throw input_error("epsilon must be > 0");
  if (!std::isfinite(sensitivity) || !(sensitivity > 0.0)) throw input_error("sensitivity must be > 0");
  if (!(multiplier > 0.0)) throw input_error("noise multiplier must be > 0");
  return NoiseScale(multiplier * sensitivity / epsilon);
}

}  // namespace dpcusum
