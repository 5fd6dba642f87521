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

#include "dpcusum/io.hpp"

#include <sstream>
#include <string>

#include "gtest/gtest.h"

namespace dpcusum::io {
namespace {

json parse(const char* text) { return json::parse(text); }

TEST(ModelJsonTest, RoundTrip) {
  for (const auto& m : {ModelPair::gaussian_shift(0.5), ModelPair::laplace_shift(-0.2), ModelPair::bernoulli_shift(0.3, 0.6)}) {
    EXPECT_EQ(model_from_json(model_to_json(m)), m);
  }
}

TEST(ModelJsonTest, Errors) {
  EXPECT_THROW(model_from_json(parse(R"({"kind":"poisson_shift","mu":1})")), input_error);
  EXPECT_THROW(model_from_json(parse(R"({"kind":"gaussian_shift"})")), input_error);
  EXPECT_THROW(model_from_json(parse(R"({"kind":"gaussian_shift","mu":"x"})")), input_error);
  EXPECT_THROW(model_from_json(parse(R"([1,2])")), input_error);
}

TEST(ConfigJsonTest, EpsilonListExpands) {
  const auto c = experiment_config_from_json(parse(R"({
    "model": {"kind": "laplace_shift", "mu": 0.2},
    "detectors": [{"variant": "cusum"}, {"variant": "dp_cusum", "epsilon": [0.2, 0.4, 1]}],
    "thresholds": [1, 2, 3], "trials": 20, "horizon": 1000, "seed": 9})"));
  ASSERT_EQ(c.detectors.size(), 4u);
  EXPECT_DOUBLE_EQ(*c.detectors[3].spec.epsilon, 1.0);
  EXPECT_EQ(c.trials, 20u);
  EXPECT_EQ(*c.seed, 9u);
  const auto again = experiment_config_from_json(experiment_config_to_json(c));
  EXPECT_EQ(experiment_config_to_json(again).dump(), experiment_config_to_json(c).dump());
}

TEST(ConfigJsonTest, DpCusumOnGaussianIsConfigError) {
  EXPECT_THROW(experiment_config_from_json(parse(R"({
    "model": {"kind": "gaussian_shift", "mu": 0.5},
    "detectors": [{"variant": "dp_cusum", "epsilon": 1}], "thresholds": [1]})")),
               config_error);
}

TEST(ConfigJsonTest, MissingPiecesAreInputErrors) {
  EXPECT_THROW(experiment_config_from_json(parse(R"({"detectors": [{"variant": "cusum"}], "thresholds": [1]})")),
               input_error);
  EXPECT_THROW(experiment_config_from_json(parse(R"({"model": {"kind": "gaussian_shift", "mu": 0.5},
    "detectors": [{"variant": "cusum"}]})")),
               input_error);
  EXPECT_THROW(experiment_config_from_json(parse(R"({"model": {"kind": "gaussian_shift", "mu": 0.5},
    "detectors": [{"variant": "cusum"}], "thresholds": [1], "trials": 0})")),
               input_error);
  EXPECT_THROW(experiment_config_from_json(parse(R"({"model": {"kind": "gaussian_shift", "mu": 0.5},
    "detectors": [{"variant": "magic"}], "thresholds": [1]})")),
               input_error);
}

TEST(ReportJsonTest, CalibrationAndAuditShapes) {
  const auto cal = calibration_to_json(solve_threshold(1000.0, 0.8, 0.4));
  EXPECT_TRUE(cal.contains("b"));
  EXPECT_DOUBLE_EQ(cal.at("h").get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(cal.at("gamma").get<double>(), 1000.0);
  AuditReport r;
  r.epsilon = 1.0;
  r.slack = 1.1;
  r.entries.push_back({1, false, 0.5, 0.5, 1.0, true});
  r.entries.push_back({2, true, 0.0, 0.0, 0.0, false});
  const auto j = audit_to_json(r);
  ASSERT_EQ(j.at("entries").size(), 2u);
  EXPECT_TRUE(j.at("entries")[1].at("ratio_upper").is_null());
  EXPECT_EQ(j.at("entries")[1].at("event"), "no_stop");
  for (const char* key : {"t", "p_x", "p_xprime", "ratio_upper"}) EXPECT_TRUE(j.at("entries")[0].contains(key));
}

TEST(HeatmapCsvTest, HeaderAndRows) {
  std::ostringstream os;
  write_heatmap_csv(os, {{0.1, 1.5, 0.1, 0.402, 1.0, true}});
  EXPECT_EQ(os.str(), "mu,epsilon,delta,a_delta,h,on_boundary\n0.1,1.5,0.1,0.402,1,1\n");
}

}  // namespace
}  // namespace dpcusum::io
