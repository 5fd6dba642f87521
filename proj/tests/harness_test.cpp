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

#include "dpcusum/harness.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

#include "dpcusum/calibrate.hpp"

namespace dpcusum {
namespace {

const DetectorSpec kCusum{Variant::kCusum, {}, {}, {}};

ExperimentOptions opts(std::uint64_t trials, std::uint64_t seed, unsigned jobs = 1, std::uint64_t horizon = 1000000) {
  return {trials, horizon, seed, jobs};
}

TEST(EstimateArlTest, NegativeThresholdStopsAtOnce) {
  // llr >= -mu here, so S_1 >= -1 on every path
  const auto m = ModelPair::laplace_shift(0.5);
  const auto r = estimate_arl(resolve_config(kCusum, m, -1.0), m, opts(500, 1));
  EXPECT_DOUBLE_EQ(r.estimate, 1.0);
  EXPECT_DOUBLE_EQ(r.std_error, 0.0);
  EXPECT_EQ(r.trials, 500u);
  EXPECT_EQ(r.censored, 0u);
  EXPECT_THROW(estimate_arl(resolve_config(kCusum, m, -1.0), m, opts(0, 1)), input_error);
}

TEST(EstimateArlTest, BitIdenticalAcrossRunsAndWorkerCounts) {
  const auto m = ModelPair::laplace_shift(0.2);
  const auto cfg = resolve_config({Variant::kDpCusum, 0.8, {}, {}}, m, 6.0);
  const auto a = estimate_arl(cfg, m, opts(3000, 17, 1));
  const auto b = estimate_arl(cfg, m, opts(3000, 17, 1));
  const auto c = estimate_arl(cfg, m, opts(3000, 17, 4));
  EXPECT_EQ(a.estimate, b.estimate);
  EXPECT_EQ(a.estimate, c.estimate);
  EXPECT_EQ(a.std_error, c.std_error);
  const auto d = estimate_arl(cfg, m, opts(3000, 18, 1));
  EXPECT_NE(a.estimate, d.estimate);
}

TEST(EstimateArlTest, CalibratedThresholdMeetsTarget) {
  const auto m = ModelPair::laplace_shift(0.2);
  const double b = solve_threshold(100.0, 0.8, 0.4).b;
  const auto r = estimate_arl(resolve_config({Variant::kDpCusum, 0.8, {}, {}}, m, b), m, opts(300, 3));
  EXPECT_GE(r.estimate - 2.0 * r.std_error, 100.0);
}

TEST(EstimateArlTest, CensoringIsCountedAtHorizon) {
  const auto m = ModelPair::gaussian_shift(0.5);
  const auto r = estimate_arl(resolve_config(kCusum, m, INFINITY), m, opts(50, 1, 1, 100));
  EXPECT_DOUBLE_EQ(r.estimate, 100.0);
  EXPECT_DOUBLE_EQ(r.censored_fraction, 1.0);
  EXPECT_TRUE(r.censoring_exceeded());
  EXPECT_EQ(arl_horizon_for(50.0), 1000000u);
  EXPECT_EQ(arl_horizon_for(1e5), 10000000u);
}

TEST(EstimateWaddTest, DelayGrowsLikeThresholdOverKl) {
  const auto m = ModelPair::gaussian_shift(0.5);
  const auto r = estimate_wadd(resolve_config(kCusum, m, 25.0), m, opts(2000, 5));
  EXPECT_NEAR(r.estimate / 25.0, 1.0 / kl_post(m), 0.1 / kl_post(m));
}

TEST(EstimateWaddTest, NegligibleNoiseMatchesExact) {
  const auto m = ModelPair::laplace_shift(0.5);
  const auto exact = estimate_wadd(resolve_config(kCusum, m, 5.05), m, opts(2000, 8));
  const auto priv = estimate_wadd(resolve_config({Variant::kDpCusum, 1e13, {}, {}}, m, 5.05), m, opts(2000, 8));
  EXPECT_EQ(exact.estimate, priv.estimate);
}

TEST(EstimateWaddTest, NondecreasingAlongLadder) {
  const auto m = ModelPair::laplace_shift(0.5);
  double prev = 0.0;
  for (double b : {2.0, 4.0, 6.0, 8.0, 10.0}) {
    const auto r = estimate_wadd(resolve_config({Variant::kDpCusum, 2.0, {}, {}}, m, b), m, opts(1000, 2));
    EXPECT_GE(r.estimate, prev);
    prev = r.estimate;
  }
}

TEST(SweepTest, RowsSortedAndIndependentOfLadder) {
  const auto m = ModelPair::laplace_shift(0.5);
  const std::vector<SweepDetector> dets{{{Variant::kDpCusum, {}, {}, {}}, {}}, {kCusum, {}}};
  const std::vector<double> eps{2.0, 1.0};
  const std::vector<double> ladder{3.0, 5.0};
  const auto rows = sweep_delay_vs_arl(dets, m, eps, ladder, opts(400, 11), opts(400, 11));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0].detector, "cusum");
  EXPECT_EQ(rows[2].detector, "dp_cusum");
  EXPECT_DOUBLE_EQ(*rows[2].epsilon, 1.0);
  EXPECT_DOUBLE_EQ(*rows[4].epsilon, 2.0);
  EXPECT_LT(rows[4].b, rows[5].b);

  const std::vector<double> longer{1.0, 5.0, 9.0};
  const auto more = sweep_delay_vs_arl(dets, m, eps, longer, opts(400, 11), opts(400, 11));
  for (const auto& r : rows) {
    for (const auto& q : more) {
      if (q.detector == r.detector && q.epsilon == r.epsilon && q.b == r.b) {
        EXPECT_EQ(q.arl_est, r.arl_est);
        EXPECT_EQ(q.wadd_est, r.wadd_est);
      }
    }
  }
}

TEST(SweepTest, ArlAndWaddUseDisjointStreams) {
  EXPECT_NE(trial_stream(Metric::kArl, 1, 0).master_seed(), trial_stream(Metric::kWadd, 1, 0).master_seed());
  EXPECT_EQ(trial_stream(Metric::kArl, 1, 4).stream_id(), 4u);
}

TEST(SweepTest, CsvHeaderAndRowCount) {
  const auto m = ModelPair::laplace_shift(0.5);
  const std::vector<SweepDetector> dets{{kCusum, {}}};
  const std::vector<double> ladder{2.0, 3.0};
  const auto rows = sweep_delay_vs_arl(dets, m, std::vector<double>{}, ladder, opts(50, 1), opts(50, 1));
  std::ostringstream os;
  write_sweep_csv(os, rows);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "detector,model,mu,epsilon,delta,b,arl_est,arl_se,wadd_est,wadd_se,trials,seed");
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    EXPECT_EQ(line.rfind("cusum,laplace_shift,0.5,,,", 0), 0u) << line;
  }
  EXPECT_EQ(n, 2);
}

TEST(SweepTest, EmptyInputsRejected) {
  const auto m = ModelPair::laplace_shift(0.5);
  const std::vector<double> ladder{2.0};
  EXPECT_THROW(sweep_delay_vs_arl(std::vector<SweepDetector>{}, m, ladder, ladder, opts(5, 1), opts(5, 1)),
               input_error);
  const std::vector<SweepDetector> priv{{{Variant::kDpCusum, {}, {}, {}}, {}}};
  EXPECT_THROW(sweep_delay_vs_arl(priv, m, std::vector<double>{}, ladder, opts(5, 1), opts(5, 1)), config_error);
}

TEST(InterpolationTest, LinearInLogArl) {
  DelayCurve c{{100.0, 10000.0}, {10.0, 30.0}};
  EXPECT_DOUBLE_EQ(*wadd_at_arl(c, 1000.0), 20.0);
  EXPECT_DOUBLE_EQ(*wadd_at_arl(c, 100.0), 10.0);
  EXPECT_DOUBLE_EQ(*wadd_at_arl(c, 10000.0), 30.0);
  EXPECT_FALSE(wadd_at_arl(c, 50.0).has_value());
  EXPECT_FALSE(wadd_at_arl(c, 20000.0).has_value());
}

TEST(AuditTest, IdenticalStreamsGiveUnitRatios) {
  const auto m = ModelPair::bernoulli_shift(0.3, 0.6);
  const std::vector<int> x{1, 0, 1, 1, 0, 1, 1, 1};
  const auto r = privacy_audit(m, x, std::nullopt, 1.0, 2.0, 20000, 3);
  ASSERT_EQ(r.entries.size(), 9u);
  EXPECT_TRUE(r.entries.back().no_stop);
  double total = 0.0;
  for (const auto& e : r.entries) {
    EXPECT_EQ(e.p_x, e.p_xprime);
    total += e.p_x;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_TRUE(r.pass);
}

TEST(AuditTest, LargeEpsilonPassesWithMargin) {
  const auto m = ModelPair::bernoulli_shift(0.3, 0.6);
  const std::vector<int> x{1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};
  const auto r = privacy_audit(m, x, 0, 10.0, 3.0, 20000, 4);
  EXPECT_TRUE(r.pass);
  EXPECT_LT(r.max_upper_bound, std::exp(10.0) / 100.0);
}

TEST(AuditTest, WorkerCountDoesNotChangeCounts) {
  const auto m = ModelPair::bernoulli_shift(0.3, 0.6);
  const std::vector<int> x{0, 1, 1, 0, 1};
  AuditOptions one;
  AuditOptions four;
  four.jobs = 4;
  const auto a = privacy_audit(m, x, 2, 1.0, 2.0, 50000, 6, one);
  const auto b = privacy_audit(m, x, 2, 1.0, 2.0, 50000, 6, four);
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].p_x, b.entries[i].p_x);
    EXPECT_EQ(a.entries[i].p_xprime, b.entries[i].p_xprime);
  }
}

TEST(AuditTest, RejectsBadInput) {
  const std::vector<int> x{0, 1, 2};
  const std::vector<int> ok{0, 1};
  const std::vector<int> long_stream(13, 1);
  const auto m = ModelPair::bernoulli_shift(0.3, 0.6);
  EXPECT_THROW(privacy_audit(m, x, 0, 1.0, 1.0, 10, 1), input_error);
  EXPECT_THROW(privacy_audit(m, ok, 2, 1.0, 1.0, 10, 1), input_error);
  EXPECT_THROW(privacy_audit(m, long_stream, 0, 1.0, 1.0, 10, 1), input_error);
  EXPECT_THROW(privacy_audit(ModelPair::laplace_shift(0.5), ok, 0, 1.0, 1.0, 10, 1), input_error);
}

TEST(TailOracleTest, GaussianPreChangeCells) {
  const auto m = ModelPair::gaussian_shift(0.5);
  const std::vector<double> bs{0.0, 2.0, 4.0};
  const std::vector<std::uint64_t> ts{20};
  const std::vector<double> lambdas{0.2, 0.5};
  const auto r = tail_oracle_suite(m, bs, ts, lambdas, 20000, 1);
  EXPECT_TRUE(r.pass);
  ASSERT_EQ(r.tail.size(), 3u);
  EXPECT_DOUBLE_EQ(r.tail[0].bound, 1.0);
  EXPECT_LE(r.tail[2].frequency, r.tail[1].frequency);
  EXPECT_THROW(tail_oracle_suite(m, bs, ts, std::vector<double>{1.0}, 10, 1), input_error);
}

TEST(TailOracleTest, WorkerCountDoesNotChangeResults) {
  const auto m = ModelPair::laplace_shift(0.5);
  const std::vector<double> bs{1.0};
  const std::vector<std::uint64_t> ts{5, 20};
  const std::vector<double> lambdas{0.5};
  const auto a = tail_oracle_suite(m, bs, ts, lambdas, 5000, 2, 1);
  const auto b = tail_oracle_suite(m, bs, ts, lambdas, 5000, 2, 3);
  for (std::size_t i = 0; i < a.mgf.size(); ++i) EXPECT_EQ(a.mgf[i].mean, b.mgf[i].mean);
  for (std::size_t i = 0; i < a.tail.size(); ++i) EXPECT_EQ(a.tail[i].frequency, b.tail[i].frequency);
}

}  // namespace
}  // namespace dpcusum
