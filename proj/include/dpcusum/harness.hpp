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
#include <cstdint>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "dpcusum/detect.hpp"
#include "dpcusum/errors.hpp"
#include "dpcusum/model.hpp"
#include "dpcusum/parallel.hpp"
#include "dpcusum/rng.hpp"

namespace dpcusum {

enum class Metric { kArl, kWadd };

inline std::string_view to_string(Metric m) noexcept { return m == Metric::kArl ? "ARL" : "WADD"; }

inline constexpr std::uint64_t kDefaultTrials = 10000;
inline constexpr std::uint64_t kDefaultHorizon = 1000000;
inline constexpr double kMaxCensoredFraction = 0.01;

/// Horizon rule for false-alarm runs: max(1e6, 100 gamma).
inline std::uint64_t arl_horizon_for(double gamma) {
  const double h = std::max(1e6, 100.0 * gamma);
  return static_cast<std::uint64_t>(std::ceil(h));
}

struct ExperimentOptions {
  std::uint64_t trials = kDefaultTrials;
  std::uint64_t horizon = kDefaultHorizon;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

struct ExperimentReport {
  Metric metric = Metric::kArl;
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t censored = 0;
  double censored_fraction = 0.0;
  std::uint64_t horizon = 0;
  std::uint64_t master_seed = 0;
  DetectorConfig config;
  ModelPair model = ModelPair::gaussian_shift(1.0);

  bool censoring_exceeded() const noexcept { return censored_fraction > kMaxCensoredFraction; }
};

// Sub-stream ids that keep the ARL and WADD experiments of one master seed
// disjoint.
inline constexpr std::uint64_t kArlStreams = 0xA;
inline constexpr std::uint64_t kWaddStreams = 0xD;

/// Stream used by trial `index` of an ARL or WADD experiment.
inline RngStream trial_stream(Metric metric, std::uint64_t seed, std::uint64_t index) {
  const RngStream base = RngStream(seed, 0).child(metric == Metric::kArl ? kArlStreams : kWaddStreams);
  return RngStream(base.master_seed(), index);
}

namespace detail {

struct TimeSums {
  std::uint64_t count = 0;
  std::uint64_t censored = 0;
  unsigned __int128 sum = 0;
  unsigned __int128 sum_sq = 0;

  void add(const RunOutcome& r) noexcept {
    ++count;
    censored += r.censored ? 1 : 0;
    sum += r.stopping_time;
    sum_sq += static_cast<unsigned __int128>(r.stopping_time) * r.stopping_time;
  }
  void merge(const TimeSums& o) noexcept {
    count += o.count;
    censored += o.censored;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
};

inline ExperimentReport run_experiment(Metric metric, const DetectorConfig& cfg, const ModelPair& model,
                                       const ExperimentOptions& opt) {
  if (opt.trials == 0) throw input_error("trials must be >= 1");
  const std::uint64_t changepoint = metric == Metric::kArl ? kNoChange : 0;
  const unsigned jobs = std::max(1u, opt.jobs);
  std::vector<TimeSums> partial(jobs);
  parallel_chunks(opt.trials, jobs, [&](unsigned worker, std::uint64_t begin, std::uint64_t end) {
    TimeSums local;
    for (std::uint64_t i = begin; i < end; ++i) {
      local.add(run_to_stop(cfg, model, changepoint, opt.horizon, trial_stream(metric, opt.seed, i)));
    }
    partial[worker].merge(local);
  });
  TimeSums total;
  for (const auto& p : partial) total.merge(p);

  // Integer sums are exact, so the result does not depend on the worker count.
  ExperimentReport rep;
  rep.metric = metric;
  rep.trials = total.count;
  rep.censored = total.censored;
  rep.censored_fraction = static_cast<double>(total.censored) / static_cast<double>(total.count);
  rep.horizon = opt.horizon;
  rep.master_seed = opt.seed;
  rep.config = cfg;
  rep.model = model;
  const double n = static_cast<double>(total.count);
  rep.estimate = static_cast<double>(total.sum) / n;
  if (total.count > 1) {
    const unsigned __int128 nn = total.count;
    const unsigned __int128 centered = nn * total.sum_sq - total.sum * total.sum;  // n^2 * biased var
    const double var = static_cast<double>(centered) / (n * (n - 1.0));
    rep.std_error = std::sqrt(var / n);
  }
  return rep;
}

}  // namespace detail

/// False-alarm ARL: all observations from f0.
inline ExperimentReport estimate_arl(const DetectorConfig& cfg, const ModelPair& model, const ExperimentOptions& opt) {
  return detail::run_experiment(Metric::kArl, cfg, model, opt);
}

/// Detection delay with the change at time 0, which is the worst case for
/// CUSUM-type procedures.
inline ExperimentReport estimate_wadd(const DetectorConfig& cfg, const ModelPair& model, const ExperimentOptions& opt) {
  return detail::run_experiment(Metric::kWadd, cfg, model, opt);
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepDetector {
  DetectorSpec spec;
  std::vector<double> thresholds;  // empty: use the sweep-wide ladder
};

struct SweepRow {
  std::string detector;
  ModelPair model = ModelPair::gaussian_shift(1.0);
  std::optional<double> epsilon;
  std::optional<double> delta;
  double b = 0.0;
  double arl_est = 0.0;
  double arl_se = 0.0;
  double wadd_est = 0.0;
  double wadd_se = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t seed = 0;
  double arl_censored_fraction = 0.0;
  double wadd_censored_fraction = 0.0;
};

inline constexpr std::string_view kSweepCsvHeader =
    "detector,model,mu,epsilon,delta,b,arl_est,arl_se,wadd_est,wadd_se,trials,seed";

/// For every detector, every epsilon (private detectors only) and every
/// threshold: ARL and WADD estimates. All configurations share the same
/// per-trial streams, so estimates for one (detector, epsilon, b) do not
/// depend on the rest of the ladder. Rows are sorted by (detector, epsilon, b).
inline std::vector<SweepRow> sweep_delay_vs_arl(std::span<const SweepDetector> detectors, const ModelPair& model,
                                                std::span<const double> epsilons, std::span<const double> ladder,
                                                const ExperimentOptions& arl_opt, const ExperimentOptions& wadd_opt) {
  if (detectors.empty()) throw input_error("sweep: detector list is empty");
  std::vector<SweepRow> rows;
  for (const auto& det : detectors) {
    std::vector<std::optional<double>> eps_list;
    if (det.spec.variant == Variant::kCusum) {
      eps_list.push_back(std::nullopt);
    } else if (det.spec.epsilon) {
      eps_list.push_back(det.spec.epsilon);
    } else {
      if (epsilons.empty()) throw config_error("sweep: private detector without epsilon");
      for (double e : epsilons) eps_list.push_back(e);
    }
    const std::span<const double> bs = det.thresholds.empty() ? ladder : std::span<const double>(det.thresholds);
    if (bs.empty()) throw input_error("sweep: threshold ladder is empty");
    for (const auto& eps : eps_list) {
      DetectorSpec spec = det.spec;
      spec.epsilon = eps;
      for (double b : bs) {
        const DetectorConfig cfg = resolve_config(spec, model, b);
        const auto arl = estimate_arl(cfg, model, arl_opt);
        const auto wadd = estimate_wadd(cfg, model, wadd_opt);
        SweepRow row;
        row.detector = std::string(to_string(cfg.variant));
        row.model = model;
        row.epsilon = eps;
        if (cfg.delta > 0.0) row.delta = cfg.delta;
        row.b = b;
        row.arl_est = arl.estimate;
        row.arl_se = arl.std_error;
        row.wadd_est = wadd.estimate;
        row.wadd_se = wadd.std_error;
        row.trials = arl_opt.trials;
        row.seed = arl_opt.seed;
        row.arl_censored_fraction = arl.censored_fraction;
        row.wadd_censored_fraction = wadd.censored_fraction;
        rows.push_back(std::move(row));
      }
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    const double ea = a.epsilon.value_or(-1.0);
    const double eb = b.epsilon.value_or(-1.0);
    return std::tie(a.detector, ea, a.b) < std::tie(b.detector, eb, b.b);
  });
  return rows;
}

namespace detail {

inline std::string fmt_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt_opt(const std::optional<double>& v) { return v ? fmt_num(*v) : std::string(); }

}  // namespace detail

inline void write_sweep_csv(std::ostream& os, std::span<const SweepRow> rows) {
  os << kSweepCsvHeader << '\n';
  for (const auto& r : rows) {
    const bool bern = r.model.kind() == ModelKind::kBernoulliShift;
    os << r.detector << ',' << to_string(r.model.kind()) << ',' << (bern ? std::string() : detail::fmt_num(r.model.mu()))
       << ',' << detail::fmt_opt(r.epsilon) << ',' << detail::fmt_opt(r.delta) << ',' << detail::fmt_num(r.b) << ','
       << detail::fmt_num(r.arl_est) << ',' << detail::fmt_num(r.arl_se) << ',' << detail::fmt_num(r.wadd_est) << ','
       << detail::fmt_num(r.wadd_se) << ',' << r.trials << ',' << r.seed << '\n';
  }
}

/// One (ARL, WADD) curve, ordered by ARL.
struct DelayCurve {
  std::vector<double> arl;
  std::vector<double> wadd;
};

inline DelayCurve curve_for(std::span<const SweepRow> rows, std::string_view detector,
                            std::optional<double> epsilon) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : rows) {
    if (r.detector != detector) continue;
    if (epsilon.has_value() != r.epsilon.has_value()) continue;
    if (epsilon && std::fabs(*epsilon - *r.epsilon) > 1e-12) continue;
    pts.emplace_back(r.arl_est, r.wadd_est);
  }
  std::sort(pts.begin(), pts.end());
  DelayCurve c;
  for (auto [a, w] : pts) {
    c.arl.push_back(a);
    c.wadd.push_back(w);
  }
  return c;
}

/// Linear interpolation of WADD against log ARL. Empty when target ARL lies
/// outside the curve's range.
inline std::optional<double> wadd_at_arl(const DelayCurve& curve, double target_arl) {
  const auto& a = curve.arl;
  if (a.size() < 2 || !(target_arl >= a.front()) || !(target_arl <= a.back())) {
    if (a.size() == 1 && target_arl == a.front()) return curve.wadd.front();
    return std::nullopt;
  }
  auto it = std::lower_bound(a.begin(), a.end(), target_arl);
  std::size_t hi = static_cast<std::size_t>(it - a.begin());
  if (hi == 0) return curve.wadd.front();
  const std::size_t lo = hi - 1;
  const double x0 = std::log(a[lo]);
  const double x1 = std::log(a[hi]);
  if (x1 == x0) return curve.wadd[hi];
  const double f = (std::log(target_arl) - x0) / (x1 - x0);
  return curve.wadd[lo] + f * (curve.wadd[hi] - curve.wadd[lo]);
}

// ---------------------------------------------------------------------------
// Privacy audit

struct AuditEntry {
  std::uint64_t t = 0;  // horizon + 1 denotes "no stop by the horizon"
  bool no_stop = false;
  double p_x = 0.0;
  double p_xprime = 0.0;
  double ratio_upper = 0.0;  // upper confidence bound of max(p_x/p_x', p_x'/p_x)
  bool reliable = false;     // both probabilities at least 10 / noise_draws
};

struct AuditReport {
  std::uint64_t horizon = 0;
  double epsilon = 0.0;
  double b = 0.0;
  std::uint64_t noise_draws = 0;
  std::uint64_t seed = 0;
  double confidence = 0.0;
  double slack = 0.0;
  std::vector<AuditEntry> entries;
  double max_upper_bound = 0.0;  // over reliable entries
  bool pass = false;
};

struct AuditOptions {
  double slack = 1.1;
  double confidence = 0.99;  // per-proportion two-sided Clopper-Pearson level
  unsigned jobs = 1;
};

namespace detail {

inline double cp_lower(std::uint64_t k, std::uint64_t n, double alpha) {
  if (k == 0) return 0.0;
  return boost::math::ibeta_inv(static_cast<double>(k), static_cast<double>(n - k + 1), alpha / 2.0);
}

inline double cp_upper(std::uint64_t k, std::uint64_t n, double alpha) {
  if (k == n) return 1.0;
  return boost::math::ibeta_inv(static_cast<double>(k + 1), static_cast<double>(n - k), 1.0 - alpha / 2.0);
}

}  // namespace detail

/// Empirical check of the stopping-time likelihood ratio between a fixed
/// binary stream and its neighbor (one bit flipped at neighbor_index). Both
/// streams see the same (Z, W) realization per draw.
inline AuditReport privacy_audit(const ModelPair& model, std::span<const int> stream, std::optional<std::size_t> neighbor_index,
                                 double epsilon, double b, std::uint64_t noise_draws, std::uint64_t seed,
                                 const AuditOptions& opt = {}) {
  if (model.kind() != ModelKind::kBernoulliShift) throw input_error("privacy_audit requires a bernoulli_shift model");
  const std::size_t horizon = stream.size();
  if (horizon == 0 || horizon > 12) throw input_error("privacy_audit: stream length must be in [1,12]");
  if (noise_draws == 0) throw input_error("privacy_audit: noise_draws must be >= 1");
  std::vector<double> l_x(horizon);
  std::vector<double> l_xp(horizon);
  for (std::size_t i = 0; i < horizon; ++i) {
    if (stream[i] != 0 && stream[i] != 1) throw input_error("privacy_audit: stream must be binary");
    l_x[i] = llr(model, stream[i]);
    l_xp[i] = l_x[i];
  }
  if (neighbor_index) {
    if (*neighbor_index >= horizon) throw input_error("privacy_audit: neighbor index out of range");
    l_xp[*neighbor_index] = llr(model, 1 - stream[*neighbor_index]);
  }

  DetectorSpec spec{Variant::kDpCusum, epsilon, std::nullopt, std::nullopt};
  const DetectorConfig cfg = resolve_config(spec, model, b);
  const RngStream base = RngStream(seed, 0).child(0xAD);

  // counts[t-1] for stop at t, counts[horizon] for no stop.
  const unsigned jobs = std::max(1u, opt.jobs);
  std::vector<std::vector<std::uint64_t>> cx(jobs, std::vector<std::uint64_t>(horizon + 1));
  std::vector<std::vector<std::uint64_t>> cxp(jobs, std::vector<std::uint64_t>(horizon + 1));
  const auto run = [&](const std::vector<double>& ls, const RngStream& s) {
    auto stat_gen = s.lane(Lane::kStatNoise);
    auto thr_gen = s.lane(Lane::kThresholdNoise);
    Detector det(cfg, model, thr_gen);
    for (std::size_t t = 0; t < horizon; ++t) {
      if (det.step_llr(ls[t], stat_gen) == Decision::kStop) return t;
    }
    return horizon;
  };
  parallel_chunks(noise_draws, jobs, [&](unsigned worker, std::uint64_t begin, std::uint64_t end) {
    for (std::uint64_t d = begin; d < end; ++d) {
      const RngStream s(base.master_seed(), d);
      ++cx[worker][run(l_x, s)];
      ++cxp[worker][run(l_xp, s)];
    }
  }, 4096);

  AuditReport rep;
  rep.horizon = horizon;
  rep.epsilon = epsilon;
  rep.b = b;
  rep.noise_draws = noise_draws;
  rep.seed = seed;
  rep.confidence = opt.confidence;
  rep.slack = opt.slack;
  const double alpha = 1.0 - opt.confidence;
  const double n = static_cast<double>(noise_draws);
  const std::uint64_t min_count = 10;
  for (std::size_t k = 0; k <= horizon; ++k) {
    std::uint64_t kx = 0;
    std::uint64_t kxp = 0;
    for (unsigned w = 0; w < jobs; ++w) {
      kx += cx[w][k];
      kxp += cxp[w][k];
    }
    AuditEntry e;
    e.t = k + 1;
    e.no_stop = k == horizon;
    e.p_x = static_cast<double>(kx) / n;
    e.p_xprime = static_cast<double>(kxp) / n;
    e.reliable = kx >= min_count && kxp >= min_count;
    if (e.reliable) {
      const double up1 = detail::cp_upper(kx, noise_draws, alpha) / detail::cp_lower(kxp, noise_draws, alpha);
      const double up2 = detail::cp_upper(kxp, noise_draws, alpha) / detail::cp_lower(kx, noise_draws, alpha);
      e.ratio_upper = std::max(up1, up2);
      rep.max_upper_bound = std::max(rep.max_upper_bound, e.ratio_upper);
    } else {
      e.ratio_upper = std::numeric_limits<double>::quiet_NaN();
    }
    rep.entries.push_back(e);
  }
  rep.pass = rep.max_upper_bound <= std::exp(epsilon) * opt.slack;
  return rep;
}

// ---------------------------------------------------------------------------
// Pre-change tail and MGF oracles for the plain CUSUM statistic

struct TailCell {
  std::uint64_t t = 0;
  double b = 0.0;
  double frequency = 0.0;
  double bound = 0.0;  // exp(-b)
  double se = 0.0;     // binomial SE at the bound
  bool pass = false;
};

struct MgfCell {
  std::uint64_t t = 0;
  double lambda = 0.0;
  double mean = 0.0;
  double bound = 0.0;  // 1 / (1 - lambda)
  double se = 0.0;
  bool pass = false;
};

struct TailOracleReport {
  std::vector<TailCell> tail;
  std::vector<MgfCell> mgf;
  bool pass = false;
};

/// Monte Carlo check of P_inf(S_t >= b) <= exp(-b) and
/// E_inf[exp(lambda S_t)] <= 1/(1-lambda), each with 3-SE slack.
inline TailOracleReport tail_oracle_suite(const ModelPair& model, std::span<const double> bs,
                                          std::span<const std::uint64_t> ts, std::span<const double> lambdas,
                                          std::uint64_t trials, std::uint64_t seed, unsigned jobs = 1) {
  if (ts.empty() || trials == 0) throw input_error("tail_oracle_suite: empty time list or zero trials");
  for (double l : lambdas) {
    if (!(l > 0.0 && l < 1.0)) throw input_error("tail_oracle_suite: lambda must lie in (0,1)");
  }
  const std::uint64_t t_max = *std::max_element(ts.begin(), ts.end());
  const RngStream base = RngStream(seed, 0).child(0x7A11);

  const std::size_t nt = ts.size();
  const std::size_t nb = bs.size();
  const std::size_t nl = lambdas.size();
  struct Acc {
    std::vector<std::uint64_t> exceed;
    std::vector<double> mgf_sum;
    std::vector<double> mgf_sq;
  };
  jobs = std::max(1u, jobs);
  std::vector<Acc> acc(jobs, Acc{std::vector<std::uint64_t>(nt * nb), std::vector<double>(nt * nl),
                                 std::vector<double>(nt * nl)});
  // Per-chunk partials are stored by chunk index and reduced in order so the
  // floating-point sums do not depend on scheduling.
  const std::uint64_t chunk = 1024;
  const std::uint64_t n_chunks = (trials + chunk - 1) / chunk;
  std::vector<std::vector<double>> chunk_sum(n_chunks, std::vector<double>(nt * nl));
  std::vector<std::vector<double>> chunk_sq(n_chunks, std::vector<double>(nt * nl));

  parallel_chunks(n_chunks, jobs, [&](unsigned worker, std::uint64_t cb, std::uint64_t ce) {
    for (std::uint64_t c = cb; c < ce; ++c) {
      for (std::uint64_t i = c * chunk; i < std::min(trials, (c + 1) * chunk); ++i) {
        auto gen = RngStream(base.master_seed(), i).lane(Lane::kData);
        double s = 0.0;
        for (std::uint64_t t = 1; t <= t_max; ++t) {
          s = std::max(0.0, s) + llr(model, sample(model, Regime::kPre, gen));
          for (std::size_t k = 0; k < nt; ++k) {
            if (ts[k] != t) continue;
            for (std::size_t j = 0; j < nb; ++j) acc[worker].exceed[k * nb + j] += s >= bs[j] ? 1 : 0;
            for (std::size_t j = 0; j < nl; ++j) {
              const double v = std::exp(lambdas[j] * s);
              chunk_sum[c][k * nl + j] += v;
              chunk_sq[c][k * nl + j] += v * v;
            }
          }
        }
      }
    }
  }, 1);

  TailOracleReport rep;
  rep.pass = true;
  const double n = static_cast<double>(trials);
  for (std::size_t k = 0; k < nt; ++k) {
    for (std::size_t j = 0; j < nb; ++j) {
      std::uint64_t count = 0;
      for (const auto& a : acc) count += a.exceed[k * nb + j];
      TailCell cell;
      cell.t = ts[k];
      cell.b = bs[j];
      cell.frequency = static_cast<double>(count) / n;
      cell.bound = std::min(1.0, std::exp(-bs[j]));
      cell.se = std::sqrt(cell.bound * (1.0 - cell.bound) / n);
      cell.pass = cell.frequency <= cell.bound + 3.0 * cell.se;
      rep.pass = rep.pass && cell.pass;
      rep.tail.push_back(cell);
    }
    for (std::size_t j = 0; j < nl; ++j) {
      double sum = 0.0;
      double sq = 0.0;
      for (std::uint64_t c = 0; c < n_chunks; ++c) {
        sum += chunk_sum[c][k * nl + j];
        sq += chunk_sq[c][k * nl + j];
      }
      MgfCell cell;
      cell.t = ts[k];
      cell.lambda = lambdas[j];
      cell.mean = sum / n;
      const double var = n > 1 ? std::max(0.0, (sq - n * cell.mean * cell.mean) / (n - 1.0)) : 0.0;
      cell.se = std::sqrt(var / n);
      cell.bound = 1.0 / (1.0 - lambdas[j]);
      cell.pass = cell.mean <= cell.bound + 3.0 * cell.se;
      rep.pass = rep.pass && cell.pass;
      rep.mgf.push_back(cell);
    }
  }
  return rep;
}

}  // namespace dpcusum
