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

// Command-line front end: calibration, simulation, sweeps, heatmaps, the
// privacy audit and the baseline comparison.
//
// Exit codes: 0 success, 2 validation error, 3 failed check (audit failure or
// censoring above 1%).

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpcusum/dpcusum.hpp"
#include "dpcusum/io.hpp"

namespace {

namespace io = dpcusum::io;
using io::json;

constexpr int kExitValidation = 2;
constexpr int kExitCheckFailed = 3;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  unsigned jobs = dpcusum::default_jobs();
  std::string out;
};

class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string code, const std::string& msg) : std::runtime_error(msg), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

void add_common(CLI::App* app, CommonFlags& f, bool with_config = true) {
  if (with_config) app->add_option("--config", f.config, "JSON config file (or an artifact with an embedded config)");
  app->add_option("--seed", f.seed, "Master seed (falls back to the config, then DPCUSUM_SEED, then 1)");
  app->add_option("--trials", f.trials, "Override the number of Monte Carlo trials");
  app->add_option("--jobs", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out", f.out, "Output path (default: stdout)");
}

std::uint64_t resolve_seed(const CommonFlags& f, std::optional<std::uint64_t> from_config) {
  if (f.seed) return *f.seed;
  if (from_config) return *from_config;
  if (const char* env = std::getenv("DPCUSUM_SEED")) {
    try {
      std::size_t pos = 0;
      const unsigned long long v = std::stoull(env, &pos);
      if (pos == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ValidationError("bad_seed", "DPCUSUM_SEED is not an unsigned 64-bit integer");
  }
  return 1;
}

/// Reads a JSON config, or the `# effective_config=` line of a CSV artifact.
json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("io_error", "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const std::string marker = "# effective_config=";
  if (const auto pos = text.find(marker); pos != std::string::npos) {
    const auto end = text.find('\n', pos);
    return json::parse(text.substr(pos + marker.size(), end - pos - marker.size()));
  }
  json j = json::parse(text);
  // arl/wadd reports carry their config under this key
  if (j.is_object() && j.contains("effective_config")) return j.at("effective_config");
  return j;
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw ValidationError("io_error", "cannot open output '" + path + "'");
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

void emit_json(const std::string& path, const json& j) {
  Output out(path);
  out.stream() << j.dump(2) << '\n';
}

/// CSV artifacts carry two comment lines: a timestamp and the effective config.
void csv_preamble(std::ostream& os, const json& effective) {
  os << "# generated_at=" << timestamp_utc() << '\n';
  os << "# effective_config=" << effective.dump() << '\n';
}

// ---------------------------------------------------------------------------

struct SingleRunFlags {
  std::string kind;
  double mu = 0.0;
  double p0 = 0.0;
  double p1 = 0.0;
  std::string variant = "cusum";
  std::optional<double> epsilon;
  std::optional<double> delta;
  std::optional<std::size_t> window;
  std::optional<double> b;
  std::optional<double> gamma;
  std::optional<std::uint64_t> horizon;
  std::string trace;
};

void add_single_run(CLI::App* app, SingleRunFlags& f) {
  app->add_option("--model", f.kind, "laplace_shift | gaussian_shift | bernoulli_shift");
  app->add_option("--mu", f.mu, "Post-change location (shift models)");
  app->add_option("--p0", f.p0, "Pre-change probability (bernoulli_shift)");
  app->add_option("--p1", f.p1, "Post-change probability (bernoulli_shift)");
  app->add_option("--variant", f.variant, "cusum | dp_cusum | delta_dp_cusum | online_pcpd");
  app->add_option("--epsilon", f.epsilon, "Privacy parameter");
  app->add_option("--delta", f.delta, "Failure probability for the surrogate sensitivity");
  app->add_option("--window", f.window, "online_pcpd window size");
  app->add_option("--b", f.b, "Detection threshold");
  app->add_option("--gamma", f.gamma, "Target ARL; calibrates b when --b is absent");
  app->add_option("--horizon", f.horizon, "Censoring horizon");
  app->add_option("--trace", f.trace, "Write the (t, s, s_tilde) trajectory of trial 0 as CSV");
}

int run_single(dpcusum::Metric metric, const CommonFlags& common, const SingleRunFlags& f) {
  using namespace dpcusum;
  json cfg_json;
  if (!common.config.empty()) {
    cfg_json = load_config(common.config);
  } else {
    if (f.kind.empty()) throw ValidationError("missing_model", "give --config or --model");
    json m{{"kind", f.kind}};
    if (f.kind == "bernoulli_shift") {
      m["p0"] = f.p0;
      m["p1"] = f.p1;
    } else {
      m["mu"] = f.mu;
    }
    json d{{"variant", f.variant}};
    if (f.epsilon) d["epsilon"] = *f.epsilon;
    if (f.delta) d["delta"] = *f.delta;
    if (f.window) d["window"] = *f.window;
    cfg_json = json{{"model", m}, {"detectors", json::array({d})}};
    if (f.b) cfg_json["thresholds"] = json::array({*f.b});
    if (f.gamma) cfg_json["gamma"] = *f.gamma;
    if (f.horizon) cfg_json["horizon"] = *f.horizon;
  }
  // A missing threshold is calibrated from gamma, so validate after filling it in.
  const ModelPair model = io::model_from_json(cfg_json.at("model"));
  const auto detectors = io::detectors_from_json(cfg_json.at("detectors"));
  if (detectors.size() != 1) throw ValidationError("bad_config", "arl/wadd expect exactly one detector");
  DetectorSpec spec = detectors.front().spec;
  if (!cfg_json.contains("thresholds") || cfg_json["thresholds"].empty()) {
    if (!cfg_json.contains("gamma")) throw ValidationError("missing_threshold", "give --b or --gamma");
    const double gamma = cfg_json["gamma"].get<double>();
    double b = 0.0;
    if (spec.variant == Variant::kCusum) {
      b = std::log(gamma);
    } else {
      const DetectorConfig probe = resolve_config(spec, model, 0.0);
      b = solve_threshold(gamma, probe.epsilon, probe.sensitivity_used).b;
    }
    cfg_json["thresholds"] = json::array({b});
  }
  if (!cfg_json.contains("horizon")) {
    cfg_json["horizon"] = metric == Metric::kArl && cfg_json.contains("gamma")
                              ? arl_horizon_for(cfg_json["gamma"].get<double>())
                              : kDefaultHorizon;
  }
  io::ExperimentConfig cfg = io::experiment_config_from_json(cfg_json);
  if (common.trials) cfg.trials = *common.trials;
  cfg.seed = resolve_seed(common, cfg.seed);
  if (cfg.thresholds.size() != 1) throw ValidationError("bad_config", "arl/wadd expect exactly one threshold");

  const DetectorConfig dcfg = resolve_config(spec, model, cfg.thresholds.front());
  const ExperimentOptions opt{cfg.trials, cfg.horizon, *cfg.seed, common.jobs};
  const ExperimentReport rep = metric == Metric::kArl ? estimate_arl(dcfg, model, opt) : estimate_wadd(dcfg, model, opt);

  if (!f.trace.empty()) {
    const auto outcome = run_to_stop(dcfg, model, metric == Metric::kArl ? kNoChange : 0, cfg.horizon,
                                     trial_stream(metric, *cfg.seed, 0), true);
    Output tr(f.trace);
    tr.stream() << "t,s,s_tilde\n";
    for (const auto& p : outcome.trajectory) tr.stream() << p.t << ',' << p.s << ',' << p.s_tilde << '\n';
  }

  json j = io::report_to_json(rep);
  j["effective_config"] = io::experiment_config_to_json(cfg);
  emit_json(common.out, j);
  if (rep.censoring_exceeded()) {
    std::cerr << json{{"error", "censoring_exceeded"}, {"censored_fraction", rep.censored_fraction}}.dump() << '\n';
    return kExitCheckFailed;
  }
  return 0;
}

io::ExperimentConfig load_experiment(const CommonFlags& common) {
  if (common.config.empty()) throw ValidationError("missing_config", "--config is required");
  io::ExperimentConfig cfg = io::experiment_config_from_json(load_config(common.config));
  if (common.trials) cfg.trials = *common.trials;
  cfg.seed = resolve_seed(common, cfg.seed);
  return cfg;
}

std::vector<dpcusum::SweepRow> run_sweep(const io::ExperimentConfig& cfg, unsigned jobs) {
  using namespace dpcusum;
  const ExperimentOptions opt{cfg.trials, cfg.horizon, *cfg.seed, jobs};
  return sweep_delay_vs_arl(cfg.detectors, cfg.model, cfg.epsilons, cfg.thresholds, opt, opt);
}

int censoring_status(const std::vector<dpcusum::SweepRow>& rows) {
  for (const auto& r : rows) {
    if (r.arl_censored_fraction > dpcusum::kMaxCensoredFraction) {
      std::cerr << json{{"error", "censoring_exceeded"},
                        {"detector", r.detector},
                        {"b", r.b},
                        {"censored_fraction", r.arl_censored_fraction}}
                       .dump()
                << '\n';
      return kExitCheckFailed;
    }
  }
  return 0;
}

int cmd_sweep(const CommonFlags& common) {
  const auto cfg = load_experiment(common);
  const auto rows = run_sweep(cfg, common.jobs);
  Output out(common.out);
  csv_preamble(out.stream(), dpcusum::io::experiment_config_to_json(cfg));
  dpcusum::write_sweep_csv(out.stream(), rows);
  return censoring_status(rows);
}

/// Matched-ARL table: WADD of every curve interpolated onto a shared log-spaced
/// ARL grid inside the range all curves cover.
int cmd_compare(const CommonFlags& common, std::size_t grid_points) {
  using namespace dpcusum;
  const auto cfg = load_experiment(common);
  const auto rows = run_sweep(cfg, common.jobs);

  std::vector<std::pair<std::string, std::optional<double>>> keys;
  for (const auto& r : rows) {
    const std::pair<std::string, std::optional<double>> key{r.detector, r.epsilon};
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(key);
  }
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  std::vector<DelayCurve> curves;
  for (const auto& [det, eps] : keys) {
    curves.push_back(curve_for(rows, det, eps));
    lo = std::max(lo, curves.back().arl.front());
    hi = std::min(hi, curves.back().arl.back());
  }
  Output out(common.out);
  csv_preamble(out.stream(), io::experiment_config_to_json(cfg));
  out.stream() << "arl,detector,epsilon,wadd\n";
  if (!(lo < hi) || grid_points < 2) {
    std::cerr << json{{"error", "no_common_arl_range"}}.dump() << '\n';
    return kExitCheckFailed;
  }
  for (std::size_t g = 0; g < grid_points; ++g) {
    const double arl = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(g) /
                                                   static_cast<double>(grid_points - 1));
    for (std::size_t k = 0; k < keys.size(); ++k) {
      const auto w = wadd_at_arl(curves[k], arl);
      out.stream() << dpcusum::detail::fmt_num(arl) << ',' << keys[k].first << ','
                   << (keys[k].second ? dpcusum::detail::fmt_num(*keys[k].second) : std::string()) << ','
                   << dpcusum::detail::fmt_num(w.value_or(NAN)) << '\n';
    }
  }
  return censoring_status(rows);
}

int cmd_calibrate(const CommonFlags& common, std::optional<double> gamma, std::optional<double> epsilon,
                  std::optional<double> sens) {
  if (!gamma || !epsilon || !sens) throw ValidationError("missing_flag", "calibrate needs --gamma, --epsilon, --delta-sens");
  const auto res = dpcusum::solve_threshold(*gamma, *epsilon, *sens);
  json j = dpcusum::io::calibration_to_json(res);
  j["epsilon"] = *epsilon;
  j["sensitivity"] = *sens;
  emit_json(common.out, j);
  return 0;
}

int cmd_heatmap(const CommonFlags& common, std::vector<double> mus, std::size_t grid) {
  if (!common.config.empty()) {
    const json c = load_config(common.config);
    if (c.contains("mu")) mus = c["mu"].is_array() ? c["mu"].get<std::vector<double>>() : std::vector<double>{c["mu"].get<double>()};
    if (c.contains("grid")) grid = c["grid"].get<std::size_t>();
  }
  if (mus.empty()) throw ValidationError("missing_flag", "heatmap needs --mu");
  if (grid == 0) throw ValidationError("bad_flag", "--grid must be positive");
  const auto eps = dpcusum::open_grid(0.0, 3.0, grid);
  const auto deltas = dpcusum::open_grid(0.0, 1.0, grid);
  std::vector<dpcusum::HeatmapCell> cells;
  for (double mu : mus) {
    auto hm = dpcusum::heatmap_grid(mu, eps, deltas);
    cells.insert(cells.end(), hm.cells.begin(), hm.cells.end());
  }
  Output out(common.out);
  csv_preamble(out.stream(), json{{"mu", mus}, {"grid", grid}});
  dpcusum::io::write_heatmap_csv(out.stream(), cells);
  return 0;
}

struct AuditFlags {
  double p0 = 0.3;
  double p1 = 0.6;
  std::string stream = "01101001";
  std::optional<std::size_t> neighbor = 0;
  bool identical = false;
  double epsilon = 1.0;
  double b = 0.0;
  std::uint64_t draws = 1000000;
};

int cmd_audit(const CommonFlags& common, const AuditFlags& f) {
  std::vector<int> bits;
  for (char c : f.stream) {
    if (c != '0' && c != '1') throw ValidationError("bad_flag", "--stream must be a string of 0/1");
    bits.push_back(c - '0');
  }
  const auto model = dpcusum::ModelPair::bernoulli_shift(f.p0, f.p1);
  dpcusum::AuditOptions opt;
  opt.jobs = common.jobs;
  const std::uint64_t draws = common.trials.value_or(f.draws);
  const auto rep = dpcusum::privacy_audit(model, bits, f.identical ? std::nullopt : f.neighbor, f.epsilon, f.b, draws,
                                          resolve_seed(common, std::nullopt), opt);
  json j = dpcusum::io::audit_to_json(rep);
  j["model"] = dpcusum::io::model_to_json(model);
  j["stream"] = f.stream;
  if (!f.identical) j["neighbor_index"] = *f.neighbor;
  emit_json(common.out, j);
  if (!rep.pass) {
    std::cerr << json{{"error", "audit_failed"}, {"max_upper_bound", rep.max_upper_bound}}.dump() << '\n';
    return kExitCheckFailed;
  }
  return 0;
}

void report_error(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Private CUSUM change detection: calibration, simulation and auditing"};
  app.require_subcommand(1);

  CommonFlags calibrate_flags;
  std::optional<double> cal_gamma, cal_eps, cal_sens;
  auto* calibrate = app.add_subcommand("calibrate", "Solve the threshold b for a target ARL lower bound");
  add_common(calibrate, calibrate_flags, false);
  calibrate->add_option("--gamma", cal_gamma, "Target ARL")->required();
  calibrate->add_option("--epsilon", cal_eps, "Privacy parameter")->required();
  calibrate->add_option("--delta-sens", cal_sens, "Sensitivity (Delta or A_delta)")->required();

  CommonFlags arl_flags, wadd_flags;
  SingleRunFlags arl_run, wadd_run;
  auto* arl = app.add_subcommand("arl", "Estimate the false-alarm average run length");
  add_common(arl, arl_flags);
  add_single_run(arl, arl_run);
  auto* wadd = app.add_subcommand("wadd", "Estimate the worst-case average detection delay");
  add_common(wadd, wadd_flags);
  add_single_run(wadd, wadd_run);

  CommonFlags sweep_flags;
  auto* sweep = app.add_subcommand("sweep", "Delay-vs-ARL sweep over detectors, epsilons and thresholds (CSV)");
  add_common(sweep, sweep_flags);

  CommonFlags compare_flags;
  std::size_t compare_grid = 8;
  auto* compare = app.add_subcommand("compare", "Matched-ARL delay comparison across detectors (CSV)");
  add_common(compare, compare_flags);
  compare->add_option("--grid", compare_grid, "Number of ARL grid points");

  CommonFlags heatmap_flags;
  std::vector<double> heat_mu;
  std::size_t heat_grid = 60;
  auto* heatmap = app.add_subcommand("heatmap", "Effective privacy factor grid for a Gaussian shift (CSV)");
  add_common(heatmap, heatmap_flags);
  heatmap->add_option("--mu", heat_mu, "Post-change mean(s)");
  heatmap->add_option("--grid", heat_grid, "Points per axis");

  CommonFlags audit_flags;
  AuditFlags audit_opts;
  auto* audit = app.add_subcommand("audit", "Empirical stopping-time privacy audit on a binary stream");
  add_common(audit, audit_flags, false);
  audit->add_option("--p0", audit_opts.p0, "Pre-change probability");
  audit->add_option("--p1", audit_opts.p1, "Post-change probability");
  audit->add_option("--stream", audit_opts.stream, "Binary stream, at most 12 symbols");
  audit->add_option("--neighbor", audit_opts.neighbor, "Index of the flipped entry");
  audit->add_flag("--identical", audit_opts.identical, "Compare the stream with itself");
  audit->add_option("--epsilon", audit_opts.epsilon, "Privacy parameter");
  audit->add_option("--b", audit_opts.b, "Detection threshold");
  audit->add_option("--draws", audit_opts.draws, "Noise realizations");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("usage", e.what());
    return kExitValidation;
  }

  try {
    if (*calibrate) return cmd_calibrate(calibrate_flags, cal_gamma, cal_eps, cal_sens);
    if (*arl) return run_single(dpcusum::Metric::kArl, arl_flags, arl_run);
    if (*wadd) return run_single(dpcusum::Metric::kWadd, wadd_flags, wadd_run);
    if (*sweep) return cmd_sweep(sweep_flags);
    if (*compare) return cmd_compare(compare_flags, compare_grid);
    if (*heatmap) return cmd_heatmap(heatmap_flags, heat_mu, heat_grid);
    if (*audit) return cmd_audit(audit_flags, audit_opts);
  } catch (const ValidationError& e) {
    report_error(e.code(), e.what());
    return kExitValidation;
  } catch (const dpcusum::config_error& e) {
    report_error("config_error", e.what());
    return kExitValidation;
  } catch (const dpcusum::input_error& e) {
    report_error("input_error", e.what());
    return kExitValidation;
  } catch (const json::exception& e) {
    report_error("bad_json", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    report_error("internal", e.what());
    return 1;
  }
  return 0;
}
