// Copyright 2026 The wtxai Authors
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


// Command-line driver for the experiments.
//
//   wtxai_cli <benchmark|ablation|case1|case2|explain|synth> [--config FILE]
//             [--seed N] [--out DIR] [--data synthetic|PATH.csv] [--turbine ID]
//             [--workers N]
//
// Exit status: 0 on completion, 2 on configuration errors, 3 on input/output
// errors. Model quality never affects the exit status.

#include <wtxai/experiments.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

using wtxai::experiments::ExperimentConfig;
using wtxai::experiments::ResultSet;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string data;
  std::string turbine;
  std::optional<int> workers;
};

nlohmann::json read_config_json(const std::string& path) {
  if (path.empty()) return nlohmann::json::object();
  std::ifstream in(path);
  if (!in) throw wtxai::ConfigError("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw wtxai::ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
}

ExperimentConfig resolve(const std::string& experiment, const Options& o) {
  auto j = read_config_json(o.config);
  if (!j.is_object()) throw wtxai::ConfigError("config root must be an object");
  j["experiment"] = experiment;
  if (o.seed) j["seed"] = *o.seed;
  if (!o.out.empty()) j["output_dir"] = o.out;
  if (o.workers) j["workers"] = *o.workers;
  if (!o.data.empty()) {
    if (!j.contains("data")) j["data"] = nlohmann::json::object();
    if (o.data == "synthetic") {
      j["data"]["source"] = "synthetic";
    } else {
      j["data"]["source"] = "csv";
      j["data"]["csv"] = o.data;
    }
  }
  if (!o.turbine.empty()) {
    if (!j.contains("data")) j["data"] = nlohmann::json::object();
    j["data"]["turbine"] = o.turbine;
  }
  return ExperimentConfig::from_json(j);
}

void report(const ResultSet& r, const ExperimentConfig& cfg) {
  std::cout << "config hash " << r.hash() << '\n';
  for (const auto& n : r.names()) std::cout << "wrote " << (std::filesystem::path(cfg.output_dir) / r.file_name(n)).string() << '\n';
}

std::string num(double v) { return wtxai::experiments::fmt(v); }

int run(const std::string& experiment, const Options& o) {
  namespace ex = wtxai::experiments;
  const auto cfg = resolve(experiment, o);
  const auto t0 = std::chrono::steady_clock::now();
  if (experiment == "benchmark") {
    const auto rep = ex::run_benchmark(cfg);
    rep.results.commit(cfg.output_dir);
    for (const auto& [kind, s] : rep.rmse_test) {
      std::cout << kind << ": RMSE " << num(s.mean) << " +/- " << num(s.std) << " kW, r2_phys "
                << num(rep.r2_phys.at(kind).mean) << " (" << s.n << " runs)\n";
    }
    report(rep.results, cfg);
  } else if (experiment == "ablation") {
    const auto rep = ex::run_period_ablation(cfg);
    rep.results.commit(cfg.output_dir);
    std::cout << "short-period survivors " << rep.survivors_short << ", Spearman(r2_phys, test RMSE) "
              << num(rep.spearman_short) << '\n';
    report(rep.results, cfg);
  } else if (experiment == "case1") {
    const auto rep = ex::run_case_study_regularization(cfg);
    rep.results.commit(cfg.output_dir);
    for (const auto& p : rep.points) {
      std::cout << p.sweep << ' ' << num(p.setting) << ": r2_phys " << num(p.r2_phys.mean) << ", RMSE "
                << num(p.rmse_test.mean) << (p.skipped ? " (skipped: " + p.message + ")" : std::string{}) << '\n';
    }
    report(rep.results, cfg);
  } else if (experiment == "case2") {
    const auto rep = ex::run_case_study_yaw(cfg);
    rep.results.commit(cfg.output_dir);
    for (const auto& r : rep.results_by_reference) {
      std::cout << wtxai::xai::to_string(r.reference) << ": mean |R_yaw - dP_true| " << num(r.mean_abs_error)
                << " kW\n";
    }
    report(rep.results, cfg);
  } else if (experiment == "explain") {
    const auto rep = ex::run_explain(cfg);
    rep.results.commit(cfg.output_dir);
    std::cout << "explained " << rep.explanations.size() << " records\n";
    report(rep.results, cfg);
  } else {
    const auto rep = ex::run_synth(cfg);
    rep.results.commit(cfg.output_dir);
    std::cout << "generated " << rep.records.size() << " records\n";
    report(rep.results, cfg);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::fprintf(stderr, "%s finished in %.1f s\n", experiment.c_str(), secs);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wind turbine power-curve models with physics-based strategy validation"};
  app.require_subcommand(1);
  Options o;
  std::string chosen;
  for (const auto& name : wtxai::experiments::experiment_kinds()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", o.config, "JSON experiment config");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--data", o.data, "'synthetic' or a SCADA CSV path");
    sub->add_option("--turbine", o.turbine, "turbine id filter for CSV data");
    sub->add_option("--workers", o.workers, "parallel workers (0 = all cores)");
    sub->callback([&chosen, name] { chosen = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    return run(chosen, o);
  } catch (const wtxai::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const wtxai::SchemaError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "input/output error: %s\n", e.what());
    return 3;
  }
}
