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

// Experiment orchestration: configuration, dataset preparation, the model
// benchmark, the training-period ablation, the two case studies and single
// record explanations. Every run is a pure function of (config, seed); the
// result files carry the config hash.

#pragma once

#include <wtxai/models.hpp>
#include <wtxai/strategy.hpp>

#include <filesystem>
#include <set>
#include <sstream>

namespace wtxai::experiments {

using scada::ScadaRecord;

// ---------------------------------------------------------------------------
// Configuration

struct DataConfig {
  std::string source = "synthetic";  // "synthetic" or "csv"
  std::string csv_path;
  nlohmann::json schema = nlohmann::json::object();
  std::string turbine;
  scada::SyntheticConfig synthetic;
  std::size_t records = 2 * 52560;  // two years of 10-minute samples
  double truth_speed_scale = 1.0;   // synthetic truth curve stretched in wind speed
  nlohmann::json truth_curve;       // optional explicit truth curve
  bool ti_correction = false;
  scada::TiReference ti_reference;
};

struct SplitConfig {
  std::optional<scada::TimeRange> train;
  std::optional<scada::TimeRange> test;
  double validation_fraction = 0.2;
  double subsample = 1.0;  // share of training-range records kept, drawn uniformly
};

struct ModelGrid {
  std::vector<models::ModelKind> kinds = {models::ModelKind::phys_base, models::ModelKind::plr,
                                          models::ModelKind::ppr,       models::ModelKind::rf,
                                          models::ModelKind::ann_small, models::ModelKind::ann_large};
  int seeds = 10;
  nlohmann::json overrides = nlohmann::json::object();  // kind name -> hyperparameter overrides
  bool save = false;

  nlohmann::json overrides_for(models::ModelKind k) const {
    const auto name = models::to_string(k);
    return overrides.contains(name) ? overrides.at(name) : nlohmann::json::object();
  }
};

struct StrategySettings {
  xai::ReferenceKind reference = xai::ReferenceKind::zeros;
  std::size_t probe_size = 2000;
  std::vector<double> weights = strategy::default_weights();
  bool squared = false;
};

struct AblationSettings {
  std::vector<double> periods_months = {0.5, 1, 2, 3, 6, 9, 12};
  int offsets = 12;
  std::vector<models::ModelKind> kinds = {models::ModelKind::plr, models::ModelKind::ppr, models::ModelKind::rf,
                                          models::ModelKind::ann_small, models::ModelKind::ann_large};
  double short_period_months = 3.0;
  double month_days = 0.0;  // 0 selects a twelfth of the training range
};

struct Case1Settings {
  std::vector<double> l2_grid = {0.05, 0.1, 0.2, 0.5, 1.0};
  std::vector<double> thresholds_kw = {100, 50, 25, 10};
  bool hybrid = true;
  int seeds = 10;
  std::size_t min_rows = 500;
};

struct Case2Settings {
  models::ModelKind kind = models::ModelKind::ann_small;
  double yaw_max_deg = 15.0;
  std::vector<xai::ReferenceKind> references = {xai::ReferenceKind::zeros, xai::ReferenceKind::train_mean,
                                                xai::ReferenceKind::informed_conditional};
  double bin_kw = 25.0;
  double reference_bin_width = 0.5;
  std::size_t probe_size = 5000;
};

struct ExplainSettings {
  models::ModelKind kind = models::ModelKind::ann_small;
  bool yaw = true;
  double yaw_max_deg = 15.0;
  std::string model_path;  // load instead of training when set
  std::vector<std::size_t> rows;  // test-set indices; empty selects `count` probe rows
  std::size_t count = 10;
  xai::ReferenceKind reference = xai::ReferenceKind::informed_conditional;
  double profile_bin_width = 0.5;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k = {"benchmark", "ablation", "case1", "case2", "explain", "synth"};
  return k;
}

namespace detail {

inline scada::TimeRange range_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("time range must be [begin, end]");
  const auto b = scada::parse_timestamp(j.at(0).get<std::string>());
  const auto e = scada::parse_timestamp(j.at(1).get<std::string>());
  if (!b || !e) throw ConfigError("unparseable time range timestamp");
  return {*b, *e};
}

inline nlohmann::json range_to_json(const std::optional<scada::TimeRange>& r) {
  if (!r) return nullptr;
  return {scada::format_timestamp(r->begin), scada::format_timestamp(r->end)};
}

inline std::vector<models::ModelKind> kinds_from_json(const nlohmann::json& j) {
  std::vector<models::ModelKind> out;
  for (const auto& k : j) out.push_back(models::model_kind_from_string(k.get<std::string>()));
  if (out.empty()) throw ConfigError("model grid must not be empty");
  return out;
}

inline nlohmann::json kinds_to_json(const std::vector<models::ModelKind>& kinds) {
  nlohmann::json j = nlohmann::json::array();
  for (auto k : kinds) j.push_back(models::to_string(k));
  return j;
}

inline void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace detail

struct ExperimentConfig {
  std::string experiment = "benchmark";
  std::uint64_t seed = 42;
  std::string output_dir = "out";
  int workers = 0;  // 0 selects the hardware concurrency
  DataConfig data;
  nlohmann::json physics = nlohmann::json::object();
  SplitConfig split;
  ModelGrid models;
  StrategySettings strategy;
  AblationSettings ablation;
  Case1Settings case1;
  Case2Settings case2;
  ExplainSettings explain;

  static ExperimentConfig from_json(const nlohmann::json& j) {
    using detail::reject_unknown;
    reject_unknown(j, {"experiment", "seed", "output_dir", "workers", "data", "physics", "split", "models",
                       "strategy", "ablation", "case1", "case2", "explain"},
                   "config");
    ExperimentConfig c;
    try {
      c.experiment = j.value("experiment", c.experiment);
      c.seed = j.value("seed", c.seed);
      c.output_dir = j.value("output_dir", c.output_dir);
      c.workers = j.value("workers", c.workers);
      if (j.contains("data")) {
        const auto& d = j.at("data");
        reject_unknown(d, {"source", "csv", "schema", "turbine", "synthetic", "records", "truth", "ti_correction"},
                       "data");
        c.data.source = d.value("source", c.data.source);
        c.data.csv_path = d.value("csv", c.data.csv_path);
        if (d.contains("schema")) c.data.schema = d.at("schema");
        c.data.turbine = d.value("turbine", c.data.turbine);
        if (d.contains("synthetic")) c.data.synthetic = scada::SyntheticConfig::from_json(d.at("synthetic"));
        c.data.records = d.value("records", c.data.records);
        if (d.contains("truth")) {
          const auto& t = d.at("truth");
          reject_unknown(t, {"speed_scale", "curve"}, "data.truth");
          c.data.truth_speed_scale = t.value("speed_scale", c.data.truth_speed_scale);
          if (t.contains("curve")) c.data.truth_curve = t.at("curve");
        }
        if (d.contains("ti_correction") && !d.at("ti_correction").is_null()) {
          const auto& t = d.at("ti_correction");
          c.data.ti_correction = true;
          c.data.ti_reference.mean = t.at("mean").get<double>();
          c.data.ti_reference.std = t.at("std").get<double>();
          c.data.ti_reference.prune_quantile = t.value("prune_quantile", 0.99);
        }
      }
      if (j.contains("physics")) {
        reject_unknown(j.at("physics"), {"curve", "curve_csv", "mean_density", "quadrature_points", "sigma_span"},
                       "physics");
        c.physics = j.at("physics");
      }
      if (j.contains("split")) {
        const auto& s = j.at("split");
        reject_unknown(s, {"train", "test", "validation_fraction", "subsample"}, "split");
        if (s.contains("train") && !s.at("train").is_null()) c.split.train = detail::range_from_json(s.at("train"));
        if (s.contains("test") && !s.at("test").is_null()) c.split.test = detail::range_from_json(s.at("test"));
        c.split.validation_fraction = s.value("validation_fraction", c.split.validation_fraction);
        c.split.subsample = s.value("subsample", c.split.subsample);
      }
      if (j.contains("models")) {
        const auto& m = j.at("models");
        reject_unknown(m, {"kinds", "seeds", "overrides", "save"}, "models");
        if (m.contains("kinds")) c.models.kinds = detail::kinds_from_json(m.at("kinds"));
        c.models.seeds = m.value("seeds", c.models.seeds);
        if (m.contains("overrides")) c.models.overrides = m.at("overrides");
        c.models.save = m.value("save", c.models.save);
      }
      if (j.contains("strategy")) {
        const auto& s = j.at("strategy");
        reject_unknown(s, {"reference", "probe_size", "weights", "squared"}, "strategy");
        if (s.contains("reference")) {
          c.strategy.reference = xai::reference_kind_from_string(s.at("reference").get<std::string>());
        }
        c.strategy.probe_size = s.value("probe_size", c.strategy.probe_size);
        if (s.contains("weights")) c.strategy.weights = s.at("weights").get<std::vector<double>>();
        c.strategy.squared = s.value("squared", c.strategy.squared);
      }
      if (j.contains("ablation")) {
        const auto& a = j.at("ablation");
        reject_unknown(a, {"periods_months", "offsets", "kinds", "short_period_months", "month_days"}, "ablation");
        if (a.contains("periods_months")) c.ablation.periods_months = a.at("periods_months").get<std::vector<double>>();
        c.ablation.offsets = a.value("offsets", c.ablation.offsets);
        if (a.contains("kinds")) c.ablation.kinds = detail::kinds_from_json(a.at("kinds"));
        c.ablation.short_period_months = a.value("short_period_months", c.ablation.short_period_months);
        c.ablation.month_days = a.value("month_days", c.ablation.month_days);
      }
      if (j.contains("case1")) {
        const auto& a = j.at("case1");
        reject_unknown(a, {"l2_grid", "thresholds_kw", "hybrid", "seeds", "min_rows"}, "case1");
        if (a.contains("l2_grid")) c.case1.l2_grid = a.at("l2_grid").get<std::vector<double>>();
        if (a.contains("thresholds_kw")) c.case1.thresholds_kw = a.at("thresholds_kw").get<std::vector<double>>();
        c.case1.hybrid = a.value("hybrid", c.case1.hybrid);
        c.case1.seeds = a.value("seeds", c.case1.seeds);
        c.case1.min_rows = a.value("min_rows", c.case1.min_rows);
      }
      if (j.contains("case2")) {
        const auto& a = j.at("case2");
        reject_unknown(a, {"kind", "yaw_max_deg", "references", "bin_kw", "reference_bin_width", "probe_size"},
                       "case2");
        if (a.contains("kind")) c.case2.kind = models::model_kind_from_string(a.at("kind").get<std::string>());
        c.case2.yaw_max_deg = a.value("yaw_max_deg", c.case2.yaw_max_deg);
        if (a.contains("references")) {
          c.case2.references.clear();
          for (const auto& r : a.at("references")) {
            c.case2.references.push_back(xai::reference_kind_from_string(r.get<std::string>()));
          }
        }
        c.case2.bin_kw = a.value("bin_kw", c.case2.bin_kw);
        c.case2.reference_bin_width = a.value("reference_bin_width", c.case2.reference_bin_width);
        c.case2.probe_size = a.value("probe_size", c.case2.probe_size);
      }
      if (j.contains("explain")) {
        const auto& a = j.at("explain");
        reject_unknown(a, {"kind", "yaw", "yaw_max_deg", "model", "rows", "count", "reference", "profile_bin_width"},
                       "explain");
        if (a.contains("kind")) c.explain.kind = models::model_kind_from_string(a.at("kind").get<std::string>());
        c.explain.yaw = a.value("yaw", c.explain.yaw);
        c.explain.yaw_max_deg = a.value("yaw_max_deg", c.explain.yaw_max_deg);
        c.explain.model_path = a.value("model", c.explain.model_path);
        if (a.contains("rows")) c.explain.rows = a.at("rows").get<std::vector<std::size_t>>();
        c.explain.count = a.value("count", c.explain.count);
        if (a.contains("reference")) {
          c.explain.reference = xai::reference_kind_from_string(a.at("reference").get<std::string>());
        }
        c.explain.profile_bin_width = a.value("profile_bin_width", c.explain.profile_bin_width);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("malformed config: ") + e.what());
    }
    c.validate();
    return c;
  }

  void validate() const {
    if (std::find(experiment_kinds().begin(), experiment_kinds().end(), experiment) == experiment_kinds().end()) {
      throw ConfigError("unknown experiment '" + experiment + "'");
    }
    if (data.source == "csv") {
      if (data.csv_path.empty()) throw ConfigError("csv data source needs a path");
    } else if (data.source != "synthetic") {
      throw ConfigError("data source must be 'synthetic' or 'csv'");
    }
    data.synthetic.validate();
    if (data.records == 0) throw ConfigError("synthetic record count must be positive");
    if (!(data.truth_speed_scale > 0.5 && data.truth_speed_scale < 1.5)) {
      throw ConfigError("truth speed scale must be in (0.5, 1.5)");
    }
    if (!(split.validation_fraction > 0.0 && split.validation_fraction < 1.0)) {
      throw ConfigError("validation fraction must be in (0, 1)");
    }
    if (!(split.subsample > 0.0 && split.subsample <= 1.0)) throw ConfigError("subsample must be in (0, 1]");
    if (models.seeds < 1 || case1.seeds < 1) throw ConfigError("seed count must be at least 1");
    if (models.kinds.empty() || ablation.kinds.empty()) throw ConfigError("model grid must not be empty");
    strategy::validate_weights(strategy.weights, strategy.weights.size());
    if (strategy.weights.empty() || strategy.weights.size() > 3) {
      throw ConfigError("strategy weights cover 1 to 3 features");
    }
    if (strategy.probe_size < 3) throw ConfigError("probe size must be at least 3");
    if (ablation.offsets < 1) throw ConfigError("ablation needs at least one offset");
    if (ablation.month_days < 0.0) throw ConfigError("month length must be non-negative");
    for (double p : ablation.periods_months) {
      if (!(p > 0.0 && p <= 12.0)) throw ConfigError("ablation periods must be in (0, 12] months");
    }
    for (double t : case1.thresholds_kw) {
      if (!(t > 0.0)) throw ConfigError("filter thresholds must be positive");
    }
    for (double l : case1.l2_grid) {
      if (!(l >= 0.0)) throw ConfigError("L2 penalties must be non-negative");
    }
    if (!(case2.yaw_max_deg > 0.0 && case2.yaw_max_deg < 90.0)) throw ConfigError("yaw range must be in (0, 90)");
    if (!(case2.bin_kw > 0.0)) throw ConfigError("bin width must be positive");
    if (case2.references.empty()) throw ConfigError("case2 needs at least one reference kind");
    if (case2.kind == models::ModelKind::phys_base || case2.kind == models::ModelKind::hybrid) {
      throw ConfigError("case2 trains a data-driven model without physics input");
    }
  }

  /// Fully resolved settings; the basis of the config hash.
  nlohmann::json to_json() const {
    nlohmann::json overrides = models.overrides;
    nlohmann::json refs = nlohmann::json::array();
    for (auto r : case2.references) refs.push_back(xai::to_string(r));
    nlohmann::json d = {{"source", data.source},
                        {"csv", data.csv_path},
                        {"schema", data.schema},
                        {"turbine", data.turbine},
                        {"synthetic", data.synthetic.to_json()},
                        {"records", data.records},
                        {"truth", {{"speed_scale", data.truth_speed_scale}, {"curve", data.truth_curve}}}};
    d["ti_correction"] = data.ti_correction ? nlohmann::json{{"mean", data.ti_reference.mean},
                                                             {"std", data.ti_reference.std},
                                                             {"prune_quantile", data.ti_reference.prune_quantile}}
                                            : nlohmann::json(nullptr);
    return {{"experiment", experiment},
            {"seed", seed},
            {"output_dir", output_dir},
            {"workers", workers},
            {"data", d},
            {"physics", physics},
            {"split",
             {{"train", detail::range_to_json(split.train)},
              {"test", detail::range_to_json(split.test)},
              {"validation_fraction", split.validation_fraction},
              {"subsample", split.subsample}}},
            {"models",
             {{"kinds", detail::kinds_to_json(models.kinds)},
              {"seeds", models.seeds},
              {"overrides", overrides},
              {"save", models.save}}},
            {"strategy",
             {{"reference", xai::to_string(strategy.reference)},
              {"probe_size", strategy.probe_size},
              {"weights", strategy.weights},
              {"squared", strategy.squared}}},
            {"ablation",
             {{"periods_months", ablation.periods_months},
              {"offsets", ablation.offsets},
              {"kinds", detail::kinds_to_json(ablation.kinds)},
              {"short_period_months", ablation.short_period_months},
              {"month_days", ablation.month_days}}},
            {"case1",
             {{"l2_grid", case1.l2_grid},
              {"thresholds_kw", case1.thresholds_kw},
              {"hybrid", case1.hybrid},
              {"seeds", case1.seeds},
              {"min_rows", case1.min_rows}}},
            {"case2",
             {{"kind", models::to_string(case2.kind)},
              {"yaw_max_deg", case2.yaw_max_deg},
              {"references", refs},
              {"bin_kw", case2.bin_kw},
              {"reference_bin_width", case2.reference_bin_width},
              {"probe_size", case2.probe_size}}},
            {"explain",
             {{"kind", models::to_string(explain.kind)},
              {"yaw", explain.yaw},
              {"yaw_max_deg", explain.yaw_max_deg},
              {"model", explain.model_path},
              {"rows", explain.rows},
              {"count", explain.count},
              {"reference", xai::to_string(explain.reference)},
              {"profile_bin_width", explain.profile_bin_width}}}};
  }

  /// Hash of the result-determining settings (output location and worker
  /// count excluded).
  std::string hash() const {
    auto j = to_json();
    j.erase("output_dir");
    j.erase("workers");
    return detail::hex64(fnv1a(j.dump()));
  }

  int resolved_workers() const {
    if (workers > 0) return workers;
    return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  }
};

inline ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return ExperimentConfig::from_json(j);
}

// ---------------------------------------------------------------------------
// Datasets

/// Generic reference curve stretched in wind speed; cut-out kept in place.
inline physics::NominalPowerCurve stretched_curve(const physics::NominalPowerCurve& base, double scale) {
  std::vector<std::pair<double, double>> knots;
  for (const auto& [v, p] : base.knots()) {
    knots.emplace_back(v <= base.rated_speed() ? v * scale : v, p);
  }
  return {std::move(knots), base.cut_in() * scale, base.rated_speed() * scale, base.rated_power(), base.cut_out()};
}

inline physics::PhysBase make_physics(const nlohmann::json& j) {
  auto curve = physics::NominalPowerCurve::reference_2mw();
  if (j.contains("curve_csv")) curve = physics::NominalPowerCurve::from_csv(j.at("curve_csv").get<std::string>());
  if (j.contains("curve")) curve = models::curve_from_json(j.at("curve"));
  physics::QuadratureSettings quad;
  quad.points = j.value("quadrature_points", quad.points);
  quad.sigma_span = j.value("sigma_span", quad.sigma_span);
  return physics::PhysBase(std::move(curve), j.value("mean_density", physics::kStandardDensity), quad);
}

struct Dataset {
  std::vector<ScadaRecord> records;  // operational, time ordered
  physics::PhysBase physics;
  std::size_t loaded = 0;
  std::size_t rejected = 0;
};

inline physics::PhysBase make_truth(const ExperimentConfig& cfg, const physics::PhysBase& phys) {
  if (!cfg.data.truth_curve.is_null()) {
    return physics::PhysBase(models::curve_from_json(cfg.data.truth_curve), phys.mean_density(), phys.quadrature());
  }
  if (cfg.data.truth_speed_scale == 1.0) return phys;
  return physics::PhysBase(stretched_curve(phys.curve(), cfg.data.truth_speed_scale), phys.mean_density(),
                           phys.quadrature());
}

inline Dataset load_dataset(const ExperimentConfig& cfg) {
  Dataset ds{{}, make_physics(cfg.physics)};
  std::vector<ScadaRecord> raw;
  if (cfg.data.source == "synthetic") {
    const auto truth = make_truth(cfg, ds.physics);
    raw = scada::synthesize_scada(cfg.data.synthetic, truth, cfg.data.records, derive_seed(cfg.seed, "data"));
  } else {
    auto schema = cfg.data.schema.empty() ? scada::ColumnSchema::generic() : scada::ColumnSchema::from_json(cfg.data.schema);
    if (!cfg.data.turbine.empty()) schema.turbine_id = cfg.data.turbine;
    auto loaded = scada::load_scada_csv(cfg.data.csv_path, schema);
    ds.rejected = loaded.rejected;
    raw = std::move(loaded.records);
  }
  ds.loaded = raw.size();
  ds.records = scada::filter_operational(raw);
  if (cfg.data.ti_correction) ds.records = scada::correct_ti_bias(ds.records, cfg.data.ti_reference);
  if (ds.records.empty()) throw DataError("no operational records after filtering");
  return ds;
}

/// Train and test ranges: configured, or consecutive 365-day years from the
/// first record's day.
inline std::pair<scada::TimeRange, scada::TimeRange> resolve_ranges(const ExperimentConfig& cfg,
                                                                    const std::vector<ScadaRecord>& records) {
  using namespace std::chrono;
  const auto first = floor<days>(records.front().timestamp);
  const auto year = days{365};
  scada::TimeRange train = cfg.split.train.value_or(scada::TimeRange{first, first + year});
  scada::TimeRange test = cfg.split.test.value_or(scada::TimeRange{train.end, train.end + year});
  return {train, test};
}

struct YearSplit {
  std::vector<ScadaRecord> train_pool;  // train range, before validation sampling
  std::vector<ScadaRecord> train;
  std::vector<ScadaRecord> validation;
  std::vector<ScadaRecord> test;
  scada::TimeRange train_range;
  scada::TimeRange test_range;
};

inline YearSplit split_years(const ExperimentConfig& cfg, const std::vector<ScadaRecord>& records) {
  const auto [train_range, test_range] = resolve_ranges(cfg, records);
  if (train_range.overlaps(test_range)) throw ConfigError("train and test ranges overlap");
  YearSplit out;
  out.train_range = train_range;
  out.test_range = test_range;
  for (const auto& r : records) {
    if (train_range.contains(r.timestamp)) out.train_pool.push_back(r);
    else if (test_range.contains(r.timestamp)) out.test.push_back(r);
  }
  if (out.train_pool.empty()) throw DataError("no records in training range");
  if (out.test.empty()) throw DataError("no records in test range");
  if (cfg.split.subsample < 1.0) {
    auto [dropped, kept] = scada::sample_validation(out.train_pool, cfg.split.subsample, derive_seed(cfg.seed, "subsample"));
    out.train_pool = std::move(kept);
  }
  auto [train, val] = scada::sample_validation(out.train_pool, cfg.split.validation_fraction, derive_seed(cfg.seed, "split"));
  out.train = std::move(train);
  out.validation = std::move(val);
  if (out.validation.empty() || out.train.empty()) throw DataError("training range too small to split");
  return out;
}

/// Stratified probe subset of `records` (per 1 m/s bin), time ordered.
inline std::vector<ScadaRecord> probe_records(const std::vector<ScadaRecord>& records, std::size_t size,
                                              std::uint64_t seed, bool include_yaw) {
  const auto f = scada::fit_features(records, include_yaw);
  const auto idx = strategy::stratified_probe(f, size, seed);
  std::vector<ScadaRecord> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(records[static_cast<std::size_t>(i)]);
  return out;
}

// ---------------------------------------------------------------------------
// Training and evaluation of one grid cell

struct Evaluation {
  std::string status = "ok";  // ok | failed | skipped
  std::string message;
  double rmse_val = std::numeric_limits<double>::quiet_NaN();
  double rmse_test = std::numeric_limits<double>::quiet_NaN();
  std::vector<strategy::FeatureCorrelation> correlations;
  double r2_phys = std::numeric_limits<double>::quiet_NaN();
  std::size_t train_rows = 0;
  int epochs = 0;

  bool ok() const { return status == "ok"; }
  double r(std::size_t j) const {
    return j < correlations.size() ? correlations[j].r : std::numeric_limits<double>::quiet_NaN();
  }
};

struct CellInput {
  const std::vector<ScadaRecord>* train = nullptr;
  const std::vector<ScadaRecord>* validation = nullptr;
  const std::vector<ScadaRecord>* test = nullptr;
  const std::vector<ScadaRecord>* probe = nullptr;
  const physics::PhysBase* physics = nullptr;
  bool include_yaw = false;
};

struct TrainedCell {
  Evaluation eval;
  std::unique_ptr<models::Predictor> model;
};

/// Trains `spec` on the cell's training rows and scores it on validation,
/// test and the probe. Data-quality and training failures are recorded in
/// the evaluation; configuration errors propagate.
inline TrainedCell run_cell(const models::ModelSpec& spec, const CellInput& in, const StrategySettings& settings,
                            bool keep_model = false) {
  TrainedCell out;
  try {
    const auto train = scada::fit_features(*in.train, in.include_yaw);
    const auto val = scada::make_features(*in.validation, train.scaler, in.include_yaw);
    out.eval.train_rows = static_cast<std::size_t>(train.size());
    auto model = models::train_model(spec, train, val, *in.physics);
    if (const auto* mlp = dynamic_cast<const models::Mlp*>(model.get())) out.eval.epochs = mlp->trace().epochs;
    if (const auto* h = dynamic_cast<const models::HybridModel*>(model.get())) out.eval.epochs = h->inner().trace().epochs;
    out.eval.rmse_val = models::evaluate_rmse(*model, val);
    out.eval.rmse_test = models::evaluate_rmse(*model, scada::make_features(*in.test, train.scaler, in.include_yaw));
    const auto probe = scada::make_features(*in.probe, train.scaler, in.include_yaw);
    const models::PhysBasePredictor phys(*in.physics, train.scaler, false);
    const auto ref = xai::build_reference(settings.reference, train);
    strategy::StrategyOptions opts;
    opts.weights = settings.weights;
    opts.squared = settings.squared;
    const auto rep = strategy::evaluate_strategy(*model, phys, probe.rows, ref, opts);
    out.eval.correlations = rep.per_feature;
    out.eval.r2_phys = rep.r2_phys;
    if (keep_model) out.model = std::move(model);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    out.eval.status = "failed";
    out.eval.message = e.what();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Output

/// Collects result files and writes them in one step. Re-running with the
/// same config hash must reproduce every file byte for byte; a mismatch is
/// reported and nothing is overwritten.
class ResultSet {
 public:
  ResultSet(std::string experiment, std::string hash) : experiment_(std::move(experiment)), hash_(std::move(hash)) {}

  std::ostringstream& file(const std::string& name) { return files_[name]; }
  nlohmann::json& summary() { return summary_; }
  const std::string& hash() const { return hash_; }

  std::string content(const std::string& name) const { return files_.at(name).str(); }
  std::vector<std::string> names() const {
    std::vector<std::string> n;
    for (const auto& [k, v] : files_) n.push_back(k);
    return n;
  }

  std::string summary_text() const {
    nlohmann::json s = summary_;
    s["experiment"] = experiment_;
    s["config_hash"] = hash_;
    nlohmann::json files = nlohmann::json::array();
    for (const auto& [k, v] : files_) files.push_back(file_name(k));
    s["files"] = files;
    return s.dump(2) + "\n";
  }

  std::string file_name(const std::string& name) const { return experiment_ + "_" + name; }

  /// Writes all files plus <experiment>_summary.json into `dir`.
  void commit(const std::filesystem::path& dir) const {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
    const auto summary_path = dir / (experiment_ + "_summary.json");
    std::vector<std::pair<std::filesystem::path, std::string>> planned;
    for (const auto& [k, v] : files_) planned.emplace_back(dir / file_name(k), v.str());
    planned.emplace_back(summary_path, summary_text());
    if (previous_hash(summary_path) == hash_) {
      for (const auto& [path, text] : planned) {
        if (!std::filesystem::exists(path)) continue;
        if (read_file(path) != text) {
          throw DataError("output " + path.string() + " differs from the previous run with config hash " + hash_);
        }
      }
    }
    for (const auto& [path, text] : planned) {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw DataError("cannot write " + path.string());
      out << text;
      if (!out) throw DataError("write failed for " + path.string());
    }
  }

 private:
  static std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  static std::string previous_hash(const std::filesystem::path& p) {
    if (!std::filesystem::exists(p)) return {};
    try {
      return nlohmann::json::parse(read_file(p)).value("config_hash", std::string{});
    } catch (const nlohmann::json::exception&) {
      return {};
    }
  }

  std::string experiment_;
  std::string hash_;
  std::map<std::string, std::ostringstream> files_;
  nlohmann::json summary_ = nlohmann::json::object();
};

inline std::string fmt(double v) {
  if (std::isnan(v)) return "NA";
  return xai::format_value(v);
}

inline nlohmann::json json_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

inline std::string evaluation_columns() {
  return "rmse_val,rmse_test,r_vw,r_rho,r_TI,r2_phys,train_rows,epochs,status,message";
}

inline std::string csv_escape(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

inline void write_evaluation(std::ostream& out, const Evaluation& e) {
  out << fmt(e.rmse_val) << ',' << fmt(e.rmse_test) << ',' << fmt(e.r(0)) << ',' << fmt(e.r(1)) << ','
      << fmt(e.r(2)) << ',' << fmt(e.r2_phys) << ',' << e.train_rows << ',' << e.epochs << ',' << e.status << ','
      << csv_escape(e.message);
}

struct Summary {
  std::size_t n = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double std = std::numeric_limits<double>::quiet_NaN();
};

inline Summary summarize(const std::vector<double>& x) {
  Summary s;
  s.n = x.size();
  if (x.empty()) return s;
  s.mean = mean(x);
  s.std = sample_std(x);
  return s;
}

inline nlohmann::json summary_json(const Summary& s) {
  return {{"n", s.n}, {"mean", json_number(s.mean)}, {"std", json_number(s.std)}};
}

// ---------------------------------------------------------------------------
// Benchmark

struct BenchmarkRow {
  std::string model_id;
  models::ModelKind kind{};
  std::uint64_t seed = 0;
  Evaluation eval;
};

struct BenchmarkReport {
  std::vector<BenchmarkRow> rows;
  std::map<std::string, Summary> rmse_test;  // per kind, ok runs only
  std::map<std::string, Summary> r2_phys;
  ResultSet results;
};

inline std::string model_id(models::ModelKind k, std::size_t index) {
  return models::to_string(k) + "-" + std::to_string(index);
}

inline BenchmarkReport run_benchmark(const ExperimentConfig& cfg) {
  const auto ds = load_dataset(cfg);
  const auto split = split_years(cfg, ds.records);
  const auto probe = probe_records(split.test, cfg.strategy.probe_size, derive_seed(cfg.seed, "probe"), false);
  const CellInput in{&split.train, &split.validation, &split.test, &probe, &ds.physics, false};

  struct Task {
    models::ModelKind kind;
    std::size_t index;
  };
  std::vector<Task> tasks;
  for (auto k : cfg.models.kinds) {
    const int n = models::is_stochastic(k) ? cfg.models.seeds : 1;
    for (int i = 0; i < n; ++i) tasks.push_back({k, static_cast<std::size_t>(i)});
  }
  std::vector<BenchmarkRow> rows(tasks.size());
  std::vector<std::unique_ptr<models::Predictor>> kept(tasks.size());
  parallel_for(tasks.size(), cfg.resolved_workers(), [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto seed = derive_seed(cfg.seed, "model/" + models::to_string(task.kind), task.index);
    const auto spec = models::ModelSpec::make(task.kind, seed, cfg.models.overrides_for(task.kind));
    auto cell = run_cell(spec, in, cfg.strategy, cfg.models.save);
    rows[t] = {model_id(task.kind, task.index), task.kind, models::is_stochastic(task.kind) ? seed : 0,
               std::move(cell.eval)};
    kept[t] = std::move(cell.model);
  });

  BenchmarkReport rep{std::move(rows), {}, {}, ResultSet("benchmark", cfg.hash())};
  auto& runs = rep.results.file("runs.csv");
  runs << "model_id,kind,seed," << evaluation_columns() << '\n';
  for (const auto& r : rep.rows) {
    runs << r.model_id << ',' << models::to_string(r.kind) << ',' << r.seed << ',';
    write_evaluation(runs, r.eval);
    runs << '\n';
  }
  auto& table = rep.results.file("table.csv");
  table << "kind,runs_ok,runs_failed,rmse_test_mean,rmse_test_std,r2_phys_mean,r2_phys_std\n";
  nlohmann::json kinds = nlohmann::json::object();
  for (auto k : cfg.models.kinds) {
    const auto name = models::to_string(k);
    std::vector<double> rmse, r2;
    std::size_t failed = 0;
    for (const auto& r : rep.rows) {
      if (r.kind != k) continue;
      if (!r.eval.ok()) {
        ++failed;
        continue;
      }
      rmse.push_back(r.eval.rmse_test);
      r2.push_back(r.eval.r2_phys);
    }
    rep.rmse_test[name] = summarize(rmse);
    rep.r2_phys[name] = summarize(r2);
    table << name << ',' << rmse.size() << ',' << failed << ',' << fmt(rep.rmse_test[name].mean) << ','
          << fmt(rep.rmse_test[name].std) << ',' << fmt(rep.r2_phys[name].mean) << ','
          << fmt(rep.r2_phys[name].std) << '\n';
    kinds[name] = {{"rmse_test", summary_json(rep.rmse_test[name])}, {"r2_phys", summary_json(rep.r2_phys[name])},
                   {"failed", failed}};
  }
  if (cfg.models.save) {
    for (std::size_t t = 0; t < kept.size(); ++t) {
      if (kept[t]) rep.results.file("model_" + rep.rows[t].model_id + ".json") << models::save_model(*kept[t]).dump(1) << '\n';
    }
  }
  auto& s = rep.results.summary();
  s["config"] = cfg.to_json();
  s["records"] = {{"loaded", ds.loaded},
                  {"operational", ds.records.size()},
                  {"rejected", ds.rejected},
                  {"train", split.train.size()},
                  {"validation", split.validation.size()},
                  {"test", split.test.size()},
                  {"probe", probe.size()}};
  s["kinds"] = kinds;
  return rep;
}

// ---------------------------------------------------------------------------
// Training-period ablation

struct AblationRow {
  double period_months = 0.0;
  int offset = 0;
  models::ModelKind kind{};
  std::uint64_t seed = 0;
  Evaluation eval;
  double phys_rmse_val = std::numeric_limits<double>::quiet_NaN();
  bool passed_phys_baseline = false;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  double spearman_short = std::numeric_limits<double>::quiet_NaN();  // r2_phys vs test RMSE, survivors
  double spearman_val_short = std::numeric_limits<double>::quiet_NaN();  // val RMSE vs test RMSE, survivors
  std::size_t survivors_short = 0;
  ResultSet results;
};

/// Training-range records inside the window [start, start + length) taken
/// cyclically over the training range.
inline std::vector<ScadaRecord> window_records(const std::vector<ScadaRecord>& pool, const scada::TimeRange& range,
                                               double start_fraction, double length_fraction) {
  const double span = std::chrono::duration<double>(range.end - range.begin).count();
  const double start = start_fraction * span;
  const double length = length_fraction * span;
  std::vector<ScadaRecord> out;
  for (const auto& r : pool) {
    const double t = std::chrono::duration<double>(r.timestamp - range.begin).count();
    double d = std::fmod(t - start, span);
    if (d < 0.0) d += span;
    if (d < length || length_fraction >= 1.0) out.push_back(r);
  }
  return out;
}

inline double spearman_or_nan(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 3) return std::numeric_limits<double>::quiet_NaN();
  return spearman(a, b);
}

inline AblationReport run_period_ablation(const ExperimentConfig& cfg) {
  const auto ds = load_dataset(cfg);
  const auto split = split_years(cfg, ds.records);
  const auto probe = probe_records(split.test, cfg.strategy.probe_size, derive_seed(cfg.seed, "probe"), false);

  struct Window {
    double period;
    int offset;
    std::vector<ScadaRecord> train, validation;
    double phys_rmse_val = std::numeric_limits<double>::quiet_NaN();
    std::string error;
  };
  const double span = std::chrono::duration<double>(split.train_range.end - split.train_range.begin).count();
  const double month = cfg.ablation.month_days > 0.0 ? cfg.ablation.month_days * 86400.0 : span / 12.0;
  std::vector<Window> windows;
  for (double p : cfg.ablation.periods_months) {
    for (int o = 0; o < cfg.ablation.offsets; ++o) {
      Window w{p, o, {}, {}};
      const auto pool = window_records(split.train_pool, split.train_range,
                                       static_cast<double>(o) / cfg.ablation.offsets, p * month / span);
      const auto tag = "ablation/window/" + xai::format_value(p);
      if (pool.size() < 10) {
        w.error = "window holds too few records";
      } else {
        auto [t, v] = scada::sample_validation(pool, cfg.split.validation_fraction,
                                               derive_seed(cfg.seed, tag, static_cast<std::uint64_t>(o)));
        w.train = std::move(t);
        w.validation = std::move(v);
        try {
          const auto ft = scada::fit_features(w.train, false);
          const auto fv = scada::make_features(w.validation, ft.scaler, false);
          w.phys_rmse_val = models::evaluate_rmse(models::PhysBasePredictor(ds.physics, ft.scaler), fv);
        } catch (const ConfigError&) {
          throw;
        } catch (const Error& e) {
          w.error = e.what();
        }
      }
      windows.push_back(std::move(w));
    }
  }

  struct Task {
    std::size_t window;
    models::ModelKind kind;
  };
  std::vector<Task> tasks;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    for (auto k : cfg.ablation.kinds) tasks.push_back({w, k});
  }
  std::vector<AblationRow> rows(tasks.size());
  parallel_for(tasks.size(), cfg.resolved_workers(), [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto& w = windows[task.window];
    const auto seed = derive_seed(cfg.seed, "ablation/" + models::to_string(task.kind),
                                  static_cast<std::uint64_t>(w.offset));
    AblationRow row;
    row.period_months = w.period;
    row.offset = w.offset;
    row.kind = task.kind;
    row.seed = models::is_stochastic(task.kind) ? seed : 0;
    row.phys_rmse_val = w.phys_rmse_val;
    if (!w.error.empty()) {
      row.eval.status = "skipped";
      row.eval.message = w.error;
    } else {
      const CellInput in{&w.train, &w.validation, &split.test, &probe, &ds.physics, false};
      const auto spec = models::ModelSpec::make(task.kind, seed, cfg.models.overrides_for(task.kind));
      row.eval = run_cell(spec, in, cfg.strategy).eval;
      row.passed_phys_baseline = row.eval.ok() && row.eval.rmse_val < w.phys_rmse_val;
    }
    rows[t] = std::move(row);
  });

  AblationReport rep{std::move(rows), std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::quiet_NaN(), 0, ResultSet("ablation", cfg.hash())};
  auto& out = rep.results.file("runs.csv");
  out << "period_months,offset,kind,seed,phys_rmse_val,passed_phys_baseline," << evaluation_columns() << '\n';
  for (const auto& r : rep.rows) {
    out << fmt(r.period_months) << ',' << r.offset << ',' << models::to_string(r.kind) << ',' << r.seed << ','
        << fmt(r.phys_rmse_val) << ',' << (r.passed_phys_baseline ? 1 : 0) << ',';
    write_evaluation(out, r.eval);
    out << '\n';
  }
  auto& per = rep.results.file("periods.csv");
  per << "period_months,runs,survivors,spearman_r2phys_rmse_test,spearman_rmse_val_rmse_test,r2_phys_mean,"
         "rmse_test_mean\n";
  nlohmann::json periods = nlohmann::json::array();
  std::vector<double> short_r2, short_test, short_val;
  for (double p : cfg.ablation.periods_months) {
    std::vector<double> r2, test, val;
    std::size_t runs = 0;
    for (const auto& r : rep.rows) {
      if (r.period_months != p) continue;
      ++runs;
      if (!r.passed_phys_baseline) continue;
      r2.push_back(r.eval.r2_phys);
      test.push_back(r.eval.rmse_test);
      val.push_back(r.eval.rmse_val);
      if (p <= cfg.ablation.short_period_months) {
        short_r2.push_back(r.eval.r2_phys);
        short_test.push_back(r.eval.rmse_test);
        short_val.push_back(r.eval.rmse_val);
      }
    }
    const double s1 = spearman_or_nan(r2, test);
    const double s2 = spearman_or_nan(val, test);
    per << fmt(p) << ',' << runs << ',' << r2.size() << ',' << fmt(s1) << ',' << fmt(s2) << ','
        << fmt(summarize(r2).mean) << ',' << fmt(summarize(test).mean) << '\n';
    periods.push_back({{"period_months", p},
                       {"runs", runs},
                       {"survivors", r2.size()},
                       {"spearman_r2phys_rmse_test", json_number(s1)},
                       {"spearman_rmse_val_rmse_test", json_number(s2)}});
  }
  rep.survivors_short = short_r2.size();
  rep.spearman_short = spearman_or_nan(short_r2, short_test);
  rep.spearman_val_short = spearman_or_nan(short_val, short_test);
  auto& s = rep.results.summary();
  s["config"] = cfg.to_json();
  s["periods"] = periods;
  s["short_periods"] = {{"max_months", cfg.ablation.short_period_months},
                        {"survivors", rep.survivors_short},
                        {"spearman_r2phys_rmse_test", json_number(rep.spearman_short)},
                        {"spearman_rmse_val_rmse_test", json_number(rep.spearman_val_short)}};
  return rep;
}

// ---------------------------------------------------------------------------
// Case study I: regularization paths

struct Case1Row {
  std::string sweep;  // baseline | l2 | filter | hybrid
  double setting = std::numeric_limits<double>::quiet_NaN();
  std::size_t seed_index = 0;
  std::uint64_t seed = 0;
  Evaluation eval;
};

struct Case1Point {
  std::string sweep;
  double setting = std::numeric_limits<double>::quiet_NaN();
  Summary r2_phys;
  Summary rmse_test;
  bool skipped = false;
  std::string message;
};

struct Case1Report {
  std::vector<Case1Row> rows;
  std::vector<Case1Point> points;
  bool filter_monotone = false;  // mean r2_phys non-decreasing as the threshold falls
  ResultSet results;

  const Case1Point* point(const std::string& sweep, double setting = std::numeric_limits<double>::quiet_NaN()) const {
    for (const auto& p : points) {
      if (p.sweep == sweep && (std::isnan(setting) ? std::isnan(p.setting) : p.setting == setting)) return &p;
    }
    return nullptr;
  }
};

/// Drops records whose power deviates from the physics baseline by more than
/// `threshold_kw`.
inline std::vector<ScadaRecord> physics_filter(const std::vector<ScadaRecord>& records,
                                               const physics::PhysBase& phys, double threshold_kw) {
  std::vector<ScadaRecord> out;
  for (const auto& r : records) {
    const double p = phys.predict(r.wind_speed_mean, r.air_density(), r.turbulence_intensity());
    if (std::abs(p - r.power_output) <= threshold_kw) out.push_back(r);
  }
  return out;
}

inline Case1Report run_case_study_regularization(const ExperimentConfig& cfg) {
  const auto ds = load_dataset(cfg);
  const auto split = split_years(cfg, ds.records);
  const auto probe = probe_records(split.test, cfg.strategy.probe_size, derive_seed(cfg.seed, "probe"), false);
  const auto base_overrides = cfg.models.overrides_for(models::ModelKind::ann_large);

  struct Variant {
    std::string sweep;
    double setting;
    std::vector<ScadaRecord> train, validation;
    std::string skip;
  };
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<Variant> variants;
  variants.push_back({"baseline", nan, split.train, split.validation, {}});
  for (double l : cfg.case1.l2_grid) variants.push_back({"l2", l, split.train, split.validation, {}});
  for (double t : cfg.case1.thresholds_kw) {
    Variant v{"filter", t, physics_filter(split.train, ds.physics, t), physics_filter(split.validation, ds.physics, t),
              {}};
    if (v.train.size() < cfg.case1.min_rows || v.validation.empty()) {
      v.skip = "filter leaves " + std::to_string(v.train.size()) + " training rows (< " +
               std::to_string(cfg.case1.min_rows) + ")";
    }
    variants.push_back(std::move(v));
  }
  if (cfg.case1.hybrid) variants.push_back({"hybrid", nan, split.train, split.validation, {}});

  struct Task {
    std::size_t variant;
    std::size_t seed_index;
  };
  std::vector<Task> tasks;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    if (!variants[v].skip.empty()) continue;
    for (int i = 0; i < cfg.case1.seeds; ++i) tasks.push_back({v, static_cast<std::size_t>(i)});
  }
  std::vector<Case1Row> rows(tasks.size());
  parallel_for(tasks.size(), cfg.resolved_workers(), [&](std::size_t t) {
    const auto& task = tasks[t];
    const auto& v = variants[task.variant];
    // The same seeds across sweep points pair the comparisons.
    const auto seed = derive_seed(cfg.seed, "case1", task.seed_index);
    const auto kind = v.sweep == "hybrid" ? models::ModelKind::hybrid : models::ModelKind::ann_large;
    auto spec = models::ModelSpec::make(kind, seed, base_overrides);
    if (v.sweep == "l2") spec.mlp.l2_penalty = v.setting;
    const CellInput in{&v.train, &v.validation, &split.test, &probe, &ds.physics, false};
    rows[t] = {v.sweep, v.setting, task.seed_index, seed, run_cell(spec, in, cfg.strategy).eval};
  });

  Case1Report rep{std::move(rows), {}, false, ResultSet("case1", cfg.hash())};
  auto& out = rep.results.file("runs.csv");
  out << "sweep,setting,seed_index,seed," << evaluation_columns() << '\n';
  for (const auto& r : rep.rows) {
    out << r.sweep << ',' << fmt(r.setting) << ',' << r.seed_index << ',' << r.seed << ',';
    write_evaluation(out, r.eval);
    out << '\n';
  }
  auto& pts = rep.results.file("points.csv");
  pts << "sweep,setting,runs_ok,r2_phys_mean,r2_phys_std,rmse_test_mean,rmse_test_std,skipped,message\n";
  nlohmann::json points = nlohmann::json::array();
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& v : variants) {
    Case1Point p{v.sweep, v.setting, {}, {}, !v.skip.empty(), v.skip};
    std::vector<double> r2, rmse;
    for (const auto& r : rep.rows) {
      const bool same = r.sweep == v.sweep && (std::isnan(v.setting) ? std::isnan(r.setting) : r.setting == v.setting);
      if (same && r.eval.ok()) {
        r2.push_back(r.eval.r2_phys);
        rmse.push_back(r.eval.rmse_test);
      }
    }
    p.r2_phys = summarize(r2);
    p.rmse_test = summarize(rmse);
    if (p.skipped) warnings.push_back(p.message);
    pts << p.sweep << ',' << fmt(p.setting) << ',' << r2.size() << ',' << fmt(p.r2_phys.mean) << ','
        << fmt(p.r2_phys.std) << ',' << fmt(p.rmse_test.mean) << ',' << fmt(p.rmse_test.std) << ','
        << (p.skipped ? 1 : 0) << ',' << csv_escape(p.message) << '\n';
    points.push_back({{"sweep", p.sweep},
                      {"setting", json_number(p.setting)},
                      {"r2_phys", summary_json(p.r2_phys)},
                      {"rmse_test", summary_json(p.rmse_test)},
                      {"skipped", p.skipped}});
    rep.points.push_back(std::move(p));
  }
  // Monotonicity over the evaluated thresholds, sorted from loose to strict.
  std::vector<const Case1Point*> filters;
  for (const auto& p : rep.points) {
    if (p.sweep == "filter" && !p.skipped && p.r2_phys.n > 0) filters.push_back(&p);
  }
  std::sort(filters.begin(), filters.end(), [](auto* a, auto* b) { return a->setting > b->setting; });
  rep.filter_monotone = filters.size() >= 2;
  for (std::size_t i = 1; i < filters.size(); ++i) {
    if (filters[i]->r2_phys.mean < filters[i - 1]->r2_phys.mean) rep.filter_monotone = false;
  }
  auto& s = rep.results.summary();
  s["config"] = cfg.to_json();
  s["points"] = points;
  s["filter_monotone"] = rep.filter_monotone;
  s["warnings"] = warnings;
  return rep;
}

// ---------------------------------------------------------------------------
// Case study II: yaw misalignment faithfulness

/// Applies a yaw misalignment to a copy of `r` and scales its power by the
/// yaw factor. Returns the true power change.
inline double apply_yaw(ScadaRecord& r, double yaw_deg, double rated_speed) {
  const double wind_dir = r.wind_direction.value_or(0.0);
  r.wind_direction = wind_dir;
  r.nacelle_direction = std::fmod(wind_dir + yaw_deg, 360.0);
  const double before = r.power_output;
  r.power_output = before * physics::yaw_power_factor(yaw_deg, r.wind_speed_mean, rated_speed);
  return r.power_output - before;
}

struct YawAugmented {
  std::vector<ScadaRecord> records;
  std::vector<double> true_delta;  // kW, <= 0
};

inline YawAugmented augment_yaw(const std::vector<ScadaRecord>& records, double yaw_max_deg, double rated_speed,
                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> yaw(0.0, yaw_max_deg);
  YawAugmented out;
  out.records = records;
  out.true_delta.reserve(records.size());
  for (auto& r : out.records) out.true_delta.push_back(apply_yaw(r, yaw(rng), rated_speed));
  return out;
}

struct FaithfulnessRow {
  std::size_t record = 0;
  double wind_speed = 0.0;
  double yaw_deg = 0.0;
  double true_delta = 0.0;
  double relevance = 0.0;
};

struct FaithfulnessBin {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t count = 0;
  double true_mean = 0.0;
  double relevance_mean = 0.0;
  double relevance_std = 0.0;
};

struct FaithfulnessResult {
  xai::ReferenceKind reference{};
  std::vector<FaithfulnessRow> rows;
  std::vector<FaithfulnessBin> bins;
  double mean_abs_error = 0.0;
  double max_completeness_residual = 0.0;
};

struct Case2Report {
  std::vector<FaithfulnessResult> results_by_reference;
  Evaluation model_eval;
  ResultSet results;

  const FaithfulnessResult* find(xai::ReferenceKind k) const {
    for (const auto& r : results_by_reference) {
      if (r.reference == k) return &r;
    }
    return nullptr;
  }
};

inline std::vector<FaithfulnessBin> bin_faithfulness(const std::vector<FaithfulnessRow>& rows, double width) {
  std::map<long long, std::vector<const FaithfulnessRow*>> bins;
  for (const auto& r : rows) bins[static_cast<long long>(std::floor(r.true_delta / width))].push_back(&r);
  std::vector<FaithfulnessBin> out;
  for (const auto& [k, members] : bins) {
    FaithfulnessBin b;
    b.lo = static_cast<double>(k) * width;
    b.hi = b.lo + width;
    b.count = members.size();
    std::vector<double> rel;
    double t = 0.0;
    for (const auto* m : members) {
      rel.push_back(m->relevance);
      t += m->true_delta;
    }
    b.true_mean = t / static_cast<double>(members.size());
    b.relevance_mean = mean(rel);
    b.relevance_std = sample_std(rel);
    out.push_back(b);
  }
  return out;
}

inline Case2Report run_case_study_yaw(const ExperimentConfig& cfg) {
  const auto ds = load_dataset(cfg);
  const auto split = split_years(cfg, ds.records);
  const double rated = ds.physics.curve().rated_speed();
  const auto train = augment_yaw(split.train, cfg.case2.yaw_max_deg, rated, derive_seed(cfg.seed, "case2/yaw", 0));
  const auto val = augment_yaw(split.validation, cfg.case2.yaw_max_deg, rated, derive_seed(cfg.seed, "case2/yaw", 1));
  const auto test = augment_yaw(split.test, cfg.case2.yaw_max_deg, rated, derive_seed(cfg.seed, "case2/yaw", 2));

  Case2Report rep{{}, {}, ResultSet("case2", cfg.hash())};
  const auto ftrain = scada::fit_features(train.records, true);
  const auto fval = scada::make_features(val.records, ftrain.scaler, true);
  const auto ftest = scada::make_features(test.records, ftrain.scaler, true);
  const auto seed = derive_seed(cfg.seed, "case2/model");
  const auto spec = models::ModelSpec::make(cfg.case2.kind, seed, cfg.models.overrides_for(cfg.case2.kind));
  const auto model = models::train_model(spec, ftrain, fval, ds.physics);
  rep.model_eval.rmse_val = models::evaluate_rmse(*model, fval);
  rep.model_eval.rmse_test = models::evaluate_rmse(*model, ftest);
  rep.model_eval.train_rows = static_cast<std::size_t>(ftrain.size());
  if (const auto* mlp = dynamic_cast<const models::Mlp*>(model.get())) rep.model_eval.epochs = mlp->trace().epochs;

  const auto probe_idx = strategy::stratified_probe(ftest, cfg.case2.probe_size, derive_seed(cfg.seed, "probe"));
  const Matrix probe = strategy::select_rows(ftest.rows, probe_idx);
  nlohmann::json refs = nlohmann::json::object();
  nlohmann::json warnings = nlohmann::json::array();
  for (auto kind : cfg.case2.references) {
    xai::ReferenceOptions opts = xai::informed_defaults(4);
    opts.bin_width = cfg.case2.reference_bin_width;
    const auto ref = xai::build_reference(kind, ftrain, opts);
    for (const auto& w : ref.warnings()) warnings.push_back(w);
    const auto attributions = xai::shapley_exact(*model, probe, ref);
    FaithfulnessResult fr;
    fr.reference = kind;
    double err = 0.0;
    for (std::size_t i = 0; i < probe_idx.size(); ++i) {
      const auto rec = static_cast<std::size_t>(probe_idx[i]);
      const auto& a = attributions[i];
      fr.max_completeness_residual = std::max(fr.max_completeness_residual, std::abs(a.completeness_residual));
      FaithfulnessRow row{rec, test.records[rec].wind_speed_mean, *test.records[rec].yaw_misalignment(),
                          test.true_delta[rec], a.per_feature[scada::kYawFeature]};
      err += std::abs(row.relevance - row.true_delta);
      fr.rows.push_back(row);
    }
    fr.mean_abs_error = err / static_cast<double>(std::max<std::size_t>(1, fr.rows.size()));
    fr.bins = bin_faithfulness(fr.rows, cfg.case2.bin_kw);
    if (fr.max_completeness_residual > 1e-6) {
      throw DataError("attribution completeness check failed for reference " + xai::to_string(kind));
    }
    refs[xai::to_string(kind)] = {{"mean_abs_error_kw", fr.mean_abs_error},
                                  {"max_completeness_residual_kw", fr.max_completeness_residual}};
    rep.results_by_reference.push_back(std::move(fr));
  }

  auto& recs = rep.results.file("records.csv");
  recs << "reference,record,v_w,delta_yaw_deg,delta_p_true_kw,r_yaw_kw\n";
  auto& bins = rep.results.file("bins.csv");
  bins << "reference,delta_p_bin_lo,delta_p_bin_hi,count,delta_p_true_mean,r_yaw_mean,r_yaw_std\n";
  for (const auto& fr : rep.results_by_reference) {
    const auto name = xai::to_string(fr.reference);
    for (const auto& r : fr.rows) {
      recs << name << ',' << r.record << ',' << fmt(r.wind_speed) << ',' << fmt(r.yaw_deg) << ','
           << fmt(r.true_delta) << ',' << fmt(r.relevance) << '\n';
    }
    for (const auto& b : fr.bins) {
      bins << name << ',' << fmt(b.lo) << ',' << fmt(b.hi) << ',' << b.count << ',' << fmt(b.true_mean) << ','
           << fmt(b.relevance_mean) << ',' << fmt(b.relevance_std) << '\n';
    }
  }
  auto& s = rep.results.summary();
  s["config"] = cfg.to_json();
  s["model"] = {{"kind", models::to_string(cfg.case2.kind)},
                {"seed", seed},
                {"rmse_val", rep.model_eval.rmse_val},
                {"rmse_test", rep.model_eval.rmse_test},
                {"epochs", rep.model_eval.epochs}};
  s["references"] = refs;
  s["probe_size"] = probe_idx.size();
  s["warnings"] = warnings;
  return rep;
}

// ---------------------------------------------------------------------------
// Single-record explanations

struct Explanation {
  std::size_t record = 0;
  std::vector<double> features;   // physical units
  std::vector<double> reference;  // physical units
  xai::Attribution attribution;
};

/// Decomposes f(x) - f(x_ref) for one scaled row. The informed reference
/// gives the deviation from the expected output under mean ambient
/// conditions at this wind speed.
inline Explanation explain_instance(const models::Predictor& model, std::span<const double> scaled_row,
                                    const xai::ReferencePoint& ref) {
  Explanation e;
  e.attribution = xai::shapley_exact(model, scaled_row, ref);
  const auto& sc = model.scaler();
  for (std::size_t j = 0; j < scaled_row.size(); ++j) {
    e.features.push_back(sc.unscale(j, scaled_row[j]));
    e.reference.push_back(sc.unscale(j, e.attribution.reference[j]));
  }
  return e;
}

struct ExplainReport {
  std::vector<Explanation> explanations;
  ResultSet results;
};

inline ExplainReport run_explain(const ExperimentConfig& cfg) {
  const auto& ex = cfg.explain;
  const auto ds = load_dataset(cfg);
  const auto split = split_years(cfg, ds.records);
  const double rated = ds.physics.curve().rated_speed();
  std::unique_ptr<models::Predictor> model;
  bool yaw = ex.yaw;
  if (!ex.model_path.empty()) {
    model = models::load_model_file(ex.model_path);
    yaw = model->scaler().dim() > 3;
  }
  auto prepare = [&](const std::vector<ScadaRecord>& r, std::uint64_t i) {
    return yaw ? augment_yaw(r, ex.yaw_max_deg, rated, derive_seed(cfg.seed, "explain/yaw", i)).records : r;
  };
  const auto train = prepare(split.train, 0);
  const auto test = prepare(split.test, 2);
  const auto ftrain = scada::fit_features(train, yaw);
  if (!model) {
    const auto val = prepare(split.validation, 1);
    const auto fval = scada::make_features(val, ftrain.scaler, yaw);
    const auto spec = models::ModelSpec::make(ex.kind, derive_seed(cfg.seed, "explain/model"),
                                              cfg.models.overrides_for(ex.kind));
    model = models::train_model(spec, ftrain, fval, ds.physics);
  }
  // Features are scaled with the model's own scaler; the reference tables
  // come from the training rows expressed in that scaling.
  const auto fref = scada::make_features(train, model->scaler(), yaw);
  const auto ftest = scada::make_features(test, model->scaler(), yaw);
  const auto ref = xai::build_reference(ex.reference, fref, xai::informed_defaults(yaw ? 4 : 3));

  std::vector<std::size_t> picks = ex.rows;
  const auto probe_idx = strategy::stratified_probe(ftest, std::max<std::size_t>(ex.count, 3) * 50,
                                                    derive_seed(cfg.seed, "probe"));
  if (picks.empty()) {
    // Spread the picks over the stratified probe so several regimes appear.
    const std::size_t stride = std::max<std::size_t>(1, probe_idx.size() / std::max<std::size_t>(ex.count, 1));
    for (std::size_t i = 0; i < probe_idx.size() && picks.size() < ex.count; i += stride) {
      picks.push_back(static_cast<std::size_t>(probe_idx[i]));
    }
  }
  ExplainReport rep{{}, ResultSet("explain", cfg.hash())};
  const auto& names = ftest.names;
  auto& out = rep.results.file("attributions.csv");
  out << "record,timestamp,feature,value,reference_value,relevance_kw,model_output_kw,reference_output_kw,"
         "completeness_residual_kw\n";
  for (auto i : picks) {
    if (i >= static_cast<std::size_t>(ftest.size())) throw ConfigError("explain row index out of range");
    std::vector<double> row(static_cast<std::size_t>(ftest.rows.cols()));
    for (std::size_t j = 0; j < row.size(); ++j) row[j] = ftest.rows(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    auto e = explain_instance(*model, row, ref);
    e.record = i;
    if (std::abs(e.attribution.completeness_residual) > 1e-6) throw DataError("attribution completeness check failed");
    for (std::size_t j = 0; j < names.size(); ++j) {
      out << i << ',' << scada::format_timestamp(test[i].timestamp) << ',' << names[j] << ',' << fmt(e.features[j])
          << ',' << fmt(e.reference[j]) << ',' << fmt(e.attribution.per_feature[j]) << ','
          << fmt(e.attribution.model_output) << ',' << fmt(e.attribution.reference_output) << ','
          << fmt(e.attribution.completeness_residual) << '\n';
    }
    rep.explanations.push_back(std::move(e));
  }
  // Global view: attribution distributions over the probe, by wind speed.
  const Matrix probe = strategy::select_rows(ftest.rows, probe_idx);
  const auto attributions = xai::shapley_exact(*model, probe, ref);
  std::vector<double> speeds;
  for (auto i : probe_idx) speeds.push_back(test[static_cast<std::size_t>(i)].wind_speed_mean);
  const auto profile = xai::conditional_profile(attributions, speeds, ex.profile_bin_width);
  auto& prof = rep.results.file("profile.csv");
  prof << "model,v_bin_lo,v_bin_hi,feature,count,mean_kw,min_kw,max_kw\n";
  for (const auto& b : profile.bins) {
    for (std::size_t j = 0; j < b.mean.size(); ++j) {
      prof << models::to_string(model->kind()) << ',' << fmt(b.lo) << ',' << fmt(b.hi) << ',' << names.at(j) << ','
           << b.count << ',' << fmt(b.mean[j]) << ',' << fmt(b.min[j]) << ',' << fmt(b.max[j]) << '\n';
    }
  }
  auto& s = rep.results.summary();
  s["config"] = cfg.to_json();
  s["model"] = {{"kind", models::to_string(model->kind())}, {"seed", model->seed()}};
  s["reference"] = xai::to_string(ex.reference);
  s["explained"] = rep.explanations.size();
  s["warnings"] = ref.warnings();
  return rep;
}

// ---------------------------------------------------------------------------
// Synthetic data export

struct SynthReport {
  std::vector<ScadaRecord> records;
  ResultSet results;
};

inline SynthReport run_synth(const ExperimentConfig& cfg) {
  if (cfg.data.source != "synthetic") throw ConfigError("synth requires the synthetic data source");
  const auto phys = make_physics(cfg.physics);
  const auto truth = make_truth(cfg, phys);
  SynthReport rep{scada::synthesize_scada(cfg.data.synthetic, truth, cfg.data.records, derive_seed(cfg.seed, "data")),
                  ResultSet("synth", cfg.hash())};
  scada::write_scada_csv(rep.records, rep.results.file("records.csv"));
  const auto operational = static_cast<std::size_t>(std::count_if(rep.records.begin(), rep.records.end(),
                                                                    scada::is_operational));
  auto& s = rep.results.summary();
  s["config"] = cfg.to_json();
  s["records"] = rep.records.size();
  s["operational"] = operational;
  s["truth"] = models::physics_to_json(truth);
  return rep;
}

}  // namespace wtxai::experiments
