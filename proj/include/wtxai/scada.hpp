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

// 10-minute SCADA records: CSV ingest/export, operational filtering, TI bias
// correction, temporal splitting, min/max scaling and a synthetic generator.

#pragma once

#include <wtxai/common.hpp>
#include <wtxai/physics.hpp>

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

namespace wtxai::scada {

using Timestamp = std::chrono::sys_seconds;
using namespace std::chrono_literals;

inline constexpr auto kSampleInterval = std::chrono::seconds{600};

/// Parses "YYYY-MM-DD[T| ]HH:MM[:SS[.fff]][Z|+HH:MM|-HH:MM]" into UTC.
inline std::optional<Timestamp> parse_timestamp(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '"')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '"' || text.back() == '\r')) text.remove_suffix(1);
  int y = 0, mo = 0, d = 0, h = 0, mi = 0;
  double s = 0.0;
  char sep = 0;
  int consumed = 0;
  const std::string buf(text);
  if (std::sscanf(buf.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &consumed) != 6) {
    if (std::sscanf(buf.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3 ||
        static_cast<std::size_t>(consumed) != buf.size()) {
      return std::nullopt;
    }
    sep = 'T';
  }
  if (sep != 'T' && sep != ' ') return std::nullopt;
  std::string_view rest = std::string_view(buf).substr(static_cast<std::size_t>(consumed));
  if (!rest.empty() && rest.front() == ':') {
    int n = 0;
    if (std::sscanf(std::string(rest).c_str(), ":%lf%n", &s, &n) != 1) return std::nullopt;
    rest.remove_prefix(static_cast<std::size_t>(n));
  }
  int offset_min = 0;
  if (!rest.empty()) {
    if (rest == "Z" || rest == "z") {
      rest = {};
    } else if (rest.front() == '+' || rest.front() == '-') {
      int oh = 0, om = 0;
      const int sign = rest.front() == '-' ? -1 : 1;
      if (std::sscanf(std::string(rest.substr(1)).c_str(), "%2d:%2d", &oh, &om) != 2) return std::nullopt;
      offset_min = sign * (oh * 60 + om);
    } else {
      return std::nullopt;
    }
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0.0 || s >= 61.0) return std::nullopt;
  auto tp = std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} +
            std::chrono::seconds{static_cast<long long>(std::floor(s))};
  return Timestamp{tp - std::chrono::minutes{offset_min}};
}

inline std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

/// Fractional day of year in [0, 365.25).
inline double day_of_year(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const std::chrono::year_month_day ymd{day};
  const auto jan1 = std::chrono::sys_days{ymd.year() / std::chrono::January / 1};
  return std::chrono::duration<double, std::ratio<86400>>(t - jan1).count();
}

struct ScadaRecord {
  Timestamp timestamp{};
  double wind_speed_mean = 0.0;  // m/s
  double wind_speed_std = 0.0;   // m/s
  double air_temperature = 0.0;  // K
  double air_pressure = 0.0;     // Pa
  double rel_humidity = 0.0;     // fraction
  double power_output = 0.0;     // kW
  std::optional<double> nacelle_direction;  // deg
  std::optional<double> wind_direction;     // deg
  bool status_ok = true;

  bool operator==(const ScadaRecord&) const = default;

  double air_density() const { return physics::air_density(air_temperature, air_pressure, rel_humidity); }
  double turbulence_intensity() const { return physics::turbulence_intensity(wind_speed_std, wind_speed_mean); }
  /// Absolute angular difference between wind and nacelle direction, [0, 180].
  std::optional<double> yaw_misalignment() const {
    if (!nacelle_direction || !wind_direction) return std::nullopt;
    double d = std::fmod(std::abs(*wind_direction - *nacelle_direction), 360.0);
    return d > 180.0 ? 360.0 - d : d;
  }
};

// ---------------------------------------------------------------------------
// CSV schema and I/O

enum class TemperatureUnit { kelvin, celsius };

/// Maps dataset columns onto ScadaRecord fields. Direction and status columns
/// are optional and ignored when absent. Unit factors convert file units to
/// Pa and fractions.
struct ColumnSchema {
  std::string timestamp = "timestamp";
  std::string wind_speed_mean = "wind_speed_mean";
  std::string wind_speed_std = "wind_speed_std";
  std::string air_temperature = "air_temperature";
  std::string air_pressure = "air_pressure";
  std::string rel_humidity = "rel_humidity";
  std::string power_output = "power_output";
  std::string nacelle_direction = "nacelle_direction";
  std::string wind_direction = "wind_direction";
  std::string status = "status_ok";
  std::vector<std::string> status_ok_values = {"1", "true", "ok", "TRUE", "True"};
  std::string turbine_column;
  std::string turbine_id;
  TemperatureUnit temperature_unit = TemperatureUnit::kelvin;
  double pressure_factor = 1.0;
  double humidity_factor = 1.0;
  char delimiter = ',';

  static ColumnSchema generic() { return {}; }

  /// Merged EDP open-data turbine + met-mast export.
  static ColumnSchema edp() {
    ColumnSchema s;
    s.timestamp = "Timestamp";
    s.wind_speed_mean = "Amb_WindSpeed_Avg";
    s.wind_speed_std = "Amb_WindSpeed_Std";
    s.air_temperature = "Amb_Temp_Avg";
    s.air_pressure = "Avg_Pressure";
    s.rel_humidity = "Avg_Humidity";
    s.power_output = "Grd_Prod_Pwr_Avg";
    s.nacelle_direction = "Nac_Direction_Avg";
    s.wind_direction = "Amb_WindDir_Abs_Avg";
    s.status = "";
    s.turbine_column = "Turbine_ID";
    s.temperature_unit = TemperatureUnit::celsius;
    s.pressure_factor = 100.0;
    s.humidity_factor = 0.01;
    return s;
  }

  static ColumnSchema from_json(const nlohmann::json& j) {
    ColumnSchema s = j.value("preset", std::string("generic")) == "edp" ? edp() : generic();
    auto str = [&](const char* key, std::string& field) {
      if (j.contains(key)) field = j.at(key).get<std::string>();
    };
    str("timestamp", s.timestamp);
    str("wind_speed_mean", s.wind_speed_mean);
    str("wind_speed_std", s.wind_speed_std);
    str("air_temperature", s.air_temperature);
    str("air_pressure", s.air_pressure);
    str("rel_humidity", s.rel_humidity);
    str("power_output", s.power_output);
    str("nacelle_direction", s.nacelle_direction);
    str("wind_direction", s.wind_direction);
    str("status", s.status);
    str("turbine_column", s.turbine_column);
    str("turbine_id", s.turbine_id);
    if (j.contains("status_ok_values")) s.status_ok_values = j.at("status_ok_values").get<std::vector<std::string>>();
    if (j.contains("temperature_unit")) {
      const auto u = j.at("temperature_unit").get<std::string>();
      if (u == "K" || u == "kelvin") s.temperature_unit = TemperatureUnit::kelvin;
      else if (u == "C" || u == "celsius") s.temperature_unit = TemperatureUnit::celsius;
      else throw ConfigError("unknown temperature unit: " + u);
    }
    s.pressure_factor = j.value("pressure_factor", s.pressure_factor);
    s.humidity_factor = j.value("humidity_factor", s.humidity_factor);
    if (j.contains("delimiter")) {
      const auto d = j.at("delimiter").get<std::string>();
      if (d.size() != 1) throw ConfigError("delimiter must be a single character");
      s.delimiter = d[0];
    }
    return s;
  }
};

struct LoadResult {
  std::vector<ScadaRecord> records;
  std::size_t rejected = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char c : line) {
    if (c == '"') {
      quoted = !quoted;
    } else if (c == delim && !quoted) {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  for (auto& f : out) {
    const auto b = f.find_first_not_of(' ');
    const auto e = f.find_last_not_of(' ');
    f = b == std::string::npos ? std::string{} : f.substr(b, e - b + 1);
  }
  return out;
}

inline std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Reads a SCADA CSV. Rows with missing or invalid required values, or a
/// duplicate timestamp, are dropped and counted in `rejected`.
inline LoadResult load_scada_csv(const std::string& path, const ColumnSchema& schema = ColumnSchema::generic()) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open SCADA file: " + path);
  std::string header_line;
  if (!std::getline(in, header_line) || header_line.find_first_not_of(" \r\n") == std::string::npos) {
    throw DataError("empty SCADA file: " + path);
  }
  if (header_line.size() >= 3 && static_cast<unsigned char>(header_line[0]) == 0xEF) header_line.erase(0, 3);
  const auto header = detail::split_csv_line(header_line, schema.delimiter);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  auto required = [&](const std::string& name) {
    const auto it = col.find(name);
    if (name.empty() || it == col.end()) throw SchemaError("missing column '" + name + "' in " + path);
    return it->second;
  };
  auto optional_col = [&](const std::string& name) -> std::optional<std::size_t> {
    const auto it = col.find(name);
    if (name.empty() || it == col.end()) return std::nullopt;
    return it->second;
  };
  const auto c_ts = required(schema.timestamp);
  const auto c_ws = required(schema.wind_speed_mean);
  const auto c_sd = required(schema.wind_speed_std);
  const auto c_t = required(schema.air_temperature);
  const auto c_p = required(schema.air_pressure);
  const auto c_h = required(schema.rel_humidity);
  const auto c_pw = required(schema.power_output);
  const auto c_nac = optional_col(schema.nacelle_direction);
  const auto c_wd = optional_col(schema.wind_direction);
  const auto c_st = optional_col(schema.status);
  const auto c_tb = schema.turbine_id.empty() ? std::nullopt : std::optional(required(schema.turbine_column));

  LoadResult result;
  std::size_t data_rows = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \r") == std::string::npos) continue;
    ++data_rows;
    const auto f = detail::split_csv_line(line, schema.delimiter);
    if (c_tb && (*c_tb >= f.size() || f[*c_tb] != schema.turbine_id)) continue;
    auto get = [&](std::size_t c) { return c < f.size() ? detail::parse_double(f[c]) : std::nullopt; };
    const auto ts = c_ts < f.size() ? parse_timestamp(f[c_ts]) : std::nullopt;
    const auto ws = get(c_ws), sd = get(c_sd), t = get(c_t), p = get(c_p), h = get(c_h), pw = get(c_pw);
    if (!ts || !ws || !sd || !t || !p || !h || !pw) {
      ++result.rejected;
      continue;
    }
    ScadaRecord r;
    r.timestamp = *ts;
    r.wind_speed_mean = *ws;
    r.wind_speed_std = *sd;
    r.air_temperature = schema.temperature_unit == TemperatureUnit::celsius ? *t + 273.15 : *t;
    r.air_pressure = *p * schema.pressure_factor;
    r.rel_humidity = *h * schema.humidity_factor;
    r.power_output = *pw;
    if (c_nac) r.nacelle_direction = get(*c_nac);
    if (c_wd) r.wind_direction = get(*c_wd);
    if (c_st) {
      const std::string v = *c_st < f.size() ? f[*c_st] : std::string{};
      r.status_ok = std::find(schema.status_ok_values.begin(), schema.status_ok_values.end(), v) !=
                    schema.status_ok_values.end();
    }
    if (r.wind_speed_mean < 0.0 || r.wind_speed_std < 0.0 || r.rel_humidity < 0.0 || r.rel_humidity > 1.0 ||
        r.air_temperature <= 0.0 || r.air_pressure <= 0.0) {
      ++result.rejected;
      continue;
    }
    result.records.push_back(std::move(r));
  }
  if (data_rows == 0) throw DataError("SCADA file has no data rows: " + path);
  std::stable_sort(result.records.begin(), result.records.end(),
                   [](const ScadaRecord& a, const ScadaRecord& b) { return a.timestamp < b.timestamp; });
  std::vector<ScadaRecord> unique;
  unique.reserve(result.records.size());
  for (auto& r : result.records) {
    if (!unique.empty() && unique.back().timestamp == r.timestamp) {
      ++result.rejected;
      continue;
    }
    unique.push_back(std::move(r));
  }
  result.records = std::move(unique);
  return result;
}

/// Writes records in the generic schema; doubles use round-trip precision.
inline void write_scada_csv(const std::vector<ScadaRecord>& records, std::ostream& out) {
  out << "timestamp,wind_speed_mean,wind_speed_std,air_temperature,air_pressure,rel_humidity,power_output,"
         "nacelle_direction,wind_direction,status_ok\n";
  auto opt = [](const std::optional<double>& v) { return v ? detail::format_double(*v) : std::string{}; };
  for (const auto& r : records) {
    out << format_timestamp(r.timestamp) << ',' << detail::format_double(r.wind_speed_mean) << ','
        << detail::format_double(r.wind_speed_std) << ',' << detail::format_double(r.air_temperature) << ','
        << detail::format_double(r.air_pressure) << ',' << detail::format_double(r.rel_humidity) << ','
        << detail::format_double(r.power_output) << ',' << opt(r.nacelle_direction) << ','
        << opt(r.wind_direction) << ',' << (r.status_ok ? 1 : 0) << '\n';
  }
}

inline void write_scada_csv(const std::vector<ScadaRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write SCADA file: " + path);
  write_scada_csv(records, out);
}

// ---------------------------------------------------------------------------
// Filtering and TI bias correction

inline bool is_operational(const ScadaRecord& r) {
  const bool finite = std::isfinite(r.wind_speed_mean) && std::isfinite(r.wind_speed_std) &&
                      std::isfinite(r.air_temperature) && std::isfinite(r.air_pressure) &&
                      std::isfinite(r.rel_humidity) && std::isfinite(r.power_output);
  return finite && r.power_output > 0.0 && r.status_ok;
}

inline std::vector<ScadaRecord> filter_operational(const std::vector<ScadaRecord>& records) {
  std::vector<ScadaRecord> out;
  out.reserve(records.size());
  std::copy_if(records.begin(), records.end(), std::back_inserter(out), is_operational);
  return out;
}

/// Linear-interpolation quantile (type 7) of an unsorted sample.
inline double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw DataError("quantile of empty sample");
  std::sort(x.begin(), x.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

/// Target TI distribution (e.g. from a met mast) and the prune quantile
/// applied to the corrected nacelle TI.
struct TiReference {
  double mean = 0.0;
  double std = 0.0;
  double prune_quantile = 0.99;
};

inline TiReference summarize_ti(const std::vector<ScadaRecord>& records, double prune_quantile = 0.99) {
  std::vector<double> ti;
  for (const auto& r : records) {
    if (r.wind_speed_mean > 0.0) ti.push_back(r.turbulence_intensity());
  }
  return {mean(ti), sample_std(ti), prune_quantile};
}

/// Shifts every record's implied TI by (reference mean - nacelle mean) and
/// removes records whose corrected TI lies above the prune quantile.
/// Records with zero mean wind speed have no defined TI and pass unchanged.
inline std::vector<ScadaRecord> correct_ti_bias(const std::vector<ScadaRecord>& records, const TiReference& ref) {
  if (!(ref.std > 0.0)) throw ConfigError("TI reference has zero variance");
  if (!(ref.prune_quantile > 0.0 && ref.prune_quantile <= 1.0)) throw ConfigError("prune quantile must be in (0, 1]");
  std::vector<double> ti;
  for (const auto& r : records) {
    if (r.wind_speed_mean > 0.0) ti.push_back(r.turbulence_intensity());
  }
  if (ti.empty()) return records;
  const double shift = ref.mean - mean(ti);
  std::vector<ScadaRecord> corrected = records;
  std::vector<double> corrected_ti;
  for (auto& r : corrected) {
    if (r.wind_speed_mean > 0.0) {
      r.wind_speed_std = std::max(0.0, r.wind_speed_std + shift * r.wind_speed_mean);
      corrected_ti.push_back(r.turbulence_intensity());
    }
  }
  const double cap = quantile(corrected_ti, ref.prune_quantile);
  std::vector<ScadaRecord> out;
  out.reserve(corrected.size());
  for (auto& r : corrected) {
    if (r.wind_speed_mean > 0.0 && r.turbulence_intensity() > cap) continue;
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Temporal split

/// Half-open interval [begin, end).
struct TimeRange {
  Timestamp begin{};
  Timestamp end{};
  bool contains(Timestamp t) const { return t >= begin && t < end; }
  bool overlaps(const TimeRange& o) const { return begin < o.end && o.begin < end; }
};

struct SplitSpec {
  TimeRange train_range;
  TimeRange test_range;
  double validation_fraction = 0.20;
  std::uint64_t rng_seed = 0;
};

struct DatasetSplit {
  std::vector<ScadaRecord> train;
  std::vector<ScadaRecord> validation;
  std::vector<ScadaRecord> test;
};

/// Uniform validation sample without replacement, seeded. Each output set
/// keeps timestamp order.
inline std::pair<std::vector<ScadaRecord>, std::vector<ScadaRecord>> sample_validation(
    const std::vector<ScadaRecord>& pool, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("validation fraction must be in (0, 1)");
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(pool.size())));
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<char> is_val(pool.size(), 0);
  for (std::size_t k = 0; k < n_val; ++k) is_val[idx[k]] = 1;
  std::vector<ScadaRecord> train, val;
  train.reserve(pool.size() - n_val);
  val.reserve(n_val);
  for (std::size_t i = 0; i < pool.size(); ++i) (is_val[i] ? val : train).push_back(pool[i]);
  return {std::move(train), std::move(val)};
}

inline DatasetSplit temporal_split(const std::vector<ScadaRecord>& records, const SplitSpec& spec) {
  if (spec.train_range.overlaps(spec.test_range)) throw ConfigError("train and test ranges overlap");
  if (!(spec.train_range.begin < spec.train_range.end) || !(spec.test_range.begin < spec.test_range.end)) {
    throw ConfigError("empty split range");
  }
  std::vector<ScadaRecord> pool;
  DatasetSplit out;
  for (const auto& r : records) {
    if (spec.train_range.contains(r.timestamp)) pool.push_back(r);
    else if (spec.test_range.contains(r.timestamp)) out.test.push_back(r);
  }
  if (pool.empty()) throw DataError("no records in training range");
  auto [train, val] = sample_validation(pool, spec.validation_fraction, spec.rng_seed);
  out.train = std::move(train);
  out.validation = std::move(val);
  return out;
}

// ---------------------------------------------------------------------------
// Features and scaling

inline const std::vector<std::string>& feature_names(bool include_yaw) {
  static const std::vector<std::string> base = {"v_w", "rho", "TI"};
  static const std::vector<std::string> yaw = {"v_w", "rho", "TI", "delta_yaw"};
  return include_yaw ? yaw : base;
}

inline constexpr int kWindSpeedFeature = 0;
inline constexpr int kDensityFeature = 1;
inline constexpr int kTiFeature = 2;
inline constexpr int kYawFeature = 3;

/// Unscaled [v_w, rho, TI(, delta_yaw)] rows and kW targets.
inline std::pair<Matrix, Vector> extract_features(const std::vector<ScadaRecord>& records, bool include_yaw) {
  const Eigen::Index d = include_yaw ? 4 : 3;
  Matrix x(static_cast<Eigen::Index>(records.size()), d);
  Vector y(static_cast<Eigen::Index>(records.size()));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto row = static_cast<Eigen::Index>(i);
    x(row, 0) = r.wind_speed_mean;
    x(row, 1) = r.air_density();
    x(row, 2) = r.wind_speed_mean > 0.0 ? r.turbulence_intensity() : 0.0;
    if (include_yaw) {
      const auto yaw = r.yaw_misalignment();
      if (!yaw) throw DataError("yaw feature requested but record lacks direction data");
      x(row, 3) = *yaw;
    }
    y(row) = r.power_output;
  }
  return {std::move(x), std::move(y)};
}

/// Per-feature min/max scaling to [0, 1] on the fitted data. Values outside
/// the fitted range map outside [0, 1]; nothing is clipped.
class MinMaxScaler {
 public:
  MinMaxScaler() = default;
  MinMaxScaler(std::vector<double> min, std::vector<double> max) : min_(std::move(min)), max_(std::move(max)) {
    if (min_.size() != max_.size()) throw ScalerError("scaler min/max size mismatch");
    for (std::size_t j = 0; j < min_.size(); ++j) {
      if (!(min_[j] < max_[j])) throw ScalerError("constant feature " + std::to_string(j) + " cannot be scaled");
    }
  }

  static MinMaxScaler fit(const Matrix& rows) {
    if (rows.rows() == 0) throw ScalerError("cannot fit scaler on empty data");
    std::vector<double> lo(static_cast<std::size_t>(rows.cols())), hi(lo.size());
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      lo[static_cast<std::size_t>(j)] = rows.col(j).minCoeff();
      hi[static_cast<std::size_t>(j)] = rows.col(j).maxCoeff();
    }
    return MinMaxScaler(std::move(lo), std::move(hi));
  }

  std::size_t dim() const { return min_.size(); }
  double min(std::size_t j) const { return min_[j]; }
  double max(std::size_t j) const { return max_[j]; }
  const std::vector<double>& mins() const { return min_; }
  const std::vector<double>& maxs() const { return max_; }

  double scale(std::size_t j, double v) const { return (v - min_[j]) / (max_[j] - min_[j]); }
  double unscale(std::size_t j, double s) const { return min_[j] + s * (max_[j] - min_[j]); }

  Matrix transform(const Matrix& rows) const {
    check(rows);
    Matrix out(rows.rows(), rows.cols());
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      const auto k = static_cast<std::size_t>(j);
      out.col(j) = (rows.col(j).array() - min_[k]) / (max_[k] - min_[k]);
    }
    return out;
  }

  Matrix inverse_transform(const Matrix& rows) const {
    check(rows);
    Matrix out(rows.rows(), rows.cols());
    for (Eigen::Index j = 0; j < rows.cols(); ++j) {
      const auto k = static_cast<std::size_t>(j);
      out.col(j) = rows.col(j).array() * (max_[k] - min_[k]) + min_[k];
    }
    return out;
  }

  nlohmann::json to_json() const { return {{"min", min_}, {"max", max_}}; }
  static MinMaxScaler from_json(const nlohmann::json& j) {
    return MinMaxScaler(j.at("min").get<std::vector<double>>(), j.at("max").get<std::vector<double>>());
  }

 private:
  void check(const Matrix& rows) const {
    if (static_cast<std::size_t>(rows.cols()) != min_.size()) throw ScalerError("scaler dimension mismatch");
  }
  std::vector<double> min_;
  std::vector<double> max_;
};

/// Scaled model inputs with the scaler that produced them.
struct FeatureMatrix {
  Matrix rows;
  Vector targets;
  MinMaxScaler scaler;
  std::vector<std::string> names;

  Eigen::Index size() const { return rows.rows(); }
  Matrix unscaled() const { return scaler.inverse_transform(rows); }
};

inline FeatureMatrix make_features(const std::vector<ScadaRecord>& records, const MinMaxScaler& scaler,
                                   bool include_yaw) {
  auto [x, y] = extract_features(records, include_yaw);
  return {scaler.transform(x), std::move(y), scaler, feature_names(include_yaw)};
}

/// Fits the scaler on these records and returns them scaled.
inline FeatureMatrix fit_features(const std::vector<ScadaRecord>& records, bool include_yaw) {
  auto [x, y] = extract_features(records, include_yaw);
  auto scaler = MinMaxScaler::fit(x);
  return {scaler.transform(x), std::move(y), scaler, feature_names(include_yaw)};
}

// ---------------------------------------------------------------------------
// Synthetic generator

/// Settings for physics-generated SCADA data. Wind speed follows a Weibull
/// marginal with optional AR(1) persistence (Gaussian copula) and seasonal
/// scale modulation; density and TI are uniform in their ranges or follow an
/// annual cycle. Optional cold-weather derating contaminates a share of the
/// records with non-physical losses whose frequency grows with density.
struct SyntheticConfig {
  Timestamp start = Timestamp{std::chrono::sys_days{std::chrono::year{2016} / 1 / 1}};
  double weibull_shape = 2.0;
  double weibull_scale = 8.0;
  double wind_autocorrelation = 0.0;
  double wind_seasonal_amplitude = 0.0;
  double density_min = 1.15;
  double density_max = 1.32;
  bool density_seasonal = false;
  double ti_min = 0.03;
  double ti_max = 0.20;
  bool ti_seasonal = false;
  double noise_std_kw = 0.0;
  double yaw_min_deg = 0.0;
  double yaw_max_deg = 0.0;
  double derate_fraction = 0.0;
  double derate_max = 0.0;

  static SyntheticConfig from_json(const nlohmann::json& j) {
    SyntheticConfig c;
    if (j.contains("start")) {
      const auto t = parse_timestamp(j.at("start").get<std::string>());
      if (!t) throw ConfigError("bad synthetic start timestamp");
      c.start = *t;
    }
    c.weibull_shape = j.value("weibull_shape", c.weibull_shape);
    c.weibull_scale = j.value("weibull_scale", c.weibull_scale);
    c.wind_autocorrelation = j.value("wind_autocorrelation", c.wind_autocorrelation);
    c.wind_seasonal_amplitude = j.value("wind_seasonal_amplitude", c.wind_seasonal_amplitude);
    c.density_min = j.value("density_min", c.density_min);
    c.density_max = j.value("density_max", c.density_max);
    c.density_seasonal = j.value("density_seasonal", c.density_seasonal);
    c.ti_min = j.value("ti_min", c.ti_min);
    c.ti_max = j.value("ti_max", c.ti_max);
    c.ti_seasonal = j.value("ti_seasonal", c.ti_seasonal);
    c.noise_std_kw = j.value("noise_std_kw", c.noise_std_kw);
    c.yaw_min_deg = j.value("yaw_min_deg", c.yaw_min_deg);
    c.yaw_max_deg = j.value("yaw_max_deg", c.yaw_max_deg);
    c.derate_fraction = j.value("derate_fraction", c.derate_fraction);
    c.derate_max = j.value("derate_max", c.derate_max);
    return c;
  }

  nlohmann::json to_json() const {
    return {{"start", format_timestamp(start)},
            {"weibull_shape", weibull_shape},
            {"weibull_scale", weibull_scale},
            {"wind_autocorrelation", wind_autocorrelation},
            {"wind_seasonal_amplitude", wind_seasonal_amplitude},
            {"density_min", density_min},
            {"density_max", density_max},
            {"density_seasonal", density_seasonal},
            {"ti_min", ti_min},
            {"ti_max", ti_max},
            {"ti_seasonal", ti_seasonal},
            {"noise_std_kw", noise_std_kw},
            {"yaw_min_deg", yaw_min_deg},
            {"yaw_max_deg", yaw_max_deg},
            {"derate_fraction", derate_fraction},
            {"derate_max", derate_max}};
  }

  void validate() const {
    if (noise_std_kw < 0.0) throw ConfigError("noise std must be non-negative");
    if (!(weibull_shape > 0.0 && weibull_scale > 0.0)) throw ConfigError("Weibull parameters must be positive");
    if (!(density_min > 0.0 && density_min <= density_max)) throw ConfigError("invalid density range");
    if (!(ti_min >= 0.0 && ti_min <= ti_max)) throw ConfigError("invalid TI range");
    if (!(yaw_min_deg >= 0.0 && yaw_min_deg <= yaw_max_deg && yaw_max_deg < 90.0)) {
      throw ConfigError("invalid yaw misalignment range");
    }
    if (!(wind_autocorrelation >= 0.0 && wind_autocorrelation < 1.0)) {
      throw ConfigError("wind autocorrelation must be in [0, 1)");
    }
    if (!(derate_fraction >= 0.0 && derate_fraction <= 1.0 && derate_max >= 0.0 && derate_max <= 1.0)) {
      throw ConfigError("invalid derate settings");
    }
  }
};

/// Generates n records on the 10-minute grid. The target is the given
/// physics model's prediction from the record's own derived features, times
/// the yaw factor, optionally derated, plus Gaussian noise; floored at 0 and
/// capped at rated power.
inline std::vector<ScadaRecord> synthesize_scada(const SyntheticConfig& cfg, const physics::PhysBase& truth,
                                                 std::size_t n, std::uint64_t rng_seed) {
  cfg.validate();
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  const double rho_mid = 0.5 * (cfg.density_min + cfg.density_max);
  const double rho_half = 0.5 * (cfg.density_max - cfg.density_min);
  const double ti_mid = 0.5 * (cfg.ti_min + cfg.ti_max);
  const double ti_half = 0.5 * (cfg.ti_max - cfg.ti_min);
  const double rated_power = truth.curve().rated_power();

  std::vector<ScadaRecord> out;
  out.reserve(n);
  double latent = gauss(rng);
  const double phi = cfg.wind_autocorrelation;
  const double innovation = std::sqrt(1.0 - phi * phi);
  for (std::size_t i = 0; i < n; ++i) {
    ScadaRecord r;
    r.timestamp = cfg.start + kSampleInterval * static_cast<long long>(i);
    // Annual phase: 1 in mid-January (cold, dense, windy), -1 in mid-July.
    const double season = std::cos(two_pi * (day_of_year(r.timestamp) - 15.0) / 365.25);

    if (i > 0) latent = phi * latent + innovation * gauss(rng);
    const double u = std::clamp(0.5 * std::erfc(-latent / std::numbers::sqrt2), 1e-12, 1.0 - 1e-12);
    const double scale = cfg.weibull_scale * (1.0 + cfg.wind_seasonal_amplitude * season);
    const double v = scale * std::pow(-std::log1p(-u), 1.0 / cfg.weibull_shape);

    double rho = cfg.density_seasonal ? rho_mid + rho_half * (0.7 * season + 0.3 * (2.0 * unit(rng) - 1.0))
                                      : cfg.density_min + (cfg.density_max - cfg.density_min) * unit(rng);
    double ti = cfg.ti_seasonal ? ti_mid + ti_half * (-0.6 * season + 0.4 * (2.0 * unit(rng) - 1.0))
                                : cfg.ti_min + (cfg.ti_max - cfg.ti_min) * unit(rng);
    rho = std::clamp(rho, cfg.density_min, cfg.density_max);
    ti = std::clamp(ti, cfg.ti_min, cfg.ti_max);

    const double humidity = 0.4 + 0.55 * unit(rng);
    const double nominal_pressure = 101325.0 + 800.0 * gauss(rng);
    const double temperature = nominal_pressure / (physics::kGasConstantDryAir * rho);
    r.wind_speed_mean = v;
    r.wind_speed_std = ti * v;
    r.air_temperature = temperature;
    r.rel_humidity = humidity;
    r.air_pressure = physics::pressure_for_density(rho, temperature, humidity);

    const double wind_dir = 360.0 * unit(rng);
    double yaw = 0.0;
    if (cfg.yaw_max_deg > 0.0) yaw = cfg.yaw_min_deg + (cfg.yaw_max_deg - cfg.yaw_min_deg) * unit(rng);
    r.wind_direction = wind_dir;
    r.nacelle_direction = std::fmod(wind_dir + yaw, 360.0);

    // Features exactly as a consumer will recompute them from the record.
    const double rho_rec = r.air_density();
    const double ti_rec = r.turbulence_intensity();
    double p = truth.predict(v, rho_rec, ti_rec);
    if (cfg.yaw_max_deg > 0.0) p *= physics::yaw_power_factor(*r.yaw_misalignment(), v, truth.curve().rated_speed());
    const double derate_draw = unit(rng);
    const double derate_level = unit(rng);
    if (cfg.derate_fraction > 0.0) {
      const double cold = (rho_rec - cfg.density_min) / std::max(cfg.density_max - cfg.density_min, 1e-12);
      if (derate_draw < std::min(1.0, 2.0 * cfg.derate_fraction * cold)) p *= 1.0 - cfg.derate_max * derate_level;
    }
    const double noise = gauss(rng);
    // A storm stop is logged as a stoppage and reports no production.
    const bool stopped = v >= truth.curve().cut_out();
    if (cfg.noise_std_kw > 0.0 && !stopped) p += cfg.noise_std_kw * noise;
    r.power_output = stopped ? 0.0 : std::clamp(p, 0.0, rated_power);
    r.status_ok = !stopped;
    out.push_back(std::move(r));
  }
  return out;
}

/// Number of 10-minute samples between two instants.
inline std::size_t samples_between(Timestamp begin, Timestamp end) {
  return static_cast<std::size_t>((end - begin) / kSampleInterval);
}

}  // namespace wtxai::scada
