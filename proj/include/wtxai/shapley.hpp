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

// Exact baseline-replacement Shapley values. A feature outside the coalition
// takes its reference value; attributions therefore sum to f(x) - f(x_ref).

#pragma once

#include <wtxai/predictor.hpp>

#include <bit>
#include <cstdio>
#include <fstream>
#include <map>

namespace wtxai::xai {

inline constexpr int kMaxExactFeatures = 16;

enum class ReferenceKind { zeros, train_minimum, train_mean, informed_conditional };

inline std::string to_string(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::zeros: return "zeros";
    case ReferenceKind::train_minimum: return "train_minimum";
    case ReferenceKind::train_mean: return "train_mean";
    case ReferenceKind::informed_conditional: return "informed";
  }
  return "unknown";
}

inline ReferenceKind reference_kind_from_string(const std::string& s) {
  if (s == "zeros") return ReferenceKind::zeros;
  if (s == "train_minimum" || s == "minimum" || s == "min") return ReferenceKind::train_minimum;
  if (s == "train_mean" || s == "mean") return ReferenceKind::train_mean;
  if (s == "informed" || s == "informed_conditional") return ReferenceKind::informed_conditional;
  throw ConfigError("unknown reference kind: " + s);
}

/// Per-feature E[x_i | v_w] in scaled units, tabulated on bins of width
/// `bin_width` m/s centred on multiples of the width.
struct ConditionalTable {
  double bin_width = 0.5;
  std::vector<double> centers;  // m/s, ascending
  Matrix means;                 // bins x features, scaled
};

class ReferencePoint {
 public:
  ReferencePoint() = default;
  ReferencePoint(ReferenceKind kind, std::vector<double> values) : kind_(kind), values_(std::move(values)) {}
  ReferencePoint(ConditionalTable table, scada::MinMaxScaler scaler, std::map<int, double> pinned_scaled,
                 std::vector<std::string> warnings)
      : kind_(ReferenceKind::informed_conditional),
        table_(std::move(table)),
        scaler_(std::move(scaler)),
        pinned_(std::move(pinned_scaled)),
        warnings_(std::move(warnings)) {}

  ReferenceKind kind() const { return kind_; }
  bool per_row() const { return kind_ == ReferenceKind::informed_conditional; }
  const std::vector<double>& values() const { return values_; }
  const ConditionalTable& table() const { return table_; }
  const std::vector<std::string>& warnings() const { return warnings_; }
  const std::map<int, double>& pinned() const { return pinned_; }

  /// Reference vector for a scaled input row.
  template <typename Row>
  void fill(const Row& x, double* out) const {
    const auto d = static_cast<std::size_t>(x.size());
    if (!per_row()) {
      if (values_.size() != d) throw DataError("reference dimension does not match input");
      std::copy(values_.begin(), values_.end(), out);
      return;
    }
    if (static_cast<std::size_t>(table_.means.cols()) != d) throw DataError("reference dimension does not match input");
    const double v = scaler_.unscale(0, x(0));
    const auto& c = table_.centers;
    std::size_t lo = 0, hi = 0;
    double t = 0.0;
    if (v <= c.front()) {
      lo = hi = 0;
    } else if (v >= c.back()) {
      lo = hi = c.size() - 1;
    } else {
      hi = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), v) - c.begin());
      lo = hi - 1;
      t = (v - c[lo]) / (c[hi] - c[lo]);
    }
    for (std::size_t j = 0; j < d; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      out[j] = (1.0 - t) * table_.means(static_cast<Eigen::Index>(lo), jj) +
               t * table_.means(static_cast<Eigen::Index>(hi), jj);
    }
    out[0] = x(0);  // E[v_w | v_w] = v_w
    for (const auto& [j, value] : pinned_) out[static_cast<std::size_t>(j)] = value;
  }

  std::vector<double> for_row(std::span<const double> row) const {
    std::vector<double> out(row.size());
    Eigen::Map<const Eigen::RowVectorXd> r(row.data(), static_cast<Eigen::Index>(row.size()));
    fill(r, out.data());
    return out;
  }

 private:
  ReferenceKind kind_ = ReferenceKind::zeros;
  std::vector<double> values_;
  ConditionalTable table_;
  scada::MinMaxScaler scaler_;
  std::map<int, double> pinned_;
  std::vector<std::string> warnings_;
};

struct ReferenceOptions {
  double bin_width = 0.5;                  // m/s, informed kind only
  std::map<int, double> pinned_physical;   // feature index -> physical value
};

/// Default informed options: yaw misalignment pinned to 0 deg when present.
inline ReferenceOptions informed_defaults(std::size_t features) {
  ReferenceOptions o;
  if (features > static_cast<std::size_t>(scada::kYawFeature)) o.pinned_physical[scada::kYawFeature] = 0.0;
  return o;
}

inline ReferencePoint build_reference(ReferenceKind kind, const scada::FeatureMatrix& train,
                                      const ReferenceOptions& options = {}) {
  if (train.size() == 0) throw DataError("cannot build a reference from empty training data");
  const auto d = train.rows.cols();
  switch (kind) {
    case ReferenceKind::zeros:
      return {kind, std::vector<double>(static_cast<std::size_t>(d), 0.0)};
    case ReferenceKind::train_minimum:
    case ReferenceKind::train_mean: {
      std::vector<double> v(static_cast<std::size_t>(d));
      for (Eigen::Index j = 0; j < d; ++j) {
        v[static_cast<std::size_t>(j)] =
            kind == ReferenceKind::train_mean ? train.rows.col(j).mean() : train.rows.col(j).minCoeff();
      }
      return {kind, std::move(v)};
    }
    case ReferenceKind::informed_conditional: {
      if (!(options.bin_width > 0.0)) throw ConfigError("bin width must be positive");
      const double w = options.bin_width;
      auto bin_of = [&](double v) { return static_cast<long long>(std::floor(v / w + 0.5)); };
      long long kmin = std::numeric_limits<long long>::max(), kmax = std::numeric_limits<long long>::min();
      for (Eigen::Index i = 0; i < train.size(); ++i) {
        const long long k = bin_of(train.scaler.unscale(0, train.rows(i, 0)));
        kmin = std::min(kmin, k);
        kmax = std::max(kmax, k);
      }
      const auto nb = static_cast<Eigen::Index>(kmax - kmin + 1);
      Matrix sums = Matrix::Zero(nb, d);
      std::vector<std::size_t> counts(static_cast<std::size_t>(nb), 0);
      for (Eigen::Index i = 0; i < train.size(); ++i) {
        const auto b = static_cast<Eigen::Index>(bin_of(train.scaler.unscale(0, train.rows(i, 0))) - kmin);
        sums.row(b) += train.rows.row(i);
        ++counts[static_cast<std::size_t>(b)];
      }
      ConditionalTable table;
      table.bin_width = w;
      table.means = Matrix::Zero(nb, d);
      std::vector<std::string> warnings;
      std::vector<Eigen::Index> filled;
      for (Eigen::Index b = 0; b < nb; ++b) {
        table.centers.push_back(static_cast<double>(kmin + b) * w);
        if (counts[static_cast<std::size_t>(b)] > 0) {
          table.means.row(b) = sums.row(b) / static_cast<double>(counts[static_cast<std::size_t>(b)]);
          filled.push_back(b);
        }
      }
      for (Eigen::Index b = 0; b < nb; ++b) {
        if (counts[static_cast<std::size_t>(b)] > 0) continue;
        Eigen::Index nearest = filled.front();
        for (auto f : filled) {
          if (std::abs(f - b) < std::abs(nearest - b)) nearest = f;
        }
        table.means.row(b) = table.means.row(nearest);
        char msg[128];
        std::snprintf(msg, sizeof msg, "empty wind-speed bin centred at %.2f m/s filled from %.2f m/s",
                      table.centers[static_cast<std::size_t>(b)], table.centers[static_cast<std::size_t>(nearest)]);
        warnings.emplace_back(msg);
      }
      std::map<int, double> pinned;
      for (const auto& [j, value] : options.pinned_physical) {
        if (j <= 0 || j >= d) throw ConfigError("pinned feature index out of range");
        pinned[j] = train.scaler.scale(static_cast<std::size_t>(j), value);
      }
      return {std::move(table), train.scaler, std::move(pinned), std::move(warnings)};
    }
  }
  throw ConfigError("unhandled reference kind");
}

struct Attribution {
  std::vector<double> per_feature;  // kW
  double model_output = 0.0;
  double reference_output = 0.0;
  double completeness_residual = 0.0;  // sum(R) - (f(x) - f(ref))
  std::vector<double> reference;       // scaled reference actually used

  double sum() const { return std::accumulate(per_feature.begin(), per_feature.end(), 0.0); }
};

/// |S|!(N-|S|-1)!/N! for |S| = 0..N-1.
inline std::vector<double> shapley_weights(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    double v = 1.0 / n;
    // s!(n-s-1)!/(n-1)! = 1 / C(n-1, s)
    double binom = 1.0;
    for (int k = 1; k <= s; ++k) binom = binom * (n - 1 - s + k) / k;
    w[static_cast<std::size_t>(s)] = v / binom;
  }
  return w;
}

/// Exact Shapley attributions for every row of `rows` (scaled inputs).
inline std::vector<Attribution> shapley_exact(const models::Predictor& model, const Matrix& rows,
                                              const ReferencePoint& ref) {
  const auto n = static_cast<int>(rows.cols());
  if (n > kMaxExactFeatures) {
    throw CapabilityError("exact Shapley limited to " + std::to_string(kMaxExactFeatures) +
                          " features; a sampling approximation is required");
  }
  if (n < 1) throw DataError("no features to attribute");
  const std::size_t coalitions = std::size_t{1} << n;
  const auto weights = shapley_weights(n);
  const std::size_t chunk = std::max<std::size_t>(1, 65536 / coalitions);
  std::vector<Attribution> out(static_cast<std::size_t>(rows.rows()));
  std::vector<double> reference(static_cast<std::size_t>(n));
  for (Eigen::Index start = 0; start < rows.rows(); start += static_cast<Eigen::Index>(chunk)) {
    const Eigen::Index stop = std::min(rows.rows(), start + static_cast<Eigen::Index>(chunk));
    Matrix probe((stop - start) * static_cast<Eigen::Index>(coalitions), n);
    for (Eigen::Index r = start; r < stop; ++r) {
      ref.fill(rows.row(r), reference.data());
      out[static_cast<std::size_t>(r)].reference = reference;
      const Eigen::Index base = (r - start) * static_cast<Eigen::Index>(coalitions);
      for (std::size_t mask = 0; mask < coalitions; ++mask) {
        for (int j = 0; j < n; ++j) {
          probe(base + static_cast<Eigen::Index>(mask), j) =
              (mask >> j) & 1U ? rows(r, j) : reference[static_cast<std::size_t>(j)];
        }
      }
    }
    const Vector f = model.predict(probe);
    for (Eigen::Index r = start; r < stop; ++r) {
      const Eigen::Index base = (r - start) * static_cast<Eigen::Index>(coalitions);
      auto& a = out[static_cast<std::size_t>(r)];
      a.per_feature.assign(static_cast<std::size_t>(n), 0.0);
      for (std::size_t mask = 0; mask < coalitions; ++mask) {
        const double w = weights[static_cast<std::size_t>(std::popcount(mask))];
        for (int i = 0; i < n; ++i) {
          if ((mask >> i) & 1U) continue;
          const auto with = static_cast<Eigen::Index>(mask | (std::size_t{1} << i));
          a.per_feature[static_cast<std::size_t>(i)] +=
              w * (f(base + with) - f(base + static_cast<Eigen::Index>(mask)));
        }
      }
      a.model_output = f(base + static_cast<Eigen::Index>(coalitions - 1));
      a.reference_output = f(base);
      a.completeness_residual = a.sum() - (a.model_output - a.reference_output);
    }
  }
  return out;
}

inline Attribution shapley_exact(const models::Predictor& model, std::span<const double> row,
                                 const ReferencePoint& ref) {
  Matrix m(1, static_cast<Eigen::Index>(row.size()));
  for (std::size_t j = 0; j < row.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = row[j];
  return shapley_exact(model, m, ref).front();
}

/// Attribution matrix (rows x features) for correlation analyses.
inline Matrix attribution_matrix(const std::vector<Attribution>& attributions) {
  if (attributions.empty()) return {};
  Matrix m(static_cast<Eigen::Index>(attributions.size()),
           static_cast<Eigen::Index>(attributions.front().per_feature.size()));
  for (std::size_t i = 0; i < attributions.size(); ++i) {
    for (std::size_t j = 0; j < attributions[i].per_feature.size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = attributions[i].per_feature[j];
    }
  }
  return m;
}

struct ProfileBin {
  double lo = 0.0;  // m/s
  double hi = 0.0;
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> min;
  std::vector<double> max;
};

/// Attribution distributions conditioned on measured wind speed.
struct ConditionalAttributionProfile {
  double bin_width = 0.5;
  std::vector<ProfileBin> bins;  // occupied bins only, ascending
};

inline ConditionalAttributionProfile conditional_profile(const std::vector<Attribution>& attributions,
                                                         std::span<const double> wind_speeds, double bin_width) {
  if (attributions.size() != wind_speeds.size()) throw DataError("attribution/wind speed length mismatch");
  if (!(bin_width > 0.0)) throw ConfigError("bin width must be positive");
  std::map<long long, ProfileBin> bins;
  for (std::size_t i = 0; i < attributions.size(); ++i) {
    const auto k = static_cast<long long>(std::floor(wind_speeds[i] / bin_width));
    auto& b = bins[k];
    const auto& r = attributions[i].per_feature;
    if (b.count == 0) {
      b.lo = static_cast<double>(k) * bin_width;
      b.hi = b.lo + bin_width;
      b.mean.assign(r.size(), 0.0);
      b.min = r;
      b.max = r;
    }
    ++b.count;
    for (std::size_t j = 0; j < r.size(); ++j) {
      b.mean[j] += r[j];
      b.min[j] = std::min(b.min[j], r[j]);
      b.max[j] = std::max(b.max[j], r[j]);
    }
  }
  ConditionalAttributionProfile profile;
  profile.bin_width = bin_width;
  for (auto& [k, b] : bins) {
    for (auto& m : b.mean) m /= static_cast<double>(b.count);
    profile.bins.push_back(std::move(b));
  }
  return profile;
}

inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

/// Long format: row_id, feature, relevance_kw, completeness_residual_kw.
inline void write_attributions_csv(const std::string& path, const std::vector<Attribution>& attributions,
                                   const std::vector<std::string>& names) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "row_id,feature,relevance_kw,completeness_residual_kw\n";
  for (std::size_t i = 0; i < attributions.size(); ++i) {
    for (std::size_t j = 0; j < attributions[i].per_feature.size(); ++j) {
      out << i << ',' << names.at(j) << ',' << format_value(attributions[i].per_feature[j]) << ','
          << format_value(attributions[i].completeness_residual) << '\n';
    }
  }
}

/// Tidy profile: one line per (bin, feature).
inline void write_profile_csv(const std::string& path, const ConditionalAttributionProfile& profile,
                              const std::vector<std::string>& names, const std::string& model_id = "") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "model,v_bin_lo,v_bin_hi,feature,count,mean_kw,min_kw,max_kw\n";
  for (const auto& b : profile.bins) {
    for (std::size_t j = 0; j < b.mean.size(); ++j) {
      out << model_id << ',' << format_value(b.lo) << ',' << format_value(b.hi) << ',' << names.at(j) << ','
          << b.count << ',' << format_value(b.mean[j]) << ',' << format_value(b.min[j]) << ','
          << format_value(b.max[j]) << '\n';
    }
  }
}

}  // namespace wtxai::xai
