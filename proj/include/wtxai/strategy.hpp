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

// Strategy similarity between a data-driven model and the physics baseline:
// per-feature correlation of attributions over a probe set (R2_feat) and
// their weighted sum (R2_phys), plus threshold-and-score model selection.

#pragma once

#include <wtxai/shapley.hpp>

#include <optional>

namespace wtxai::strategy {

inline const std::vector<double>& default_weights() {
  static const std::vector<double> w = {0.8, 0.15, 0.05};
  return w;
}

struct FeatureCorrelation {
  double r = 0.0;
  bool degenerate = false;  // zero-variance series; r is 0, or 1 if both series are equal
};

/// Pearson correlation per feature column. Set `squared` for r^2 instead.
inline std::vector<FeatureCorrelation> r2_feature(const Matrix& r_ml, const Matrix& r_phys, bool squared = false) {
  if (r_ml.rows() != r_phys.rows() || r_ml.cols() != r_phys.cols()) {
    throw DataError("attribution series shape mismatch");
  }
  if (r_ml.rows() < 3) throw DataError("need at least 3 probe rows for correlation");
  std::vector<FeatureCorrelation> out(static_cast<std::size_t>(r_ml.cols()));
  std::vector<double> a(static_cast<std::size_t>(r_ml.rows())), b(a.size());
  for (Eigen::Index j = 0; j < r_ml.cols(); ++j) {
    for (Eigen::Index i = 0; i < r_ml.rows(); ++i) {
      a[static_cast<std::size_t>(i)] = r_ml(i, j);
      b[static_cast<std::size_t>(i)] = r_phys(i, j);
    }
    const double r = pearson(a, b);
    auto& c = out[static_cast<std::size_t>(j)];
    if (std::isnan(r)) {
      // Identical constant series agree trivially, e.g. wind speed under the
      // informed reference, which never moves v_w away from the input.
      c = {a == b ? 1.0 : 0.0, true};
    } else {
      c = {squared ? r * r : r, false};
    }
  }
  return out;
}

inline void validate_weights(std::span<const double> weights, std::size_t features) {
  if (weights.size() != features) throw ConfigError("weight count does not match feature count");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ConfigError("strategy weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("strategy weights must sum to 1");
}

inline double r2_phys(std::span<const double> correlations, std::span<const double> weights = default_weights()) {
  validate_weights(weights, correlations.size());
  double s = 0.0;
  for (std::size_t i = 0; i < correlations.size(); ++i) s += weights[i] * correlations[i];
  return s;
}

inline double r2_phys(const std::vector<FeatureCorrelation>& correlations,
                      std::span<const double> weights = default_weights()) {
  std::vector<double> r;
  for (const auto& c : correlations) r.push_back(c.r);
  return r2_phys(r, weights);
}

struct StrategyReport {
  std::vector<FeatureCorrelation> per_feature;
  std::vector<double> weights;
  double r2_phys = 0.0;
  std::size_t probe_size = 0;
  std::string model_kind;
  std::uint64_t seed = 0;
  std::string training_period;

  double r(std::size_t j) const { return per_feature.at(j).r; }
  bool any_degenerate() const {
    return std::any_of(per_feature.begin(), per_feature.end(), [](const auto& c) { return c.degenerate; });
  }
};

struct StrategyOptions {
  std::vector<double> weights = default_weights();
  bool squared = false;
  std::string training_period;
};

/// Attributes both models on the probe rows with the same reference point
/// and compares the attributions on the features the weights cover.
inline StrategyReport evaluate_strategy(const models::Predictor& model, const models::Predictor& physics,
                                        const Matrix& probe, const xai::ReferencePoint& ref,
                                        const StrategyOptions& options = {}) {
  const auto k = static_cast<Eigen::Index>(options.weights.size());
  if (probe.cols() < k) throw DataError("probe has fewer features than strategy weights");
  const auto ml = xai::attribution_matrix(xai::shapley_exact(model, probe, ref));
  const auto phys = xai::attribution_matrix(xai::shapley_exact(physics, probe, ref));
  StrategyReport rep;
  rep.per_feature = r2_feature(ml.leftCols(k), phys.leftCols(k), options.squared);
  rep.weights = options.weights;
  rep.r2_phys = r2_phys(rep.per_feature, rep.weights);
  rep.probe_size = static_cast<std::size_t>(probe.rows());
  rep.model_kind = models::to_string(model.kind());
  rep.seed = model.seed();
  rep.training_period = options.training_period;
  return rep;
}

/// Uniform per-1-m/s-bin subsample of at most `target` rows (whole set if
/// smaller). Deterministic under `seed`.
inline std::vector<Eigen::Index> stratified_probe(const scada::FeatureMatrix& data, std::size_t target,
                                                  std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(data.size());
  std::vector<Eigen::Index> all(n);
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  if (n <= target) return all;
  std::map<long long, std::vector<Eigen::Index>> bins;
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    bins[static_cast<long long>(std::floor(data.scaler.unscale(0, data.rows(i, 0))))].push_back(i);
  }
  std::mt19937_64 rng(seed);
  for (auto& [k, members] : bins) std::shuffle(members.begin(), members.end(), rng);
  std::vector<Eigen::Index> picked;
  // Round-robin over bins keeps per-bin counts as equal as occupancy allows.
  for (std::size_t round = 0; picked.size() < target; ++round) {
    bool any = false;
    for (auto& [k, members] : bins) {
      if (round < members.size()) {
        picked.push_back(members[round]);
        any = true;
        if (picked.size() == target) break;
      }
    }
    if (!any) break;
  }
  std::sort(picked.begin(), picked.end());
  return picked;
}

inline Matrix select_rows(const Matrix& m, const std::vector<Eigen::Index>& idx) {
  Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
  return out;
}

struct SelectionCriterion {
  double min_r2_phys = 0.95;
  double rmse_weight = 0.5;
  double strategy_weight = 0.5;
};

struct Candidate {
  std::string id;
  std::uint64_t seed = 0;
  double rmse_val = 0.0;
  double r2_phys = 0.0;
};

struct RankedCandidate {
  Candidate candidate;
  double normalized_rmse = 0.0;
  double score = 0.0;  // lower is better
};

struct SelectionResult {
  std::vector<RankedCandidate> ranked;  // survivors, best first
  std::vector<Candidate> rejected;
  bool empty() const { return ranked.empty(); }
};

/// Rejects candidates below the R2_phys threshold and ranks the rest by
/// rmse_weight * minmax(RMSE) - strategy_weight * R2_phys. RMSE is min/max
/// normalised across all candidates; ties go to higher R2_phys, then lower seed.
inline SelectionResult select_model(const std::vector<Candidate>& candidates, const SelectionCriterion& crit) {
  if (candidates.empty()) throw ConfigError("select_model needs at least one candidate");
  if (crit.rmse_weight < 0.0 || crit.strategy_weight < 0.0) throw ConfigError("selection weights must be >= 0");
  double lo = candidates.front().rmse_val, hi = lo;
  for (const auto& c : candidates) {
    lo = std::min(lo, c.rmse_val);
    hi = std::max(hi, c.rmse_val);
  }
  SelectionResult res;
  for (const auto& c : candidates) {
    if (c.r2_phys < crit.min_r2_phys) {
      res.rejected.push_back(c);
      continue;
    }
    const double norm = hi > lo ? (c.rmse_val - lo) / (hi - lo) : 0.0;
    res.ranked.push_back({c, norm, crit.rmse_weight * norm - crit.strategy_weight * c.r2_phys});
  }
  std::sort(res.ranked.begin(), res.ranked.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.candidate.r2_phys != b.candidate.r2_phys) return a.candidate.r2_phys > b.candidate.r2_phys;
    return a.candidate.seed < b.candidate.seed;
  });
  return res;
}

}  // namespace wtxai::strategy
