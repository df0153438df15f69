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

#pragma once

#include <wtxai/predictor.hpp>

#include <random>

namespace wtxai::models {

struct RandomForestConfig {
  int n_trees = 100;
  int min_samples_split = 3;
  int min_samples_leaf = 30;
  bool bootstrap = true;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const {
    return {{"n_trees", n_trees},
            {"min_samples_split", min_samples_split},
            {"min_samples_leaf", min_samples_leaf},
            {"bootstrap", bootstrap}};
  }
  static RandomForestConfig from_json(const nlohmann::json& j, std::uint64_t seed) {
    RandomForestConfig c;
    c.n_trees = j.value("n_trees", c.n_trees);
    c.min_samples_split = j.value("min_samples_split", c.min_samples_split);
    c.min_samples_leaf = j.value("min_samples_leaf", c.min_samples_leaf);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    c.seed = seed;
    return c;
  }
};

/// CART regression tree stored as a flat node array; node 0 is the root.
/// Rows with x[feature] <= threshold go left.
class RegressionTree {
 public:
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
  };

  RegressionTree() = default;
  explicit RegressionTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

  template <typename Row>
  double predict(const Row& x) const {
    int n = 0;
    while (nodes_[static_cast<std::size_t>(n)].feature >= 0) {
      const auto& node = nodes_[static_cast<std::size_t>(n)];
      n = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes_[static_cast<std::size_t>(n)].value;
  }

  const std::vector<Node>& nodes() const { return nodes_; }

  /// Grows a tree on the rows listed in `sample` (duplicates allowed).
  static RegressionTree grow(const Matrix& x, const Vector& y, std::vector<Eigen::Index> sample, int min_split,
                             int min_leaf) {
    Builder b{x, y, min_split, min_leaf, {}, {}};
    b.build(sample, 0, sample.size());
    return RegressionTree(std::move(b.nodes));
  }

 private:
  struct Builder {
    const Matrix& x;
    const Vector& y;
    int min_split;
    int min_leaf;
    std::vector<Node> nodes;
    std::vector<std::pair<double, double>> scratch;

    int build(std::vector<Eigen::Index>& idx, std::size_t begin, std::size_t end) {
      const auto n = end - begin;
      double sum = 0.0;
      for (std::size_t k = begin; k < end; ++k) sum += y(idx[k]);
      const int id = static_cast<int>(nodes.size());
      nodes.push_back({-1, 0.0, -1, -1, sum / static_cast<double>(n)});
      const auto leaf = static_cast<std::size_t>(std::max(min_leaf, 1));
      if (n < static_cast<std::size_t>(min_split) || n < 2 * leaf) return id;

      // Maximise sum_L^2/n_L + sum_R^2/n_R, i.e. minimise within-child SSE.
      const double parent_score = sum * sum / static_cast<double>(n);
      double best_gain = 0.0;
      int best_feature = -1;
      double best_threshold = 0.0;
      for (Eigen::Index f = 0; f < x.cols(); ++f) {
        scratch.clear();
        for (std::size_t k = begin; k < end; ++k) scratch.emplace_back(x(idx[k], f), y(idx[k]));
        std::sort(scratch.begin(), scratch.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        if (scratch.front().first == scratch.back().first) continue;
        double left_sum = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
          left_sum += scratch[k].second;
          const std::size_t n_left = k + 1;
          if (n_left < leaf) continue;
          if (n - n_left < leaf) break;
          if (scratch[k].first == scratch[k + 1].first) continue;
          const double right_sum = sum - left_sum;
          const double score = left_sum * left_sum / static_cast<double>(n_left) +
                               right_sum * right_sum / static_cast<double>(n - n_left);
          const double gain = score - parent_score;
          if (gain > best_gain * (1.0 + 1e-12) + 1e-12) {
            best_gain = gain;
            best_feature = static_cast<int>(f);
            double t = 0.5 * (scratch[k].first + scratch[k + 1].first);
            if (t >= scratch[k + 1].first) t = scratch[k].first;
            best_threshold = t;
          }
        }
      }
      if (best_feature < 0) return id;

      const auto mid_it = std::stable_partition(
          idx.begin() + static_cast<std::ptrdiff_t>(begin), idx.begin() + static_cast<std::ptrdiff_t>(end),
          [&](Eigen::Index r) { return x(r, best_feature) <= best_threshold; });
      const auto mid = static_cast<std::size_t>(mid_it - idx.begin());
      const int left = build(idx, begin, mid);
      const int right = build(idx, mid, end);
      nodes[static_cast<std::size_t>(id)].feature = best_feature;
      nodes[static_cast<std::size_t>(id)].threshold = best_threshold;
      nodes[static_cast<std::size_t>(id)].left = left;
      nodes[static_cast<std::size_t>(id)].right = right;
      return id;
    }
  };

  std::vector<Node> nodes_;
};

/// Bagged CART ensemble; every tree considers all features at every split.
class RandomForest final : public Predictor {
 public:
  RandomForest(RandomForestConfig config, scada::MinMaxScaler scaler, std::vector<RegressionTree> trees)
      : config_(config), scaler_(std::move(scaler)), trees_(std::move(trees)) {}

  Vector predict(const Matrix& rows) const override {
    Vector out(rows.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const auto row = rows.row(i);
      double acc = 0.0;
      for (const auto& t : trees_) acc += t.predict(row);
      out(i) = acc / static_cast<double>(trees_.size());
    }
    return out;
  }

  ModelKind kind() const override { return ModelKind::rf; }
  std::uint64_t seed() const override { return config_.seed; }
  nlohmann::json hyperparameters() const override { return config_.to_json(); }
  nlohmann::json parameters() const override {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : trees_) {
      nlohmann::json nodes = nlohmann::json::array();
      for (const auto& n : t.nodes()) nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
      trees.push_back(std::move(nodes));
    }
    return {{"trees", trees}};
  }
  const scada::MinMaxScaler& scaler() const override { return scaler_; }
  const std::vector<RegressionTree>& trees() const { return trees_; }

  static RandomForest fit(const Matrix& x, const Vector& y, const scada::MinMaxScaler& scaler,
                          const RandomForestConfig& config) {
    if (x.rows() == 0) throw DataError("cannot fit random forest on empty data");
    if (config.n_trees < 1 || config.min_samples_split < 2 || config.min_samples_leaf < 1) {
      throw ConfigError("invalid random forest configuration");
    }
    const auto n = x.rows();
    std::vector<RegressionTree> trees;
    trees.reserve(static_cast<std::size_t>(config.n_trees));
    for (int t = 0; t < config.n_trees; ++t) {
      std::vector<Eigen::Index> sample(static_cast<std::size_t>(n));
      if (config.bootstrap) {
        std::mt19937_64 rng(derive_seed(config.seed, "rf-tree", static_cast<std::uint64_t>(t)));
        std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
        for (auto& s : sample) s = pick(rng);
      } else {
        std::iota(sample.begin(), sample.end(), Eigen::Index{0});
      }
      trees.push_back(RegressionTree::grow(x, y, std::move(sample), config.min_samples_split,
                                           config.min_samples_leaf));
    }
    return RandomForest(config, scaler, std::move(trees));
  }

 private:
  RandomForestConfig config_;
  scada::MinMaxScaler scaler_;
  std::vector<RegressionTree> trees_;
};

inline RandomForest fit_rf(const scada::FeatureMatrix& train, const RandomForestConfig& config = {}) {
  return RandomForest::fit(train.rows, train.targets, train.scaler, config);
}

}  // namespace wtxai::models
