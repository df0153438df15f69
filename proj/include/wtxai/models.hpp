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

#include <wtxai/forest.hpp>
#include <wtxai/mlp.hpp>
#include <wtxai/predictor.hpp>
#include <wtxai/segmented.hpp>

#include <fstream>
#include <memory>

namespace wtxai::models {

/// Physics baseline plus a network trained on the residual y - f_phys(x).
class HybridModel final : public Predictor {
 public:
  HybridModel(PhysBasePredictor physics, Mlp inner) : physics_(std::move(physics)), inner_(std::move(inner)) {}

  Vector predict(const Matrix& rows) const override { return physics_.predict(rows) + inner_.predict(rows); }
  ModelKind kind() const override { return ModelKind::hybrid; }
  std::uint64_t seed() const override { return inner_.seed(); }
  nlohmann::json hyperparameters() const override { return {{"inner", inner_.hyperparameters()}}; }
  nlohmann::json parameters() const override {
    return {{"physics", physics_.parameters()}, {"inner", inner_.parameters()}};
  }
  const scada::MinMaxScaler& scaler() const override { return inner_.scaler(); }
  const PhysBasePredictor& physics() const { return physics_; }
  const Mlp& inner() const { return inner_; }
  Mlp& inner() { return inner_; }

 private:
  PhysBasePredictor physics_;
  Mlp inner_;
};

inline HybridModel fit_hybrid(const scada::FeatureMatrix& train, const scada::FeatureMatrix& validation,
                              const physics::PhysBase& physics, const MlpConfig& inner) {
  PhysBasePredictor phys(physics, train.scaler);
  const Vector residual_train = train.targets - phys.predict(train.rows);
  const Vector residual_val = validation.targets - phys.predict(validation.rows);
  auto net = Mlp::fit(train.rows, residual_train, validation.rows, residual_val, train.scaler, inner);
  return HybridModel(std::move(phys), std::move(net));
}

/// Everything needed to train one model of a given kind.
struct ModelSpec {
  ModelKind kind = ModelKind::plr;
  std::uint64_t seed = 0;
  SegmentSpec segments;
  double ppr_lambda = 0.01;
  int ppr_degree = 3;
  RandomForestConfig forest;
  MlpConfig mlp = MlpConfig::ann_small();

  /// Defaults for `kind`, overridden by `overrides` (same keys as the
  /// hyperparameters() documents).
  static ModelSpec make(ModelKind kind, std::uint64_t seed, const nlohmann::json& overrides = nlohmann::json::object()) {
    ModelSpec s;
    s.kind = kind;
    s.seed = seed;
    if (overrides.contains("boundaries")) s.segments.boundaries = overrides.at("boundaries").get<std::vector<double>>();
    s.ppr_lambda = overrides.value("lambda", s.ppr_lambda);
    s.ppr_degree = overrides.value("degree", s.ppr_degree);
    s.forest = RandomForestConfig::from_json(overrides, seed);
    const MlpConfig base = (kind == ModelKind::ann_large || kind == ModelKind::hybrid) ? MlpConfig::ann_large(seed)
                                                                                        : MlpConfig::ann_small(seed);
    s.mlp = MlpConfig::from_json(overrides, base);
    s.mlp.seed = seed;
    return s;
  }
};

inline std::unique_ptr<Predictor> train_model(const ModelSpec& spec, const scada::FeatureMatrix& train,
                                              const scada::FeatureMatrix& validation,
                                              const physics::PhysBase& physics) {
  switch (spec.kind) {
    case ModelKind::phys_base:
      return std::make_unique<PhysBasePredictor>(physics, train.scaler, train.rows.cols() > 3);
    case ModelKind::plr:
      return std::make_unique<SegmentedRegression>(fit_plr(train, spec.segments));
    case ModelKind::ppr:
      return std::make_unique<SegmentedRegression>(fit_ppr(train, spec.segments, spec.ppr_lambda, spec.ppr_degree));
    case ModelKind::rf:
      return std::make_unique<RandomForest>(fit_rf(train, spec.forest));
    case ModelKind::ann_small:
    case ModelKind::ann_large:
      return std::make_unique<Mlp>(fit_mlp(train, validation, spec.mlp));
    case ModelKind::hybrid:
      return std::make_unique<HybridModel>(fit_hybrid(train, validation, physics, spec.mlp));
  }
  throw ConfigError("unhandled model kind");
}

// ---------------------------------------------------------------------------
// Versioned JSON serialization

inline nlohmann::json save_model(const Predictor& m) {
  return {{"format", "wtxai-model"},
          {"version", kModelFormatVersion},
          {"kind", to_string(m.kind())},
          {"seed", m.seed()},
          {"hyperparameters", m.hyperparameters()},
          {"scaler", m.scaler().to_json()},
          {"parameters", m.parameters()}};
}

namespace detail {

inline Mlp mlp_from_json(const nlohmann::json& hyper, const nlohmann::json& params, std::uint64_t seed,
                         const scada::MinMaxScaler& scaler) {
  auto config = MlpConfig::from_json(hyper, MlpConfig::ann_small(seed));
  config.seed = seed;
  const auto sizes = params.at("sizes").get<std::vector<int>>();
  if (sizes.size() < 3) throw DataError("MLP parameter block has too few layers");
  MlpNetwork net(sizes.front(), std::vector<int>(sizes.begin() + 1, sizes.end() - 1), config.activation);
  const auto flat = params.at("params").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(flat.size()) != net.params().size()) throw DataError("MLP parameter count mismatch");
  net.params() = Eigen::Map<const Vector>(flat.data(), static_cast<Eigen::Index>(flat.size()));
  return Mlp(std::move(config), scaler, std::move(net));
}

}  // namespace detail

inline std::unique_ptr<Predictor> load_model(const nlohmann::json& j) {
  if (j.value("format", std::string{}) != "wtxai-model") throw DataError("not a wtxai model document");
  if (j.at("version").get<int>() != kModelFormatVersion) {
    throw DataError("unsupported model format version " + std::to_string(j.at("version").get<int>()));
  }
  const auto kind = model_kind_from_string(j.at("kind").get<std::string>());
  const auto seed = j.at("seed").get<std::uint64_t>();
  const auto& hyper = j.at("hyperparameters");
  const auto& params = j.at("parameters");
  const auto scaler = scada::MinMaxScaler::from_json(j.at("scaler"));
  switch (kind) {
    case ModelKind::phys_base:
      return std::make_unique<PhysBasePredictor>(physics_from_json(params), scaler,
                                                 hyper.value("apply_yaw", false));
    case ModelKind::plr:
    case ModelKind::ppr: {
      SegmentSpec spec{hyper.at("boundaries").get<std::vector<double>>()};
      std::vector<SegmentFit> fits;
      for (const auto& s : params.at("segments")) {
        SegmentFit f;
        const auto c = s.at("coefficients").get<std::vector<double>>();
        f.coefficients = Eigen::Map<const Vector>(c.data(), static_cast<Eigen::Index>(c.size()));
        f.mean = s.at("mean").get<double>();
        f.rows = s.at("rows").get<std::size_t>();
        f.fallback = s.at("fallback").get<bool>();
        fits.push_back(std::move(f));
      }
      if (fits.size() != spec.segments()) throw DataError("segment count mismatch");
      return std::make_unique<SegmentedRegression>(kind, std::move(spec), hyper.at("degree").get<int>(),
                                                   hyper.at("lambda").get<double>(), scaler, std::move(fits));
    }
    case ModelKind::rf: {
      auto config = RandomForestConfig::from_json(hyper, seed);
      std::vector<RegressionTree> trees;
      for (const auto& t : params.at("trees")) {
        std::vector<RegressionTree::Node> nodes;
        for (const auto& n : t) {
          nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(), n.at(2).get<int>(), n.at(3).get<int>(),
                           n.at(4).get<double>()});
        }
        trees.emplace_back(std::move(nodes));
      }
      return std::make_unique<RandomForest>(config, scaler, std::move(trees));
    }
    case ModelKind::ann_small:
    case ModelKind::ann_large:
      return std::make_unique<Mlp>(detail::mlp_from_json(hyper, params, seed, scaler));
    case ModelKind::hybrid: {
      PhysBasePredictor phys(physics_from_json(params.at("physics")), scaler);
      return std::make_unique<HybridModel>(
          std::move(phys), detail::mlp_from_json(hyper.at("inner"), params.at("inner"), seed, scaler));
    }
  }
  throw DataError("unhandled model kind");
}

inline void save_model_file(const Predictor& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model file: " + path);
  out << save_model(m).dump(1) << '\n';
}

inline std::unique_ptr<Predictor> load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file: " + path);
  return load_model(nlohmann::json::parse(in));
}

}  // namespace wtxai::models
