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

#include <wtxai/common.hpp>
#include <wtxai/physics.hpp>
#include <wtxai/scada.hpp>

#include <json.hpp>

#include <memory>
#include <string>

namespace wtxai::models {

inline constexpr int kModelFormatVersion = 1;

enum class ModelKind { phys_base, plr, ppr, rf, ann_small, ann_large, hybrid };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::phys_base: return "phys_base";
    case ModelKind::plr: return "plr";
    case ModelKind::ppr: return "ppr";
    case ModelKind::rf: return "rf";
    case ModelKind::ann_small: return "ann_small";
    case ModelKind::ann_large: return "ann_large";
    case ModelKind::hybrid: return "hybrid";
  }
  return "unknown";
}

inline ModelKind model_kind_from_string(const std::string& s) {
  for (auto k : {ModelKind::phys_base, ModelKind::plr, ModelKind::ppr, ModelKind::rf, ModelKind::ann_small,
                 ModelKind::ann_large, ModelKind::hybrid}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown model kind: " + s);
}

inline bool is_stochastic(ModelKind k) {
  return k == ModelKind::rf || k == ModelKind::ann_small || k == ModelKind::ann_large || k == ModelKind::hybrid;
}

/// Uniform predictor contract. Inputs are min/max-scaled feature rows in the
/// order of the model's scaler; outputs are kW. Implementations are
/// immutable after fitting and safe for concurrent predict calls.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual Vector predict(const Matrix& scaled_rows) const = 0;
  virtual ModelKind kind() const = 0;
  virtual std::uint64_t seed() const { return 0; }
  virtual nlohmann::json hyperparameters() const = 0;
  /// Learned parameters only; see save_model for the full document.
  virtual nlohmann::json parameters() const = 0;
  virtual const scada::MinMaxScaler& scaler() const = 0;

  double predict_one(std::span<const double> row) const {
    Matrix m(1, static_cast<Eigen::Index>(row.size()));
    for (std::size_t j = 0; j < row.size(); ++j) m(0, static_cast<Eigen::Index>(j)) = row[j];
    return predict(m)(0);
  }
};

/// Root mean squared error in kW.
inline double evaluate_rmse(const Predictor& model, const scada::FeatureMatrix& data) {
  if (data.size() == 0) throw DataError("evaluate_rmse: empty dataset");
  const Vector pred = model.predict(data.rows);
  return std::sqrt((pred - data.targets).squaredNorm() / static_cast<double>(data.size()));
}

inline nlohmann::json curve_to_json(const physics::NominalPowerCurve& c) {
  nlohmann::json knots = nlohmann::json::array();
  for (const auto& [v, p] : c.knots()) knots.push_back({v, p});
  return {{"knots", knots},
          {"cut_in", c.cut_in()},
          {"rated_speed", c.rated_speed()},
          {"rated_power", c.rated_power()},
          {"cut_out", c.cut_out()}};
}

inline physics::NominalPowerCurve curve_from_json(const nlohmann::json& j) {
  std::vector<std::pair<double, double>> knots;
  for (const auto& k : j.at("knots")) knots.emplace_back(k.at(0).get<double>(), k.at(1).get<double>());
  return {std::move(knots), j.at("cut_in").get<double>(), j.at("rated_speed").get<double>(),
          j.at("rated_power").get<double>(), j.at("cut_out").get<double>()};
}

inline nlohmann::json physics_to_json(const physics::PhysBase& p) {
  return {{"curve", curve_to_json(p.curve())},
          {"mean_density", p.mean_density()},
          {"quadrature_points", p.quadrature().points},
          {"sigma_span", p.quadrature().sigma_span}};
}

inline physics::PhysBase physics_from_json(const nlohmann::json& j) {
  return physics::PhysBase(curve_from_json(j.at("curve")), j.at("mean_density").get<double>(),
                           {j.at("quadrature_points").get<int>(), j.at("sigma_span").get<double>()});
}

/// Phys_base behind the predictor contract: unscales [v_w, rho, TI] and, when
/// the schema carries it and `apply_yaw` is set, the yaw misalignment.
class PhysBasePredictor final : public Predictor {
 public:
  PhysBasePredictor(physics::PhysBase physics, scada::MinMaxScaler scaler, bool apply_yaw = false)
      : physics_(std::move(physics)), scaler_(std::move(scaler)), apply_yaw_(apply_yaw) {
    if (scaler_.dim() < 3) throw ConfigError("physics baseline needs v_w, rho and TI features");
    if (apply_yaw_ && scaler_.dim() < 4) throw ConfigError("yaw factor requested without yaw feature");
  }

  Vector predict(const Matrix& rows) const override {
    Vector out(rows.rows());
    for (Eigen::Index i = 0; i < rows.rows(); ++i) out(i) = predict_row(rows.row(i));
    return out;
  }

  template <typename Row>
  double predict_row(const Row& row) const {
    const double v = scaler_.unscale(0, row(0));
    const double rho = scaler_.unscale(1, row(1));
    const double ti = scaler_.unscale(2, row(2));
    if (apply_yaw_) return physics_.predict_with_yaw(v, rho, ti, scaler_.unscale(3, row(3)));
    return physics_.predict(v, rho, ti);
  }

  ModelKind kind() const override { return ModelKind::phys_base; }
  nlohmann::json hyperparameters() const override { return {{"apply_yaw", apply_yaw_}}; }
  nlohmann::json parameters() const override { return physics_to_json(physics_); }
  const scada::MinMaxScaler& scaler() const override { return scaler_; }
  const physics::PhysBase& physics() const { return physics_; }

 private:
  physics::PhysBase physics_;
  scada::MinMaxScaler scaler_;
  bool apply_yaw_;
};

}  // namespace wtxai::models
