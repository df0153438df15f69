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


// Independent reference computations for the tests. None of these call the
// library routine they check.

#pragma once

#include <wtxai/wtxai.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

namespace wtxai::testing {

/// Shapley values by averaging marginal contributions over every feature
/// ordering, with absent features replaced by `ref`.
inline std::vector<double> permutation_shapley(const models::Predictor& model, const std::vector<double>& x,
                                               const std::vector<double>& ref) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> probes;
  std::vector<std::vector<std::size_t>> orders;
  do {
    orders.push_back(order);
    std::vector<double> cur = ref;
    probes.push_back(cur);
    for (std::size_t k = 0; k < n; ++k) {
      cur[order[k]] = x[order[k]];
      probes.push_back(cur);
    }
  } while (std::next_permutation(order.begin(), order.end()));
  Matrix m(static_cast<Eigen::Index>(probes.size()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < probes.size(); ++i) {
    for (std::size_t j = 0; j < n; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = probes[i][j];
  }
  const Vector f = model.predict(m);
  std::vector<long double> phi(n, 0.0L);
  for (std::size_t p = 0; p < orders.size(); ++p) {
    const std::size_t base = p * (n + 1);
    for (std::size_t k = 0; k < n; ++k) {
      phi[orders[p][k]] += static_cast<long double>(f(static_cast<Eigen::Index>(base + k + 1))) -
                           static_cast<long double>(f(static_cast<Eigen::Index>(base + k)));
    }
  }
  std::vector<double> out(n);
  for (std::size_t j = 0; j < n; ++j) out[j] = static_cast<double>(phi[j] / static_cast<long double>(orders.size()));
  return out;
}

/// Moist-air density evaluated in extended precision.
inline long double density_oracle(long double t, long double b, long double phi) {
  const long double r0 = 287.05L, rw = 461.5L;
  const long double pw = 0.0000205L * std::exp(0.0631846L * t);
  return (b / r0 - phi * pw * (1.0L / r0 - 1.0L / rw)) / t;
}

/// Composite Simpson integral of curve(u) * N(u; v, (ti v)^2) with the stop
/// rule applied to the mean speed, on a fine uniform grid.
inline double ti_power_oracle(const physics::NominalPowerCurve& curve, double v, double ti, int intervals = 20000) {
  if (v >= curve.cut_out()) return 0.0;
  const long double sigma = static_cast<long double>(ti) * v;
  const long double lo = std::max<long double>(curve.cut_in(), v - 8.0L * sigma);
  const long double hi = v + 8.0L * sigma;
  if (!(hi > lo)) return 0.0;
  const long double h = (hi - lo) / intervals;
  auto g = [&](long double u) {
    const long double p = u >= curve.rated_speed() ? curve.rated_power() : curve(static_cast<double>(u));
    const long double z = (u - v) / sigma;
    return p * std::exp(-0.5L * z * z) / (sigma * std::sqrt(2.0L * 3.14159265358979323846L));
  };
  long double acc = g(lo) + g(hi);
  for (int k = 1; k < intervals; ++k) acc += (k % 2 ? 4.0L : 2.0L) * g(lo + h * k);
  return static_cast<double>(acc * h / 3.0L);
}

/// Small synthetic feature set drawn from the physics baseline.
inline scada::FeatureMatrix physics_features(std::size_t n, double noise_kw, std::uint64_t seed,
                                             bool include_yaw = false, double yaw_max = 0.0) {
  scada::SyntheticConfig cfg;
  cfg.noise_std_kw = noise_kw;
  cfg.yaw_max_deg = yaw_max;
  const auto recs = scada::filter_operational(scada::synthesize_scada(cfg, physics::PhysBase{}, n, seed));
  return scada::fit_features(recs, include_yaw);
}

/// Uniform random rows in [0, 1]^d.
inline Matrix random_rows(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = u(rng);
  }
  return m;
}

/// Deterministic test predictor: a fixed function of the scaled inputs.
class FunctionModel final : public models::Predictor {
 public:
  using Fn = std::function<double(const double*, std::size_t)>;
  FunctionModel(Fn fn, std::size_t dim) : fn_(std::move(fn)), scaler_(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0)) {}
  Vector predict(const Matrix& rows) const override {
    Vector out(rows.rows());
    std::vector<double> r(static_cast<std::size_t>(rows.cols()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      for (Eigen::Index j = 0; j < rows.cols(); ++j) r[static_cast<std::size_t>(j)] = rows(i, j);
      out(i) = fn_(r.data(), r.size());
    }
    return out;
  }
  models::ModelKind kind() const override { return models::ModelKind::plr; }
  nlohmann::json hyperparameters() const override { return nlohmann::json::object(); }
  nlohmann::json parameters() const override { return nlohmann::json::object(); }
  const scada::MinMaxScaler& scaler() const override { return scaler_; }

 private:
  Fn fn_;
  scada::MinMaxScaler scaler_;
};

}  // namespace wtxai::testing
