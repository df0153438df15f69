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


#include "oracles.hpp"

#include <gtest/gtest.h>

namespace wtxai {
namespace {

using testing::FunctionModel;
using xai::ReferenceKind;
using xai::ReferencePoint;

ReferencePoint fixed(std::vector<double> v) { return {ReferenceKind::train_mean, std::move(v)}; }

double nonlinear3(const double* x, std::size_t) {
  return std::sin(3.0 * x[0]) * x[1] + std::exp(x[0] * x[2]) - x[1] * x[1] * x[2] + 0.3 * x[2];
}

TEST(Shapley, MatchesPermutationOracle) {
  const FunctionModel model(nonlinear3, 3);
  const Matrix rows = testing::random_rows(200, 3, 1);
  const auto ref = fixed({0.2, 0.7, 0.4});
  const auto attr = xai::shapley_exact(model, rows, ref);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const std::vector<double> x = {rows(i, 0), rows(i, 1), rows(i, 2)};
    const auto oracle = testing::permutation_shapley(model, x, ref.values());
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(attr[static_cast<std::size_t>(i)].per_feature[j], oracle[j], 1e-9);
  }
}

TEST(Shapley, ConstantModelGetsNoAttribution) {
  const FunctionModel model([](const double*, std::size_t) { return 42.0; }, 3);
  const auto a = xai::shapley_exact(model, testing::random_rows(5, 3, 2), fixed({0.0, 0.0, 0.0}));
  for (const auto& r : a) {
    for (double v : r.per_feature) EXPECT_EQ(v, 0.0);
  }
}

TEST(Shapley, AdditiveModelRecoversComponents) {
  auto g0 = [](double x) { return 3.0 * x * x; };
  auto g1 = [](double x) { return std::cos(x); };
  auto g2 = [](double x) { return -2.0 * x; };
  const FunctionModel model([&](const double* x, std::size_t) { return g0(x[0]) + g1(x[1]) + g2(x[2]); }, 3);
  const std::vector<double> ref = {0.1, 0.5, 0.9};
  const Matrix rows = testing::random_rows(50, 3, 3);
  const auto a = xai::shapley_exact(model, rows, fixed(ref));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const auto& r = a[static_cast<std::size_t>(i)].per_feature;
    EXPECT_NEAR(r[0], g0(rows(i, 0)) - g0(ref[0]), 1e-12);
    EXPECT_NEAR(r[1], g1(rows(i, 1)) - g1(ref[1]), 1e-12);
    EXPECT_NEAR(r[2], g2(rows(i, 2)) - g2(ref[2]), 1e-12);
  }
}

TEST(Shapley, CompletenessHoldsForTrainedNetwork) {
  const auto train = testing::physics_features(1500, 10.0, 4, true, 15.0);
  auto cfg = models::MlpConfig::ann_small(2);
  cfg.max_epochs = 30;
  const auto net = models::fit_mlp(train, train, cfg);
  for (auto kind : {ReferenceKind::zeros, ReferenceKind::train_minimum, ReferenceKind::train_mean,
                    ReferenceKind::informed_conditional}) {
    const auto ref = xai::build_reference(kind, train, xai::informed_defaults(4));
    for (const auto& a : xai::shapley_exact(net, train.rows.topRows(200), ref)) {
      EXPECT_LT(std::abs(a.completeness_residual), 1e-6);
      EXPECT_NEAR(a.sum(), a.model_output - a.reference_output, 1e-6);
    }
  }
}

TEST(Shapley, SymmetricFeaturesShareCredit) {
  const FunctionModel model([](const double* x, std::size_t) { return x[0] * x[1] + x[0] + x[1] + x[2]; }, 3);
  Matrix rows = testing::random_rows(20, 3, 5);
  rows.col(1) = rows.col(0);
  for (const auto& a : xai::shapley_exact(model, rows, fixed({0.3, 0.3, 0.0}))) {
    EXPECT_NEAR(a.per_feature[0], a.per_feature[1], 1e-9);
  }
}

TEST(Shapley, IgnoredFeatureIsNullPlayer) {
  const FunctionModel model([](const double* x, std::size_t) { return std::exp(x[0]) * x[2]; }, 3);
  for (const auto& a : xai::shapley_exact(model, testing::random_rows(20, 3, 6), fixed({0.5, 0.5, 0.5}))) {
    EXPECT_EQ(a.per_feature[1], 0.0);
  }
}

TEST(Shapley, HybridAttributionIsSumOfParts) {
  const auto train = testing::physics_features(1000, 15.0, 7);
  auto cfg = models::MlpConfig::ann_small(3);
  cfg.max_epochs = 20;
  const auto h = models::fit_hybrid(train, train, physics::PhysBase{}, cfg);
  const auto ref = xai::build_reference(ReferenceKind::zeros, train);
  const Matrix rows = train.rows.topRows(100);
  const auto whole = xai::shapley_exact(h, rows, ref);
  const auto phys = xai::shapley_exact(h.physics(), rows, ref);
  const auto inner = xai::shapley_exact(h.inner(), rows, ref);
  for (std::size_t i = 0; i < whole.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      EXPECT_NEAR(whole[i].per_feature[j], phys[i].per_feature[j] + inner[i].per_feature[j], 1e-9);
    }
  }
}

TEST(Shapley, TooManyFeaturesIsCapabilityError) {
  const FunctionModel model([](const double*, std::size_t) { return 0.0; }, 17);
  const ReferencePoint ref(ReferenceKind::zeros, std::vector<double>(17, 0.0));
  EXPECT_THROW(xai::shapley_exact(model, testing::random_rows(1, 17, 8), ref), CapabilityError);
}

TEST(Reference, MeanAndMinimumOfTrainingRows) {
  Matrix x(2, 3);
  x << 0.0, 0.0, 0.0, 1.0, 1.0, 1.0;
  const scada::FeatureMatrix f{x, Vector::Zero(2), scada::MinMaxScaler::fit(x), scada::feature_names(false)};
  EXPECT_EQ(xai::build_reference(ReferenceKind::train_mean, f).values(), (std::vector<double>{0.5, 0.5, 0.5}));
  EXPECT_EQ(xai::build_reference(ReferenceKind::train_minimum, f).values(), (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_EQ(xai::build_reference(ReferenceKind::zeros, f).values(), (std::vector<double>{0.0, 0.0, 0.0}));
  EXPECT_EQ(xai::reference_kind_from_string("informed"), ReferenceKind::informed_conditional);
  EXPECT_THROW(xai::reference_kind_from_string("median"), ConfigError);
}

TEST(Reference, InformedUsesConditionalBinMeans) {
  std::vector<scada::ScadaRecord> recs;
  const auto add = [&](double v, double rho_target, double yaw) {
    scada::ScadaRecord r;
    r.timestamp = scada::Timestamp{} + std::chrono::minutes{10 * static_cast<int>(recs.size())};
    r.wind_speed_mean = v;
    r.wind_speed_std = (0.05 + 0.01 * static_cast<double>(recs.size())) * v;
    r.rel_humidity = 0.0;
    r.air_temperature = 280.0;
    r.air_pressure = physics::pressure_for_density(rho_target, 280.0, 0.0);
    r.power_output = 500.0;
    r.wind_direction = 0.0;
    r.nacelle_direction = yaw;
    recs.push_back(r);
  };
  add(2.0, 1.10, 3.0);
  add(7.70, 1.30, 5.0);
  add(7.80, 1.20, 9.0);
  add(8.00, 1.22, 1.0);
  add(8.24, 1.24, 12.0);
  add(8.26, 1.35, 4.0);
  add(20.0, 1.15, 2.0);
  const auto f = scada::fit_features(recs, true);
  const auto ref = xai::build_reference(ReferenceKind::informed_conditional, f, xai::informed_defaults(4));
  Eigen::RowVectorXd row(4);
  row << f.scaler.scale(0, 8.0), 0.9, 0.9, 0.9;
  double out[4];
  ref.fill(row, out);
  const double rho_mean = (recs[2].air_density() + recs[3].air_density() + recs[4].air_density()) / 3.0;
  EXPECT_NEAR(f.scaler.unscale(1, out[1]), rho_mean, 1e-12);
  EXPECT_EQ(out[0], row(0));
  EXPECT_NEAR(f.scaler.unscale(3, out[3]), 0.0, 1e-12);
  EXPECT_FALSE(ref.warnings().empty());  // bins between 2 and 7.5 m/s are empty
}

TEST(Reference, InformedInterpolatesBetweenBinCentres) {
  Matrix raw(4, 3);
  raw << 1.0, 1.1, 0.1, 1.1, 1.3, 0.1, 1.5, 1.2, 0.2, 1.4, 1.0, 0.05;
  const auto scaler = scada::MinMaxScaler::fit(raw);
  const scada::FeatureMatrix f{scaler.transform(raw), Vector::Zero(4), scaler, scada::feature_names(false)};
  const auto ref = xai::build_reference(ReferenceKind::informed_conditional, f);
  // Bins centred at 1.0 (rows 0, 1) and 1.5 (rows 2, 3); 1.25 m/s is halfway.
  Eigen::RowVectorXd row(3);
  row << scaler.scale(0, 1.25), 0.0, 0.0;
  double out[3];
  ref.fill(row, out);
  const double lo = 0.5 * (f.rows(0, 1) + f.rows(1, 1)), hi = 0.5 * (f.rows(2, 1) + f.rows(3, 1));
  EXPECT_NEAR(out[1], 0.5 * (lo + hi), 1e-12);
}

TEST(Profile, BinStatistics) {
  std::vector<xai::Attribution> attr(6);
  for (auto& a : attr) a.per_feature = {1.0, -2.0, 0.5};
  attr[5].per_feature = {3.0, 0.0, 0.0};
  const std::vector<double> v = {0.1, 0.2, 0.3, 1.1, 2.2, 3.7};
  const auto p = xai::conditional_profile(attr, v, 0.5);
  std::size_t total = 0;
  for (std::size_t b = 0; b < p.bins.size(); ++b) {
    total += p.bins[b].count;
    if (b > 0) EXPECT_GE(p.bins[b].lo, p.bins[b - 1].hi);
  }
  EXPECT_EQ(total, attr.size());
  EXPECT_EQ(p.bins.front().count, 3U);
  EXPECT_EQ(p.bins.front().mean, p.bins.front().min);
  EXPECT_EQ(p.bins.front().max, p.bins.front().mean);
  EXPECT_EQ(p.bins.back().mean, attr[5].per_feature);
  EXPECT_THROW(xai::conditional_profile(attr, {v.data(), 2}, 0.5), DataError);
}

TEST(Profile, PhysicsTurbulenceAttributionChangesSignAcrossRated) {
  const auto f = testing::physics_features(6000, 0.0, 9);
  const models::PhysBasePredictor phys(physics::PhysBase{}, f.scaler);
  const auto ref = xai::build_reference(ReferenceKind::informed_conditional, f);
  const auto attr = xai::shapley_exact(phys, f.rows, ref);
  std::vector<double> v(attr.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f.scaler.unscale(0, f.rows(static_cast<Eigen::Index>(i), 0));
  const auto p = xai::conditional_profile(attr, v, 1.0);
  for (const auto& b : p.bins) {
    if (b.lo >= 5.0 && b.hi <= 8.0) EXPECT_GT(b.mean[scada::kTiFeature], 0.0) << b.lo;
    if (b.lo >= 11.0 && b.hi <= 13.0) EXPECT_LT(b.mean[scada::kTiFeature], 0.0) << b.lo;
  }
}

}  // namespace
}  // namespace wtxai
