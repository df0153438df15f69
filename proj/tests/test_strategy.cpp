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

using strategy::Candidate;

TEST(R2Phys, WeightedSumExamples) {
  EXPECT_NEAR(strategy::r2_phys(std::vector<double>{1.0, 1.0, 1.0}), 1.0, 1e-15);
  EXPECT_NEAR(strategy::r2_phys(std::vector<double>{1.00, 0.85, 0.68}), 0.9615, 1e-12);
  const std::vector<double> equal = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  EXPECT_NEAR(strategy::r2_phys(std::vector<double>{1.00, 0.85, 0.68}, equal), 0.843333333333, 1e-9);
  EXPECT_THROW(strategy::r2_phys(std::vector<double>{1.0, 1.0}), ConfigError);
  EXPECT_THROW(strategy::r2_phys(std::vector<double>{1.0, 1.0, 1.0}, std::vector<double>{0.5, 0.5, 0.5}),
               ConfigError);
}

TEST(R2Phys, MonotoneInEachCorrelation) {
  const std::vector<double> base = {0.9, 0.5, 0.2};
  for (std::size_t j = 0; j < 3; ++j) {
    auto up = base;
    up[j] += 0.05;
    EXPECT_GT(strategy::r2_phys(up), strategy::r2_phys(base));
  }
}

TEST(R2Feature, SelfSignFlipAndAffine) {
  const Matrix a = testing::random_rows(40, 3, 1);
  for (const auto& c : strategy::r2_feature(a, a)) EXPECT_NEAR(c.r, 1.0, 1e-12);
  for (const auto& c : strategy::r2_feature(-a, a)) EXPECT_NEAR(c.r, -1.0, 1e-12);
  const Matrix affine = (2.0 * a).array() + 5.0;
  for (const auto& c : strategy::r2_feature(affine, a)) EXPECT_NEAR(c.r, 1.0, 1e-12);
  const Matrix b = testing::random_rows(40, 3, 2);
  const auto plain = strategy::r2_feature(a, b);
  const auto shifted = strategy::r2_feature((3.0 * a).array() - 1.0, (0.5 * b).array() + 2.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(plain[j].r, shifted[j].r, 1e-12);
}

TEST(R2Feature, ZeroVarianceIsDegenerateZero) {
  Matrix a = testing::random_rows(10, 3, 3);
  Matrix b = a;
  b.col(2).setConstant(4.0);
  const auto c = strategy::r2_feature(b, a);
  EXPECT_FALSE(c[0].degenerate);
  EXPECT_TRUE(c[2].degenerate);
  EXPECT_EQ(c[2].r, 0.0);
  a.col(2).setConstant(4.0);
  const auto both = strategy::r2_feature(b, a);
  EXPECT_TRUE(both[2].degenerate);
  EXPECT_EQ(both[2].r, 1.0);
  EXPECT_THROW(strategy::r2_feature(a.topRows(2), a.topRows(2)), DataError);
  EXPECT_THROW(strategy::r2_feature(a, a.leftCols(2)), DataError);
}

TEST(R2Feature, SquaredVariant) {
  const Matrix a = testing::random_rows(30, 3, 4);
  const Matrix b = testing::random_rows(30, 3, 5);
  const auto r = strategy::r2_feature(a, b);
  const auto r2 = strategy::r2_feature(a, b, true);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(r2[j].r, r[j].r * r[j].r, 1e-15);
}

TEST(EvaluateStrategy, PhysicsAgainstItselfIsOne) {
  const auto f = testing::physics_features(800, 10.0, 6);
  const models::PhysBasePredictor phys(physics::PhysBase{}, f.scaler);
  for (auto kind : {xai::ReferenceKind::zeros, xai::ReferenceKind::train_mean,
                    xai::ReferenceKind::informed_conditional}) {
    const auto rep = strategy::evaluate_strategy(phys, phys, f.rows, xai::build_reference(kind, f));
    EXPECT_NEAR(rep.r2_phys, 1.0, 1e-12);
    EXPECT_EQ(rep.probe_size, static_cast<std::size_t>(f.size()));
  }
}

TEST(EvaluateStrategy, ModelIgnoringTurbulenceIsFlagged) {
  const auto f = testing::physics_features(800, 10.0, 7);
  const models::PhysBasePredictor phys(physics::PhysBase{}, f.scaler);
  const testing::FunctionModel blind(
      [&](const double* x, std::size_t) {
        Matrix m(1, 3);
        m << x[0], x[1], 0.5;
        return phys.predict(m)(0);
      },
      3);
  const auto rep = strategy::evaluate_strategy(blind, phys, f.rows, xai::build_reference(xai::ReferenceKind::zeros, f));
  EXPECT_TRUE(rep.per_feature[scada::kTiFeature].degenerate);
  EXPECT_EQ(rep.r(scada::kTiFeature), 0.0);
  EXPECT_TRUE(rep.any_degenerate());
  EXPECT_LT(rep.r2_phys, 0.96);
  EXPECT_GT(rep.r(scada::kWindSpeedFeature), 0.99);
}

TEST(EvaluateStrategy, ShuffledTurbulenceDestroysAgreement) {
  auto train = testing::physics_features(6000, 5.0, 8);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(train.size()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  auto shuffled = train;
  for (Eigen::Index i = 0; i < train.size(); ++i) shuffled.rows(i, 2) = train.rows(perm[static_cast<std::size_t>(i)], 2);
  const models::PhysBasePredictor phys(physics::PhysBase{}, train.scaler);
  const auto probe = strategy::select_rows(train.rows, strategy::stratified_probe(train, 2000, 2));
  const auto ref = xai::build_reference(xai::ReferenceKind::zeros, train);
  const auto intact = strategy::evaluate_strategy(models::fit_ppr(train), phys, probe, ref);
  const auto rep = strategy::evaluate_strategy(models::fit_ppr(shuffled), phys, probe, ref);
  EXPECT_GT(intact.r(scada::kTiFeature), 0.9);
  EXPECT_LT(std::abs(rep.r(scada::kTiFeature)), 0.5);
  EXPECT_GT(rep.r(scada::kWindSpeedFeature), 0.95);
}

TEST(StratifiedProbe, BalancedAndDeterministic) {
  const auto f = testing::physics_features(5000, 0.0, 9);
  const auto a = strategy::stratified_probe(f, 500, 3);
  EXPECT_EQ(a.size(), 500U);
  EXPECT_EQ(a, strategy::stratified_probe(f, 500, 3));
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(strategy::stratified_probe(f, 100000, 3).size(), static_cast<std::size_t>(f.size()));
}

TEST(SelectModel, ThresholdRejectsLowStrategyScore) {
  const auto res = strategy::select_model({{"a", 1, 30.0, 0.97}, {"b", 2, 30.0, 0.91}}, {});
  ASSERT_EQ(res.ranked.size(), 1U);
  EXPECT_EQ(res.ranked[0].candidate.id, "a");
  ASSERT_EQ(res.rejected.size(), 1U);
  EXPECT_EQ(res.rejected[0].id, "b");
}

TEST(SelectModel, LowestErrorRejectedWhenStrategyIsWeak) {
  const auto res = strategy::select_model({{"best_rmse", 1, 34.36, 0.898}, {"other", 2, 36.0, 0.97}}, {});
  ASSERT_EQ(res.ranked.size(), 1U);
  EXPECT_EQ(res.ranked[0].candidate.id, "other");
}

TEST(SelectModel, SingleAndEmptyOutcomes) {
  EXPECT_EQ(strategy::select_model({{"only", 0, 20.0, 0.99}}, {}).ranked.size(), 1U);
  const auto none = strategy::select_model({{"x", 0, 20.0, 0.5}}, {});
  EXPECT_TRUE(none.empty());
  EXPECT_THROW(strategy::select_model({}, {}), ConfigError);
}

TEST(SelectModel, TiesBreakByStrategyThenSeed) {
  strategy::SelectionCriterion crit;
  crit.min_r2_phys = 0.0;
  crit.strategy_weight = 0.0;
  const auto res = strategy::select_model({{"c", 9, 10.0, 0.90}, {"b", 5, 10.0, 0.95}, {"a", 3, 10.0, 0.95}}, crit);
  ASSERT_EQ(res.ranked.size(), 3U);
  EXPECT_EQ(res.ranked[0].candidate.id, "a");
  EXPECT_EQ(res.ranked[1].candidate.id, "b");
  EXPECT_EQ(res.ranked[2].candidate.id, "c");
}

TEST(SelectModel, RankingInvariantUnderRmseRescaling) {
  std::vector<Candidate> c;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 30; ++i) c.push_back({"m" + std::to_string(i), static_cast<std::uint64_t>(i), 20.0 + 30.0 * u(rng), 0.9 + 0.1 * u(rng)});
  auto scaled = c;
  for (auto& x : scaled) x.rmse_val *= 7.5;
  const auto a = strategy::select_model(c, {});
  const auto b = strategy::select_model(scaled, {});
  ASSERT_EQ(a.ranked.size(), b.ranked.size());
  for (std::size_t i = 0; i < a.ranked.size(); ++i) EXPECT_EQ(a.ranked[i].candidate.id, b.ranked[i].candidate.id);
}

}  // namespace
}  // namespace wtxai
