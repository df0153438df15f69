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

// Piece-wise linear (PLR) and polynomial (PPR) regression over wind-speed
// segments. Routing uses physical wind speed; the regressions use scaled
// features.

#pragma once

#include <wtxai/predictor.hpp>

namespace wtxai::models {

/// Wind-speed breakpoints in m/s. Segment k covers (b[k], b[k+1]]; speeds at
/// or below b[0] use the first segment and speeds above the last breakpoint
/// use the last one.
struct SegmentSpec {
  std::vector<double> boundaries = {0.0, 4.0, 6.0, 8.0, 10.0, 12.0, 25.0};

  void validate() const {
    if (boundaries.size() < 2) throw ConfigError("segment spec needs at least two boundaries");
    if (boundaries.front() != 0.0) throw ConfigError("first segment boundary must be 0");
    for (std::size_t i = 1; i < boundaries.size(); ++i) {
      if (!(boundaries[i] > boundaries[i - 1])) throw ConfigError("segment boundaries must be strictly increasing");
    }
  }
  std::size_t segments() const { return boundaries.size() - 1; }

  std::size_t route(double wind_speed) const {
    const auto it = std::lower_bound(boundaries.begin() + 1, boundaries.end() - 1, wind_speed);
    return static_cast<std::size_t>(it - (boundaries.begin() + 1));
  }
};

/// Polynomial basis of the given degree in scaled [v, rho, TI]:
/// v^k (k <= d), rho*v^k and TI*v^k (k < d). Degree 3 gives the ten terms
/// {1, v, v^2, v^3, rho, rho v, rho v^2, TI, TI v, TI v^2}; degree 1 is the
/// plain linear model {1, v, rho, TI}.
inline int basis_size(int degree) { return (degree + 1) + 2 * degree; }

template <typename Row>
inline void fill_basis(const Row& x, int degree, double* out) {
  const double v = x(0), rho = x(1), ti = x(2);
  int k = 0;
  double p = 1.0;
  for (int e = 0; e <= degree; ++e, p *= v) out[k++] = p;
  p = 1.0;
  for (int e = 0; e < degree; ++e, p *= v) out[k++] = rho * p;
  p = 1.0;
  for (int e = 0; e < degree; ++e, p *= v) out[k++] = ti * p;
}

struct SegmentFit {
  Vector coefficients;  // empty when `fallback` is set
  double mean = 0.0;
  std::size_t rows = 0;
  bool fallback = false;
};

class SegmentedRegression final : public Predictor {
 public:
  SegmentedRegression(ModelKind kind, SegmentSpec spec, int degree, double lambda, scada::MinMaxScaler scaler,
                      std::vector<SegmentFit> fits)
      : kind_(kind),
        spec_(std::move(spec)),
        degree_(degree),
        lambda_(lambda),
        scaler_(std::move(scaler)),
        fits_(std::move(fits)) {}

  Vector predict(const Matrix& rows) const override {
    Vector out(rows.rows());
    std::vector<double> basis(static_cast<std::size_t>(basis_size(degree_)));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
      const auto row = rows.row(i);
      const auto& fit = fits_[spec_.route(scaler_.unscale(0, row(0)))];
      if (fit.fallback) {
        out(i) = fit.mean;
        continue;
      }
      fill_basis(row, degree_, basis.data());
      double acc = 0.0;
      for (std::size_t k = 0; k < basis.size(); ++k) acc += fit.coefficients(static_cast<Eigen::Index>(k)) * basis[k];
      out(i) = acc;
    }
    return out;
  }

  ModelKind kind() const override { return kind_; }
  nlohmann::json hyperparameters() const override {
    return {{"boundaries", spec_.boundaries}, {"degree", degree_}, {"lambda", lambda_}};
  }
  nlohmann::json parameters() const override {
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& f : fits_) {
      segs.push_back({{"coefficients", std::vector<double>(f.coefficients.data(),
                                                           f.coefficients.data() + f.coefficients.size())},
                      {"mean", f.mean},
                      {"rows", f.rows},
                      {"fallback", f.fallback}});
    }
    return {{"segments", segs}};
  }
  const scada::MinMaxScaler& scaler() const override { return scaler_; }

  const std::vector<SegmentFit>& segment_fits() const { return fits_; }
  bool any_fallback() const {
    return std::any_of(fits_.begin(), fits_.end(), [](const SegmentFit& f) { return f.fallback; });
  }
  int degree() const { return degree_; }
  const SegmentSpec& spec() const { return spec_; }

  static SegmentedRegression fit(ModelKind kind, const scada::FeatureMatrix& train, const SegmentSpec& spec,
                                 int degree, double lambda) {
    spec.validate();
    if (degree < 1) throw ConfigError("polynomial degree must be >= 1");
    if (lambda < 0.0) throw ConfigError("ridge penalty must be non-negative");
    if (train.size() == 0) throw DataError("cannot fit segmented regression on empty data");
    if (train.rows.cols() < 3) throw DataError("segmented regression needs v_w, rho and TI");
    const int p = basis_size(degree);
    std::vector<std::vector<Eigen::Index>> members(spec.segments());
    for (Eigen::Index i = 0; i < train.size(); ++i) {
      members[spec.route(train.scaler.unscale(0, train.rows(i, 0)))].push_back(i);
    }
    const double global_mean = train.targets.mean();
    std::vector<SegmentFit> fits(spec.segments());
    for (std::size_t s = 0; s < spec.segments(); ++s) {
      const auto& idx = members[s];
      auto& fit = fits[s];
      fit.rows = idx.size();
      if (idx.empty()) {
        fit.mean = global_mean;
        fit.fallback = true;
        continue;
      }
      Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), p);
      Vector y(static_cast<Eigen::Index>(idx.size()));
      std::vector<double> basis(static_cast<std::size_t>(p));
      for (std::size_t r = 0; r < idx.size(); ++r) {
        fill_basis(train.rows.row(idx[r]), degree, basis.data());
        for (int k = 0; k < p; ++k) x(static_cast<Eigen::Index>(r), k) = basis[static_cast<std::size_t>(k)];
        y(static_cast<Eigen::Index>(r)) = train.targets(idx[r]);
      }
      fit.mean = y.mean();
      if (static_cast<int>(idx.size()) < p) {
        fit.fallback = true;
        continue;
      }
      if (lambda == 0.0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
        if (qr.rank() < p) {
          fit.fallback = true;
          continue;
        }
        fit.coefficients = qr.solve(y);
      } else {
        Eigen::MatrixXd a = x.transpose() * x;
        for (int k = 1; k < p; ++k) a(k, k) += lambda;  // intercept unpenalized
        Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
        if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
          fit.fallback = true;
          continue;
        }
        fit.coefficients = ldlt.solve(x.transpose() * y);
      }
      if (!fit.coefficients.allFinite()) {
        fit.coefficients.resize(0);
        fit.fallback = true;
      }
    }
    return SegmentedRegression(kind, spec, degree, lambda, train.scaler, std::move(fits));
  }

 private:
  ModelKind kind_;
  SegmentSpec spec_;
  int degree_;
  double lambda_;
  scada::MinMaxScaler scaler_;
  std::vector<SegmentFit> fits_;
};

/// Per-segment ordinary least squares on [v_w, rho, TI].
inline SegmentedRegression fit_plr(const scada::FeatureMatrix& train, const SegmentSpec& spec = {}) {
  return SegmentedRegression::fit(ModelKind::plr, train, spec, 1, 0.0);
}

/// Per-segment ridge regression on the degree-3 basis (ten terms).
inline SegmentedRegression fit_ppr(const scada::FeatureMatrix& train, const SegmentSpec& spec = {},
                                   double lambda = 0.01, int degree = 3) {
  return SegmentedRegression::fit(ModelKind::ppr, train, spec, degree, lambda);
}

}  // namespace wtxai::models
