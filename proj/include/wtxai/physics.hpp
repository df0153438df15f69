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

// Physics-informed power curve baseline: a tabulated nominal curve corrected
// for air density and turbulence intensity following IEC 61400-12-1, plus the
// cos^3 yaw-misalignment loss used as ground truth for attribution tests.

#pragma once

#include <wtxai/common.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace wtxai::physics {

inline constexpr double kGasConstantDryAir = 287.05;    // J/(kg K)
inline constexpr double kGasConstantWaterVapour = 461.5;  // J/(kg K)
inline constexpr double kStandardDensity = 1.225;       // kg/m^3

/// Moist air density from temperature [K], pressure [Pa] and relative
/// humidity [0, 1] (IEC 61400-12-1 formulation).
inline double air_density(double temperature_k, double pressure_pa, double rel_humidity) {
  if (!(temperature_k > 0.0) || !(pressure_pa > 0.0) || !(rel_humidity >= 0.0) || !(rel_humidity <= 1.0)) {
    throw DomainError("air_density: non-physical input");
  }
  const double vapour_pressure = 0.0000205 * std::exp(0.0631846 * temperature_k);
  return (1.0 / temperature_k) *
         (pressure_pa / kGasConstantDryAir -
          rel_humidity * vapour_pressure * (1.0 / kGasConstantDryAir - 1.0 / kGasConstantWaterVapour));
}

/// Inverse of air_density in pressure; used by the synthetic generator.
inline double pressure_for_density(double density, double temperature_k, double rel_humidity) {
  const double vapour_pressure = 0.0000205 * std::exp(0.0631846 * temperature_k);
  return kGasConstantDryAir *
         (density * temperature_k +
          rel_humidity * vapour_pressure * (1.0 / kGasConstantDryAir - 1.0 / kGasConstantWaterVapour));
}

struct AmbientState {
  double air_density = kStandardDensity;
  double mean_density = kStandardDensity;
  double turbulence_intensity = 0.0;
};

inline double density_correct_wind_speed(double wind_speed, const AmbientState& state) {
  if (!(state.air_density > 0.0) || !(state.mean_density > 0.0)) {
    throw DomainError("density correction: density must be positive");
  }
  if (!(wind_speed >= 0.0)) throw DomainError("density correction: negative wind speed");
  return wind_speed * std::cbrt(state.air_density / state.mean_density);
}

inline double turbulence_intensity(double std_10min, double mean_10min) {
  if (!(mean_10min > 0.0)) throw DomainError("turbulence intensity: mean wind speed must be positive");
  return std_10min / mean_10min;
}

/// cos^3 loss factor below rated wind speed, 1 otherwise.
inline double yaw_power_factor(double delta_yaw_deg, double wind_speed, double rated_speed) {
  if (wind_speed >= rated_speed) return 1.0;
  const double c = std::cos(delta_yaw_deg * std::numbers::pi / 180.0);
  return c * c * c;
}

/// Tabulated power curve with monotone piecewise-cubic (Fritsch-Carlson)
/// interpolation. Region I (v < cut_in) and IV (v >= cut_out) are zero,
/// region III (rated_speed <= v < cut_out) is rated power.
class NominalPowerCurve {
 public:
  NominalPowerCurve(std::vector<std::pair<double, double>> knots, double cut_in, double rated_speed,
                    double rated_power, double cut_out)
      : knots_(std::move(knots)),
        cut_in_(cut_in),
        rated_speed_(rated_speed),
        rated_power_(rated_power),
        cut_out_(cut_out) {
    validate();
    compute_slopes();
  }

  /// Generic 2 MW reference turbine (cut-in 4, rated 12 m/s at 2000 kW, cut-out 25).
  static NominalPowerCurve reference_2mw() {
    return NominalPowerCurve({{4.0, 60.0},
                              {5.0, 170.0},
                              {6.0, 330.0},
                              {7.0, 550.0},
                              {8.0, 830.0},
                              {9.0, 1180.0},
                              {10.0, 1550.0},
                              {11.0, 1850.0},
                              {12.0, 2000.0},
                              {25.0, 2000.0}},
                             4.0, 12.0, 2000.0, 25.0);
  }

  /// Two-column CSV (wind speed, power). A non-numeric first line is treated
  /// as a header. Region boundaries are inferred from the table.
  static NominalPowerCurve from_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open power curve file: " + path);
    std::vector<std::pair<double, double>> knots;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::replace(line.begin(), line.end(), ';', ',');
      std::istringstream ls(line);
      std::string a, b;
      if (!std::getline(ls, a, ',') || !std::getline(ls, b, ',')) throw DataError("power curve row needs 2 columns");
      try {
        knots.emplace_back(std::stod(a), std::stod(b));
      } catch (const std::exception&) {
        if (!first) throw DataError("unparseable power curve row: " + line);
      }
      first = false;
    }
    return from_table(std::move(knots));
  }

  static NominalPowerCurve from_table(std::vector<std::pair<double, double>> knots) {
    if (knots.size() < 2) throw DataError("power curve needs at least two knots");
    std::vector<std::pair<double, double>> nonzero;
    for (const auto& k : knots) {
      if (k.second > 0.0) nonzero.push_back(k);
    }
    if (nonzero.size() < 2) throw DataError("power curve needs at least two producing knots");
    double rated_power = 0.0;
    for (const auto& k : nonzero) rated_power = std::max(rated_power, k.second);
    double rated_speed = 0.0;
    for (const auto& k : nonzero) {
      if (k.second >= rated_power) {
        rated_speed = k.first;
        break;
      }
    }
    const double cut_in = nonzero.front().first;
    double cut_out = nonzero.back().first;
    if (cut_out <= rated_speed) cut_out = rated_speed + 1.0;
    return NominalPowerCurve(std::move(nonzero), cut_in, rated_speed, rated_power, cut_out);
  }

  double operator()(double v) const {
    if (!(v >= cut_in_) || v >= cut_out_) return 0.0;
    if (v >= rated_speed_) return rated_power_;
    return interpolate(v);
  }

  double cut_in() const { return cut_in_; }
  double rated_speed() const { return rated_speed_; }
  double rated_power() const { return rated_power_; }
  double cut_out() const { return cut_out_; }
  const std::vector<std::pair<double, double>>& knots() const { return knots_; }

 private:
  void validate() const {
    if (knots_.size() < 2) throw ConfigError("power curve needs at least two knots");
    for (std::size_t i = 1; i < knots_.size(); ++i) {
      if (!(knots_[i].first > knots_[i - 1].first)) throw ConfigError("power curve knots must be strictly increasing");
    }
    if (!(cut_in_ >= 0.0 && cut_in_ < rated_speed_ && rated_speed_ < cut_out_)) {
      throw ConfigError("power curve requires 0 <= cut_in < rated_speed < cut_out");
    }
    if (!(rated_power_ > 0.0)) throw ConfigError("rated power must be positive");
    double prev = -std::numeric_limits<double>::infinity();
    for (const auto& [v, p] : knots_) {
      if (v < cut_in_ || v > rated_speed_) continue;
      if (p < prev) throw ConfigError("power curve must be non-decreasing between cut-in and rated speed");
      prev = p;
    }
  }

  void compute_slopes() {
    const std::size_t n = knots_.size();
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      h[i] = knots_[i + 1].first - knots_[i].first;
      delta[i] = (knots_[i + 1].second - knots_[i].second) / h[i];
    }
    slopes_.assign(n, 0.0);
    if (n == 2) {
      slopes_[0] = slopes_[1] = delta[0];
      return;
    }
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) continue;
      const double w1 = 2.0 * h[i] + h[i - 1];
      const double w2 = h[i] + 2.0 * h[i - 1];
      slopes_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
    }
    slopes_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    slopes_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  // Shape-preserving three-point end condition.
  static double end_slope(double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(d) > std::abs(3.0 * d0)) return 3.0 * d0;
    return d;
  }

  double interpolate(double v) const {
    if (v <= knots_.front().first) return knots_.front().second;
    if (v >= knots_.back().first) return knots_.back().second;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), v,
                                     [](double x, const auto& k) { return x < k.first; });
    const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
    const double x0 = knots_[i].first;
    const double h = knots_[i + 1].first - x0;
    const double t = (v - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    const double h00 = 2 * t3 - 3 * t2 + 1;
    const double h10 = t3 - 2 * t2 + t;
    const double h01 = -2 * t3 + 3 * t2;
    const double h11 = t3 - t2;
    return h00 * knots_[i].second + h10 * h * slopes_[i] + h01 * knots_[i + 1].second + h11 * h * slopes_[i + 1];
  }

  std::vector<std::pair<double, double>> knots_;
  std::vector<double> slopes_;
  double cut_in_;
  double rated_speed_;
  double rated_power_;
  double cut_out_;
};

struct QuadratureSettings {
  int points = 128;
  double sigma_span = 5.0;
};

/// Expected power under a Gaussian wind-speed distribution with mean v and
/// standard deviation ti*v, truncated at +-sigma_span. Integration runs over
/// the producing interval [cut_in, cut_out) only, so the discontinuities at
/// both ends are handled exactly by the trapezoidal grid.
inline double ti_corrected_power(const NominalPowerCurve& curve, double wind_speed, double ti,
                                 const QuadratureSettings& quad = {}) {
  if (quad.points < 16) throw ConfigError("quadrature grid needs at least 16 points");
  if (!(wind_speed >= 0.0) || !(ti >= 0.0)) throw DomainError("ti_corrected_power: negative input");
  // Cut-out is a supervisory stop on the averaged speed. Inside a producing
  // window, gusts above cut_out still run at rated power.
  if (wind_speed >= curve.cut_out()) return 0.0;
  const double sigma = ti * wind_speed;
  if (sigma == 0.0) return curve(wind_speed);
  const double lo = std::max({0.0, wind_speed - quad.sigma_span * sigma, curve.cut_in()});
  const double hi = wind_speed + quad.sigma_span * sigma;
  if (!(hi > lo)) return 0.0;
  const int n = quad.points;
  const double step = (hi - lo) / static_cast<double>(n - 1);
  const double norm = 1.0 / (sigma * std::sqrt(2.0 * std::numbers::pi));
  double acc = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = (k == n - 1) ? hi : lo + step * k;
    const double z = (u - wind_speed) / sigma;
    const double p = u >= curve.rated_speed() ? curve.rated_power() : curve(u);
    const double w = (k == 0 || k == n - 1) ? 0.5 : 1.0;
    acc += w * p * norm * std::exp(-0.5 * z * z);
  }
  return acc * step;
}

/// Phys_base: density correction followed by the turbulence convolution.
class PhysBase {
 public:
  explicit PhysBase(NominalPowerCurve curve = NominalPowerCurve::reference_2mw(),
                    double mean_density = kStandardDensity, QuadratureSettings quad = {})
      : curve_(std::move(curve)), mean_density_(mean_density), quad_(quad) {
    if (!(mean_density_ > 0.0)) throw ConfigError("mean density must be positive");
    if (quad_.points < 16) throw ConfigError("quadrature grid needs at least 16 points");
  }

  double predict(double wind_speed, double density, double ti) const {
    const double v = density_correct_wind_speed(std::max(wind_speed, 0.0), {density, mean_density_, ti});
    return std::clamp(ti_corrected_power(curve_, v, std::max(ti, 0.0), quad_), 0.0, curve_.rated_power());
  }

  double predict_with_yaw(double wind_speed, double density, double ti, double delta_yaw_deg) const {
    return predict(wind_speed, density, ti) * yaw_power_factor(delta_yaw_deg, wind_speed, curve_.rated_speed());
  }

  const NominalPowerCurve& curve() const { return curve_; }
  double mean_density() const { return mean_density_; }
  const QuadratureSettings& quadrature() const { return quad_; }

 private:
  NominalPowerCurve curve_;
  double mean_density_;
  QuadratureSettings quad_;
};

}  // namespace wtxai::physics
