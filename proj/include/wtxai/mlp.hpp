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

// Fully connected regression network trained with Adam, plateau-halving
// learning rate and validation-driven early stopping.

#pragma once

#include <wtxai/predictor.hpp>

#include <random>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

namespace wtxai::models {

enum class Activation { sigmoid, relu };

struct MlpConfig {
  std::string label = "ann_small";
  std::vector<int> layer_sizes = {3, 3};
  Activation activation = Activation::sigmoid;
  double l2_penalty = 0.0;
  double initial_learning_rate = 0.1;
  int lr_patience = 10;
  double lr_factor = 0.5;
  double lr_floor = 1e-5;
  int max_epochs = 10000;
  double tolerance = 1e-6;
  int early_stopping_patience = 100;
  int batch_size = 200;
  std::uint64_t seed = 0;

  static MlpConfig ann_small(std::uint64_t seed = 0) {
    MlpConfig c;
    c.seed = seed;
    return c;
  }

  static MlpConfig ann_large(std::uint64_t seed = 0) {
    MlpConfig c;
    c.label = "ann_large";
    c.layer_sizes = {100, 100, 50};
    c.activation = Activation::relu;
    c.l2_penalty = 0.05;
    c.seed = seed;
    return c;
  }

  void validate() const {
    if (layer_sizes.empty()) throw ConfigError("MLP needs at least one hidden layer");
    for (int s : layer_sizes) {
      if (s < 1) throw ConfigError("MLP layer sizes must be positive");
    }
    if (l2_penalty < 0.0) throw ConfigError("L2 penalty must be non-negative");
    if (!(initial_learning_rate > 0.0) || batch_size < 1 || max_epochs < 1 || early_stopping_patience < 1 ||
        lr_patience < 1) {
      throw ConfigError("invalid MLP training settings");
    }
  }

  nlohmann::json to_json() const {
    return {{"label", label},
            {"layer_sizes", layer_sizes},
            {"activation", activation == Activation::relu ? "relu" : "sigmoid"},
            {"l2_penalty", l2_penalty},
            {"initial_learning_rate", initial_learning_rate},
            {"lr_patience", lr_patience},
            {"lr_factor", lr_factor},
            {"lr_floor", lr_floor},
            {"max_epochs", max_epochs},
            {"tolerance", tolerance},
            {"early_stopping_patience", early_stopping_patience},
            {"batch_size", batch_size}};
  }

  /// Overrides fields of `base` with those present in `j`.
  static MlpConfig from_json(const nlohmann::json& j, MlpConfig base) {
    base.label = j.value("label", base.label);
    if (j.contains("layer_sizes")) base.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
    if (j.contains("activation")) {
      const auto a = j.at("activation").get<std::string>();
      if (a == "relu") base.activation = Activation::relu;
      else if (a == "sigmoid" || a == "logistic") base.activation = Activation::sigmoid;
      else throw ConfigError("unknown activation: " + a);
    }
    base.l2_penalty = j.value("l2_penalty", base.l2_penalty);
    base.initial_learning_rate = j.value("initial_learning_rate", base.initial_learning_rate);
    base.lr_patience = j.value("lr_patience", base.lr_patience);
    base.lr_factor = j.value("lr_factor", base.lr_factor);
    base.lr_floor = j.value("lr_floor", base.lr_floor);
    base.max_epochs = j.value("max_epochs", base.max_epochs);
    base.tolerance = j.value("tolerance", base.tolerance);
    base.early_stopping_patience = j.value("early_stopping_patience", base.early_stopping_patience);
    base.batch_size = j.value("batch_size", base.batch_size);
    return base;
  }
};

/// Network shape plus a flat parameter vector. Layer l owns a row-major
/// fan_in x fan_out weight block followed by fan_out biases. Outputs are in kW.
class MlpNetwork {
 public:
  MlpNetwork() = default;
  MlpNetwork(int inputs, std::vector<int> hidden, Activation activation)
      : activation_(activation) {
    sizes_.push_back(inputs);
    sizes_.insert(sizes_.end(), hidden.begin(), hidden.end());
    sizes_.push_back(1);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weight_offset_.push_back(offset);
      offset += static_cast<std::size_t>(sizes_[l] * sizes_[l + 1]);
      bias_offset_.push_back(offset);
      offset += static_cast<std::size_t>(sizes_[l + 1]);
    }
    params_ = Vector::Zero(static_cast<Eigen::Index>(offset));
  }

  using WeightMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstWeightMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  std::size_t layers() const { return weight_offset_.size(); }
  const std::vector<int>& sizes() const { return sizes_; }
  Activation activation() const { return activation_; }
  Vector& params() { return params_; }
  const Vector& params() const { return params_; }

  ConstWeightMap weights(const Vector& p, std::size_t l) const {
    return {p.data() + weight_offset_[l], sizes_[l], sizes_[l + 1]};
  }
  WeightMap weights(Vector& p, std::size_t l) const {
    return {p.data() + weight_offset_[l], sizes_[l], sizes_[l + 1]};
  }
  Eigen::Map<const Eigen::RowVectorXd> biases(const Vector& p, std::size_t l) const {
    return {p.data() + bias_offset_[l], sizes_[l + 1]};
  }
  Eigen::Map<Eigen::RowVectorXd> biases(Vector& p, std::size_t l) const {
    return {p.data() + bias_offset_[l], sizes_[l + 1]};
  }

  /// Glorot-uniform weights (factor 2 for sigmoid, 6 otherwise), zero biases.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double factor = activation_ == Activation::sigmoid ? 2.0 : 6.0;
    params_.setZero();
    for (std::size_t l = 0; l < layers(); ++l) {
      const double bound = std::sqrt(factor / static_cast<double>(sizes_[l] + sizes_[l + 1]));
      std::uniform_real_distribution<double> dist(-bound, bound);
      auto w = weights(params_, l);
      for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
      }
      auto b = biases(params_, l);
      for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = dist(rng);
    }
  }

  /// Output in scaled target units.
  Eigen::VectorXd forward(const Vector& p, const Matrix& x) const {
    Matrix a = x;
    for (std::size_t l = 0; l < layers(); ++l) {
      Matrix z = a * weights(p, l);
      z.rowwise() += biases(p, l);
      if (l + 1 < layers()) activate(z);
      a = std::move(z);
    }
    return a.col(0);
  }

  Vector predict_kw(const Matrix& x) const { return forward(params_, x); }

  /// Loss 0.5*mean((f(x) - y)^2) + l2/(2n) * sum(W^2) on kW targets, and
  /// its gradient with respect to the flat parameter vector.
  double loss_and_gradient(const Vector& p, const Matrix& x, const Vector& y, double l2,
                           Vector& grad) const {
    const auto n = static_cast<double>(x.rows());
    std::vector<Matrix> acts;
    acts.reserve(layers() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < layers(); ++l) {
      Matrix z = acts.back() * weights(p, l);
      z.rowwise() += biases(p, l);
      if (l + 1 < layers()) activate(z);
      acts.push_back(std::move(z));
    }
    const Vector residual = acts.back().col(0) - y;
    double penalty = 0.0;
    for (std::size_t l = 0; l < layers(); ++l) penalty += weights(p, l).squaredNorm();
    const double loss = 0.5 * residual.squaredNorm() / n + 0.5 * l2 * penalty / n;

    grad.setZero(p.size());
    Matrix delta = residual / n;
    for (std::size_t l = layers(); l-- > 0;) {
      auto gw = weights(grad, l);
      gw.noalias() = acts[l].transpose() * delta;
      gw += (l2 / n) * weights(p, l);
      biases(grad, l) = delta.colwise().sum();
      if (l == 0) break;
      Matrix back = delta * weights(p, l).transpose();
      const Matrix& a = acts[l];
      if (activation_ == Activation::sigmoid) {
        back.array() *= a.array() * (1.0 - a.array());
      } else {
        back.array() *= (a.array() > 0.0).cast<double>();
      }
      delta = std::move(back);
    }
    return loss;
  }

 private:
  void activate(Matrix& z) const {
    if (activation_ == Activation::sigmoid) {
      z = (1.0 + (-z.array()).exp()).inverse().matrix();
    } else {
      z = z.cwiseMax(0.0);
    }
  }

  std::vector<int> sizes_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> bias_offset_;
  Activation activation_ = Activation::sigmoid;
  Vector params_;
};

struct TrainingTrace {
  int epochs = 0;
  int best_epoch = 0;
  double best_validation_mse = 0.0;  // kW^2
  double final_learning_rate = 0.0;
};

namespace detail {

// Flushes subnormals to zero while alive. Adam moments of dead units decay
// geometrically into the subnormal range, where x86 arithmetic is very slow.
class FlushDenormals {
 public:
#if defined(__SSE2__)
  FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
  ~FlushDenormals() { _mm_setcsr(saved_); }

 private:
  unsigned int saved_;
#endif
};

}  // namespace detail

class Mlp final : public Predictor {
 public:
  Mlp(MlpConfig config, scada::MinMaxScaler scaler, MlpNetwork net, TrainingTrace trace = {})
      : config_(std::move(config)), scaler_(std::move(scaler)), net_(std::move(net)), trace_(trace) {}

  Vector predict(const Matrix& rows) const override { return net_.predict_kw(rows); }
  ModelKind kind() const override { return config_.label == "ann_large" ? ModelKind::ann_large : ModelKind::ann_small; }
  std::uint64_t seed() const override { return config_.seed; }
  nlohmann::json hyperparameters() const override { return config_.to_json(); }
  nlohmann::json parameters() const override {
    const auto& p = net_.params();
    return {{"sizes", net_.sizes()},
            {"params", std::vector<double>(p.data(), p.data() + p.size())}};
  }
  const scada::MinMaxScaler& scaler() const override { return scaler_; }
  const MlpNetwork& network() const { return net_; }
  MlpNetwork& network() { return net_; }
  const TrainingTrace& trace() const { return trace_; }
  const MlpConfig& config() const { return config_; }

  static Mlp fit(const Matrix& x, const Vector& y, const Matrix& x_val, const Vector& y_val,
                 const scada::MinMaxScaler& scaler, const MlpConfig& config) {
    config.validate();
    const detail::FlushDenormals ftz;
    if (x.rows() == 0) throw DataError("cannot fit MLP on empty data");
    if (x_val.rows() == 0) throw DataError("MLP early stopping needs a non-empty validation set");
    MlpNetwork net(static_cast<int>(x.cols()), config.layer_sizes, config.activation);
    net.initialize(config.seed);
    // Tolerance applies to the validation R^2, so it scales with the target variance.
    const double var_val = (y_val.array() - y_val.mean()).square().mean();
    const double tolerance = config.tolerance * (var_val > 0.0 ? var_val : 1.0);

    Vector& p = net.params();
    Vector grad(p.size());
    Vector m = Vector::Zero(p.size());
    Vector v = Vector::Zero(p.size());
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    double lr = config.initial_learning_rate;
    long long step = 0;

    std::mt19937_64 rng(derive_seed(config.seed, "mlp-shuffle"));
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    const auto batch = static_cast<std::size_t>(std::min<Eigen::Index>(config.batch_size, x.rows()));
    Matrix xb;
    Vector yb;

    double best = std::numeric_limits<double>::infinity();
    Vector best_params = p;
    int since_best = 0;
    int plateau = 0;
    TrainingTrace trace;
    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size(); start += batch) {
        const std::size_t stop = std::min(order.size(), start + batch);
        const auto b = static_cast<Eigen::Index>(stop - start);
        xb.resize(b, x.cols());
        yb.resize(b);
        for (Eigen::Index k = 0; k < b; ++k) {
          const auto r = order[start + static_cast<std::size_t>(k)];
          xb.row(k) = x.row(r);
          yb(k) = y(r);
        }
        net.loss_and_gradient(p, xb, yb, config.l2_penalty, grad);
        ++step;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
        const double correction = std::sqrt(1.0 - std::pow(beta2, static_cast<double>(step))) /
                                  (1.0 - std::pow(beta1, static_cast<double>(step)));
        p.array() -= lr * correction * m.array() / (v.array().sqrt() + eps);
      }
      if (!p.allFinite()) throw TrainingError("MLP training diverged", config.seed, epoch);
      const double val_mse = (net.forward(p, x_val) - y_val).squaredNorm() / static_cast<double>(y_val.size());
      if (!std::isfinite(val_mse)) throw TrainingError("MLP validation loss is not finite", config.seed, epoch);
      trace.epochs = epoch;
      if (val_mse < best - tolerance) {
        best = val_mse;
        best_params = p;
        trace.best_epoch = epoch;
        since_best = 0;
        plateau = 0;
      } else {
        ++since_best;
        if (++plateau >= config.lr_patience) {
          lr = std::max(lr * config.lr_factor, config.lr_floor);
          plateau = 0;
        }
        if (since_best >= config.early_stopping_patience) break;
      }
    }
    p = best_params;
    trace.best_validation_mse = best;
    trace.final_learning_rate = lr;
    return Mlp(config, scaler, std::move(net), trace);
  }

 private:
  MlpConfig config_;
  scada::MinMaxScaler scaler_;
  MlpNetwork net_;
  TrainingTrace trace_;
};

inline Mlp fit_mlp(const scada::FeatureMatrix& train, const scada::FeatureMatrix& validation,
                   const MlpConfig& config) {
  return Mlp::fit(train.rows, train.targets, validation.rows, validation.targets, train.scaler, config);
}

}  // namespace wtxai::models
