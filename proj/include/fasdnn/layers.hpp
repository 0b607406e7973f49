#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fasdnn/errors.hpp"
#include "fasdnn/numeric.hpp"

namespace fasdnn {

enum class ActivationKind { Identity, ReLU, LeakyReLU, Sigmoid, Softmax };

struct Activation {
  static constexpr double kDefaultLeakySlope = 0.01;

  ActivationKind kind = ActivationKind::Identity;
  // Only read for LeakyReLU.
  double slope = kDefaultLeakySlope;

  static Activation identity() { return {ActivationKind::Identity}; }
  static Activation relu() { return {ActivationKind::ReLU}; }
  static Activation leaky_relu(double slope = kDefaultLeakySlope) {
    return {ActivationKind::LeakyReLU, slope};
  }
  static Activation sigmoid() { return {ActivationKind::Sigmoid}; }
  static Activation softmax() { return {ActivationKind::Softmax}; }

  void validate() const {
    if (kind == ActivationKind::LeakyReLU && !(slope > 0.0 && slope < 1.0)) {
      throw ConfigError("LeakyReLU slope must lie in (0, 1), got " + std::to_string(slope));
    }
  }

  friend bool operator==(const Activation& a, const Activation& b) {
    if (a.kind != b.kind) {
      return false;
    }
    return a.kind != ActivationKind::LeakyReLU || a.slope == b.slope;
  }
};

inline std::string activation_name(ActivationKind kind) {
  switch (kind) {
  case ActivationKind::Identity:
    return "identity";
  case ActivationKind::ReLU:
    return "relu";
  case ActivationKind::LeakyReLU:
    return "leaky_relu";
  case ActivationKind::Sigmoid:
    return "sigmoid";
  case ActivationKind::Softmax:
    return "softmax";
  }
  return "unknown";
}

inline ActivationKind activation_kind_from_name(const std::string& name) {
  for (auto kind : {ActivationKind::Identity, ActivationKind::ReLU, ActivationKind::LeakyReLU,
                    ActivationKind::Sigmoid, ActivationKind::Softmax}) {
    if (activation_name(kind) == name) {
      return kind;
    }
  }
  throw ConfigError("unknown activation '" + name + "'");
}

namespace detail {

inline double sigmoid(double x) {
  // Split on sign so exp() never sees a large positive argument.
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline void softmax_rows(Matrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    const double peak = *std::max_element(r.begin(), r.end());
    double sum = 0.0;
    for (double& v : r) {
      v = std::exp(v - peak);
      sum += v;
    }
    for (double& v : r) {
      v /= sum;
    }
  }
}

} // namespace detail

inline Matrix activation_apply(const Activation& act, const Matrix& z) {
  z.check_finite("activation_apply");
  Matrix out = z;
  auto d = out.data();
  switch (act.kind) {
  case ActivationKind::Identity:
    break;
  case ActivationKind::ReLU:
    for (double& v : d) {
      v = v > 0.0 ? v : 0.0;
    }
    break;
  case ActivationKind::LeakyReLU:
    for (double& v : d) {
      v = v > 0.0 ? v : act.slope * v;
    }
    break;
  case ActivationKind::Sigmoid:
    for (double& v : d) {
      v = detail::sigmoid(v);
    }
    break;
  case ActivationKind::Softmax:
    if (z.cols() < 2) {
      throw ConfigError("softmax needs at least 2 columns, got " + z.shape());
    }
    detail::softmax_rows(out);
    break;
  }
  return out;
}

/**
 * Elementwise derivative with respect to the pre-activation.
 *
 * ReLU and LeakyReLU take the left-hand branch at exactly zero, so
 * LeakyReLU'(0) == slope and ReLU'(0) == 0.
 *
 * Softmax has no elementwise derivative; its gradient is fused with the
 * cross-entropy loss (see loss_grad) and calling this with Softmax throws
 * ContractError.
 */
inline Matrix activation_grad(const Activation& act, const Matrix& z) {
  z.check_finite("activation_grad");
  Matrix out = z;
  auto d = out.data();
  switch (act.kind) {
  case ActivationKind::Identity:
    std::fill(d.begin(), d.end(), 1.0);
    break;
  case ActivationKind::ReLU:
    for (double& v : d) {
      v = v > 0.0 ? 1.0 : 0.0;
    }
    break;
  case ActivationKind::LeakyReLU:
    for (double& v : d) {
      v = v > 0.0 ? 1.0 : act.slope;
    }
    break;
  case ActivationKind::Sigmoid:
    for (double& v : d) {
      const double s = detail::sigmoid(v);
      v = s * (1.0 - s);
    }
    break;
  case ActivationKind::Softmax:
    throw ContractError("activation_grad: softmax gradient is only available fused with the "
                        "cross-entropy loss; use loss_grad on the final pre-activation");
  }
  return out;
}

// Fully connected layer: output = activation(x * weights + bias).
struct DenseLayer {
  Matrix weights; // in_dim x out_dim
  Matrix bias;    // 1 x out_dim
  Activation activation;

  std::size_t in_dim() const noexcept { return weights.rows(); }
  std::size_t out_dim() const noexcept { return weights.cols(); }

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct DenseForward {
  Matrix pre_activation;
  Matrix output;
};

inline DenseForward dense_forward(const DenseLayer& layer, const Matrix& x) {
  if (x.cols() != layer.in_dim()) {
    throw ShapeError("dense_forward: input " + x.shape() + " does not match weights " +
                     layer.weights.shape());
  }
  DenseForward out;
  out.pre_activation = add_row_broadcast(matmul(x, layer.weights), layer.bias);
  out.output = activation_apply(layer.activation, out.pre_activation);
  return out;
}

struct DenseGradients {
  Matrix weights; // same shape as layer.weights
  Matrix bias;    // same shape as layer.bias
  Matrix input;   // same shape as the cached input
};

// Gradients given delta, the loss gradient with respect to this layer's
// pre-activation. With need_input_grad == false the input gradient is left
// empty (the first layer of a network has no use for it).
inline DenseGradients dense_backward_from_delta(const DenseLayer& layer, const Matrix& x,
                                                const Matrix& delta, bool need_input_grad = true) {
  if (x.cols() != layer.in_dim() || delta.cols() != layer.out_dim() || delta.rows() != x.rows()) {
    throw ShapeError("dense_backward: input " + x.shape() + " and delta " + delta.shape() +
                     " do not fit weights " + layer.weights.shape());
  }
  DenseGradients g;
  g.weights = matmul(transpose(x), delta);
  g.bias = column_sums(delta);
  if (need_input_grad) {
    g.input = matmul(delta, transpose(layer.weights));
  }
  return g;
}

inline DenseGradients dense_backward(const DenseLayer& layer, const Matrix& x,
                                     const Matrix& pre_activation, const Matrix& upstream) {
  if (upstream.rows() != pre_activation.rows() || upstream.cols() != pre_activation.cols()) {
    throw ShapeError("dense_backward: upstream " + upstream.shape() + " vs pre-activation " +
                     pre_activation.shape());
  }
  const Matrix delta = hadamard(upstream, activation_grad(layer.activation, pre_activation));
  return dense_backward_from_delta(layer, x, delta);
}

/**
 * Input standardization stage. fit() records per-column mean and population
 * standard deviation of the training rows; apply() maps x to (x - mean) / std
 * using those stored statistics, so held-out data never leaks into them.
 *
 * Columns whose standard deviation is zero (to within 1e-12 relative to the
 * column mean) are given std = 1, which leaves them centred at zero.
 */
class FeatureNormLayer {
public:
  FeatureNormLayer() = default;

  FeatureNormLayer(std::vector<double> means, std::vector<double> stds)
      : means_(std::move(means)), stds_(std::move(stds)), fitted_(true) {
    if (means_.size() != stds_.size()) {
      throw ShapeError("FeatureNormLayer: " + std::to_string(means_.size()) + " means vs " +
                       std::to_string(stds_.size()) + " stds");
    }
    for (std::size_t j = 0; j < stds_.size(); ++j) {
      if (!std::isfinite(means_[j]) || !std::isfinite(stds_[j]) || stds_[j] <= 0.0) {
        throw ConfigError("FeatureNormLayer: invalid statistics for column " + std::to_string(j));
      }
    }
  }

  void fit(const Matrix& train_x) {
    if (train_x.rows() < 2) {
      throw DataError("feature normalization needs at least 2 training rows, got " +
                      std::to_string(train_x.rows()));
    }
    const std::size_t n = train_x.rows();
    const std::size_t f = train_x.cols();
    means_.assign(f, 0.0);
    stds_.assign(f, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < f; ++j) {
        means_[j] += train_x(i, j);
      }
    }
    for (double& m : means_) {
      m /= static_cast<double>(n);
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < f; ++j) {
        const double d = train_x(i, j) - means_[j];
        stds_[j] += d * d;
      }
    }
    for (std::size_t j = 0; j < f; ++j) {
      const double sd = std::sqrt(stds_[j] / static_cast<double>(n));
      stds_[j] = sd <= 1e-12 * std::max(1.0, std::abs(means_[j])) ? 1.0 : sd;
    }
    fitted_ = true;
  }

  Matrix apply(const Matrix& x) const {
    if (!fitted_) {
      throw StateError("feature normalization applied before fit");
    }
    if (x.cols() != means_.size()) {
      throw ShapeError("feature normalization fitted on " + std::to_string(means_.size()) +
                       " columns, got " + x.shape());
    }
    Matrix out = x;
    for (std::size_t i = 0; i < out.rows(); ++i) {
      auto r = out.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) {
        r[j] = (r[j] - means_[j]) / stds_[j];
      }
    }
    out.check_finite("feature normalization");
    return out;
  }

  bool fitted() const noexcept { return fitted_; }
  std::size_t feature_count() const noexcept { return means_.size(); }
  const std::vector<double>& means() const noexcept { return means_; }
  const std::vector<double>& stds() const noexcept { return stds_; }

  friend bool operator==(const FeatureNormLayer&, const FeatureNormLayer&) = default;

private:
  std::vector<double> means_;
  std::vector<double> stds_;
  bool fitted_ = false;
};

// Free-function spellings used by the pipeline code.
inline FeatureNormLayer feature_norm_fit(const Matrix& train_x) {
  FeatureNormLayer layer;
  layer.fit(train_x);
  return layer;
}

inline Matrix feature_norm_apply(const FeatureNormLayer& layer, const Matrix& x) {
  return layer.apply(x);
}

} // namespace fasdnn
