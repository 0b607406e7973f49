#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fasdnn/config.hpp"
#include "fasdnn/errors.hpp"
#include "fasdnn/layers.hpp"
#include "fasdnn/numeric.hpp"

namespace fasdnn {

// Lower bound applied to the true-class probability before taking its log.
inline constexpr double kProbabilityFloor = 1e-12;

namespace detail {

inline void check_labels(LossKind kind, const Matrix& m, std::span<const int> labels) {
  if (m.rows() != labels.size()) {
    throw ShapeError(loss_name(kind) + ": " + std::to_string(labels.size()) + " labels for " +
                     m.shape() + " predictions");
  }
  if (m.cols() != output_width_for(kind)) {
    throw ShapeError(loss_name(kind) + " expects " + std::to_string(output_width_for(kind)) +
                     " output columns, got " + m.shape());
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) {
      throw DataError(loss_name(kind) + ": label " + std::to_string(labels[i]) + " at row " +
                      std::to_string(i) + " is not 0 or 1");
    }
  }
}

// Probability the model assigns to the true class of row i.
inline double true_class_probability(LossKind kind, const Matrix& p, std::size_t i, int label) {
  if (kind == LossKind::SparseCategoricalCE) {
    return p(i, static_cast<std::size_t>(label));
  }
  return label == 1 ? p(i, 0) : 1.0 - p(i, 0);
}

} // namespace detail

/**
 * Mean negative log-likelihood of the true class.
 *
 * `predictions` are post-activation probabilities: an N x 2 softmax output
 * for SparseCategoricalCE, an N x 1 sigmoid output for BinaryCE. The
 * true-class probability is floored at kProbabilityFloor, so a confident
 * misprediction costs about 27.6 rather than infinity, and an exact hit
 * costs exactly 0.
 */
inline double loss_forward(LossKind kind, const Matrix& predictions, std::span<const int> labels) {
  detail::check_labels(kind, predictions, labels);
  predictions.check_finite("loss_forward");
  if (labels.empty()) {
    return 0.0;
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double q = detail::true_class_probability(kind, predictions, i, labels[i]);
    total -= std::log(std::max(q, kProbabilityFloor));
  }
  return total / static_cast<double>(labels.size());
}

inline Matrix output_probabilities(LossKind kind, const Matrix& pre_activation) {
  return activation_apply(kind == LossKind::SparseCategoricalCE ? Activation::softmax()
                                                                : Activation::sigmoid(),
                          pre_activation);
}

// Gradient of loss_forward with respect to the final layer's pre-activation.
// Both regimes reduce to (p - y) / N, with y one-hot for the softmax case.
inline Matrix loss_grad(LossKind kind, const Matrix& pre_activation_final,
                        std::span<const int> labels) {
  detail::check_labels(kind, pre_activation_final, labels);
  Matrix g = output_probabilities(kind, pre_activation_final);
  if (labels.empty()) {
    return g;
  }
  const double inv_n = 1.0 / static_cast<double>(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (kind == LossKind::SparseCategoricalCE) {
      g(i, static_cast<std::size_t>(labels[i])) -= 1.0;
    } else {
      g(i, 0) -= static_cast<double>(labels[i]);
    }
    for (double& v : g.row(i)) {
      v *= inv_n;
    }
  }
  return g;
}

/**
 * Adam optimizer state: first and second moment estimates mirroring each
 * parameter matrix, plus the step counter.
 */
struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  double learning_rate = NetworkConfig::kDefaultLearningRate;
  double beta1 = kBeta1;
  double beta2 = kBeta2;
  double epsilon = kEpsilon;
  std::size_t t = 0;
  std::vector<Matrix> m;
  std::vector<Matrix> v;

  AdamState() = default;

  AdamState(std::span<const Matrix> params, double lr) : learning_rate(lr) {
    for (const Matrix& p : params) {
      add_slot(p);
    }
  }

  AdamState(std::span<Matrix* const> params, double lr) : learning_rate(lr) {
    for (const Matrix* p : params) {
      add_slot(*p);
    }
  }

private:
  void add_slot(const Matrix& p) {
    m.emplace_back(p.rows(), p.cols());
    v.emplace_back(p.rows(), p.cols());
  }
};

// One bias-corrected Adam update of every parameter in place.
inline void adam_step(AdamState& state, std::span<Matrix* const> params,
                      std::span<const Matrix* const> grads) {
  if (params.size() != grads.size() || params.size() != state.m.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters, " +
                     std::to_string(grads.size()) + " gradients, " +
                     std::to_string(state.m.size()) + " moment slots");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Matrix& p = *params[k];
    const Matrix& g = *grads[k];
    if (p.rows() != g.rows() || p.cols() != g.cols() || p.rows() != state.m[k].rows() ||
        p.cols() != state.m[k].cols()) {
      throw ShapeError("adam_step: parameter " + std::to_string(k) + " " + p.shape() +
                       " vs gradient " + g.shape() + " vs moments " + state.m[k].shape());
    }
    g.check_finite("adam_step gradient");
  }

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto pd = params[k]->data();
    auto gd = grads[k]->data();
    auto md = state.m[k].data();
    auto vd = state.v[k].data();
    for (std::size_t i = 0; i < pd.size(); ++i) {
      md[i] = state.beta1 * md[i] + (1.0 - state.beta1) * gd[i];
      vd[i] = state.beta2 * vd[i] + (1.0 - state.beta2) * gd[i] * gd[i];
      const double m_hat = md[i] / correction1;
      const double v_hat = vd[i] / correction2;
      pd[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    params[k]->check_finite("adam_step");
  }
}

inline void adam_step(AdamState& state, std::span<Matrix> params, std::span<const Matrix> grads) {
  std::vector<Matrix*> p;
  std::vector<const Matrix*> g;
  for (auto& m : params) {
    p.push_back(&m);
  }
  for (const auto& m : grads) {
    g.push_back(&m);
  }
  adam_step(state, std::span<Matrix* const>(p), std::span<const Matrix* const>(g));
}

} // namespace fasdnn
