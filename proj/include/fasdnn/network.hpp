#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fasdnn/config.hpp"
#include "fasdnn/layers.hpp"
#include "fasdnn/loss.hpp"
#include "fasdnn/numeric.hpp"

namespace fasdnn {

/**
 * Builds the dense layers of `cfg`. Weights are Glorot-uniform,
 * U(-a, a) with a = sqrt(6 / (fan_in + fan_out)), drawn layer by layer in
 * row-major order; biases start at zero.
 */
inline std::vector<DenseLayer> network_init(const NetworkConfig& cfg, SeededRng& rng) {
  validate(cfg);
  std::vector<DenseLayer> layers;
  layers.reserve(cfg.layers.size());
  std::size_t fan_in = cfg.input_dim;
  for (const auto& spec : cfg.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + spec.width));
    Matrix w(fan_in, spec.width);
    for (double& v : w.data()) {
      v = rng.uniform(-limit, limit);
    }
    layers.push_back(DenseLayer{std::move(w), Matrix(1, spec.width), spec.activation});
    fan_in = spec.width;
  }
  return layers;
}

struct LayerCache {
  Matrix input;
  Matrix pre_activation;
};

struct ForwardPass {
  std::vector<LayerCache> caches;
  Matrix output;
};

// Runs the optional normalization stage, then every dense layer in order.
inline ForwardPass network_forward(std::span<const DenseLayer> layers,
                                   const FeatureNormLayer* norm, const Matrix& x) {
  ForwardPass pass;
  Matrix current = norm != nullptr ? norm->apply(x) : x;
  pass.caches.reserve(layers.size());
  for (const auto& layer : layers) {
    DenseForward f = dense_forward(layer, current);
    pass.caches.push_back(LayerCache{std::move(current), std::move(f.pre_activation)});
    current = std::move(f.output);
  }
  pass.output = std::move(current);
  return pass;
}

/**
 * Parameter gradients of the mean loss for a completed forward pass. The
 * output layer's delta comes from the fused loss_grad; hidden layers use
 * their elementwise activation derivative.
 */
inline std::vector<DenseGradients> network_backward(std::span<const DenseLayer> layers,
                                                    const ForwardPass& pass, LossKind loss,
                                                    std::span<const int> labels) {
  if (layers.empty()) {
    return {};
  }
  if (pass.caches.size() != layers.size()) {
    throw ShapeError("network_backward: " + std::to_string(pass.caches.size()) +
                     " caches for " + std::to_string(layers.size()) + " layers");
  }
  std::vector<DenseGradients> grads(layers.size());
  const std::size_t last = layers.size() - 1;
  Matrix delta = loss_grad(loss, pass.caches[last].pre_activation, labels);
  for (std::size_t k = layers.size(); k-- > 0;) {
    if (k != last) {
      delta = hadamard(delta, activation_grad(layers[k].activation, pass.caches[k].pre_activation));
    }
    grads[k] = dense_backward_from_delta(layers[k], pass.caches[k].input, delta, k != 0);
    delta = std::move(grads[k].input);
  }
  return grads;
}

// Mean loss of the network on (x, labels); the objective network_backward
// differentiates.
inline double network_loss(std::span<const DenseLayer> layers, const FeatureNormLayer* norm,
                           LossKind loss, const Matrix& x, std::span<const int> labels) {
  return loss_forward(loss, network_forward(layers, norm, x).output, labels);
}

// Hard class decisions from output probabilities.
inline std::vector<int> decide(LossKind loss, const Matrix& probabilities) {
  std::vector<int> out;
  out.reserve(probabilities.rows());
  if (loss == LossKind::SparseCategoricalCE) {
    for (auto idx : argmax_rows(probabilities)) {
      out.push_back(static_cast<int>(idx));
    }
  } else {
    for (std::size_t i = 0; i < probabilities.rows(); ++i) {
      out.push_back(probabilities(i, 0) >= 0.5 ? 1 : 0);
    }
  }
  return out;
}

inline double fraction_correct(std::span<const int> predicted, std::span<const int> labels) {
  if (predicted.size() != labels.size()) {
    throw ShapeError("fraction_correct: " + std::to_string(predicted.size()) + " predictions vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (labels.empty()) {
    return 0.0;
  }
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hits += predicted[i] == labels[i] ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

} // namespace fasdnn
