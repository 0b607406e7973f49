#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fasdnn/config.hpp"
#include "fasdnn/data.hpp"
#include "fasdnn/io.hpp"
#include "fasdnn/layers.hpp"
#include "fasdnn/loss.hpp"
#include "fasdnn/network.hpp"
#include "fasdnn/numeric.hpp"

namespace fasdnn {

// Per-epoch learning curves.
struct History {
  std::vector<double> train_loss;
  std::vector<double> train_acc;
  std::vector<double> val_loss;
  std::vector<double> val_acc;

  std::size_t epochs() const noexcept { return train_loss.size(); }

  friend bool operator==(const History&, const History&) = default;
};

// Columns: epoch, train_loss, train_acc, val_loss, val_acc. Epochs are
// 1-based; values use shortest round-trip formatting.
inline std::string history_csv(const History& h) {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (std::size_t e = 0; e < h.epochs(); ++e) {
    out += std::to_string(e + 1) + ',' + format_double(h.train_loss[e]) + ',' +
           format_double(h.train_acc[e]) + ',' + format_double(h.val_loss[e]) + ',' +
           format_double(h.val_acc[e]) + '\n';
  }
  return out;
}

struct TrainedModel {
  NetworkConfig config;
  std::optional<FeatureNormLayer> norm;
  std::vector<DenseLayer> layers;

  const FeatureNormLayer* norm_ptr() const { return norm ? &*norm : nullptr; }

  Matrix predict_proba(const Matrix& x) const {
    return network_forward(layers, norm_ptr(), x).output;
  }

  std::vector<int> predict(const Matrix& x) const { return decide(config.loss, predict_proba(x)); }

  double accuracy_on(const Dataset& ds) const { return fraction_correct(predict(ds.x), ds.y); }

  double loss_on(const Dataset& ds) const {
    return loss_forward(config.loss, predict_proba(ds.x), ds.y);
  }
};

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  return {{"rows", m.rows()},
          {"cols", m.cols()},
          {"data", std::vector<double>(m.data().begin(), m.data().end())}};
}

inline Matrix matrix_from_json(const nlohmann::json& j) {
  return Matrix(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>(),
                j.at("data").get<std::vector<double>>());
}

} // namespace detail

inline nlohmann::json to_json(const TrainedModel& model) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : model.layers) {
    layers.push_back({{"weights", detail::matrix_to_json(l.weights)},
                      {"bias", detail::matrix_to_json(l.bias)}});
  }
  nlohmann::json j = {{"config", to_json(model.config)}, {"layers", layers}};
  if (model.norm) {
    j["feature_layer"] = {{"means", model.norm->means()}, {"stds", model.norm->stds()}};
  } else {
    j["feature_layer"] = nullptr;
  }
  return j;
}

inline TrainedModel trained_model_from_json(const nlohmann::json& j) {
  try {
    TrainedModel model;
    model.config = network_config_from_json(j.at("config"));
    const auto& lj = j.at("layers");
    if (lj.size() != model.config.layers.size()) {
      throw ConfigError("model file has " + std::to_string(lj.size()) + " layers, config has " +
                        std::to_string(model.config.layers.size()));
    }
    for (std::size_t k = 0; k < lj.size(); ++k) {
      model.layers.push_back(DenseLayer{detail::matrix_from_json(lj[k].at("weights")),
                                        detail::matrix_from_json(lj[k].at("bias")),
                                        model.config.layers[k].activation});
    }
    const auto& fl = j.at("feature_layer");
    if (!fl.is_null()) {
      model.norm = FeatureNormLayer(fl.at("means").get<std::vector<double>>(),
                                    fl.at("stds").get<std::vector<double>>());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed model file: ") + e.what());
  }
}

struct TrainResult {
  TrainedModel model;
  History history;
};

/**
 * Full-batch Adam training for config.epochs epochs.
 *
 * Each epoch runs one forward/backward pass over the whole training set and
 * one optimizer step. The recorded training loss/accuracy come from that
 * epoch's forward pass (before the step); validation loss/accuracy are
 * measured after the step.
 *
 * With use_feature_layer the normalization statistics are fitted on the
 * training rows only. Throws DivergenceError (carrying the 1-based epoch) if
 * the loss or any parameter stops being finite.
 */
inline TrainResult train(const NetworkConfig& config, const Dataset& train_set,
                         const Dataset& valid_set) {
  validate(config);
  train_set.validate();
  valid_set.validate();
  if (train_set.rows() == 0 || valid_set.rows() == 0) {
    throw DataError("training and validation sets must both be non-empty");
  }
  if (train_set.features() != config.input_dim || valid_set.features() != config.input_dim) {
    throw ShapeError("config expects " + std::to_string(config.input_dim) +
                     " features, train set has " + std::to_string(train_set.features()) +
                     ", validation set has " + std::to_string(valid_set.features()));
  }

  SeededRng rng(config.seed);
  TrainResult result;
  TrainedModel& model = result.model;
  model.config = config;
  model.layers = network_init(config, rng);

  Matrix train_x = train_set.x;
  Matrix valid_x = valid_set.x;
  if (config.use_feature_layer) {
    model.norm = feature_norm_fit(train_set.x);
    train_x = model.norm->apply(train_x);
    valid_x = model.norm->apply(valid_x);
  }

  std::vector<Matrix*> params;
  for (auto& l : model.layers) {
    params.push_back(&l.weights);
    params.push_back(&l.bias);
  }
  AdamState adam(std::span<Matrix* const>(params), config.learning_rate);

  History& h = result.history;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    try {
      const ForwardPass pass = network_forward(model.layers, nullptr, train_x);
      const double loss = loss_forward(config.loss, pass.output, train_set.y);
      if (!std::isfinite(loss)) {
        throw NonFiniteError("training loss is not finite");
      }
      h.train_loss.push_back(loss);
      h.train_acc.push_back(fraction_correct(decide(config.loss, pass.output), train_set.y));

      const auto grads = network_backward(model.layers, pass, config.loss, train_set.y);
      std::vector<const Matrix*> gptr;
      for (const auto& g : grads) {
        gptr.push_back(&g.weights);
        gptr.push_back(&g.bias);
      }
      adam_step(adam, std::span<Matrix* const>(params), std::span<const Matrix* const>(gptr));

      const Matrix val_out = network_forward(model.layers, nullptr, valid_x).output;
      h.val_loss.push_back(loss_forward(config.loss, val_out, valid_set.y));
      h.val_acc.push_back(fraction_correct(decide(config.loss, val_out), valid_set.y));
    } catch (const NonFiniteError& e) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) + ": " +
                                e.what(),
                            epoch);
    }
  }
  return result;
}

} // namespace fasdnn
