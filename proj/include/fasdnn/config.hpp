#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fasdnn/errors.hpp"
#include "fasdnn/layers.hpp"

namespace fasdnn {

enum class LossKind {
  SparseCategoricalCE, // softmax output with 2 units, integer labels
  BinaryCE,            // sigmoid output with 1 unit
};

inline std::string loss_name(LossKind kind) {
  return kind == LossKind::SparseCategoricalCE ? "sparse_categorical_crossentropy"
                                               : "binary_crossentropy";
}

inline LossKind loss_kind_from_name(const std::string& name) {
  if (name == "sparse_categorical_crossentropy") {
    return LossKind::SparseCategoricalCE;
  }
  if (name == "binary_crossentropy") {
    return LossKind::BinaryCE;
  }
  throw ConfigError("unknown loss '" + name + "'");
}

struct LayerSpec {
  std::size_t width = 0;
  Activation activation;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/**
 * A dense network and its training regime. `layers` lists every dense layer
 * in order, output layer included; the first layer consumes `input_dim`
 * features.
 */
struct NetworkConfig {
  static constexpr double kDefaultLearningRate = 0.001;

  std::size_t input_dim = 0;
  std::vector<LayerSpec> layers;
  bool use_feature_layer = false;
  LossKind loss = LossKind::SparseCategoricalCE;
  std::size_t epochs = 1;
  double learning_rate = kDefaultLearningRate;
  std::uint64_t seed = 0;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

inline std::size_t output_width_for(LossKind kind) {
  return kind == LossKind::SparseCategoricalCE ? 2 : 1;
}

inline void validate(const NetworkConfig& cfg) {
  if (cfg.input_dim < 1) {
    throw ConfigError("input_dim must be at least 1");
  }
  if (cfg.layers.empty()) {
    throw ConfigError("network needs at least an output layer");
  }
  if (cfg.epochs < 1) {
    throw ConfigError("epochs must be at least 1");
  }
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
    throw ConfigError("learning_rate must be positive and finite");
  }
  for (std::size_t i = 0; i < cfg.layers.size(); ++i) {
    const auto& l = cfg.layers[i];
    if (l.width < 1) {
      throw ConfigError("layer " + std::to_string(i) + " has width 0");
    }
    l.activation.validate();
    if (l.activation.kind == ActivationKind::Softmax && i + 1 != cfg.layers.size()) {
      throw ConfigError("softmax is only allowed on the final layer (found on layer " +
                        std::to_string(i) + ")");
    }
  }
  const auto& out = cfg.layers.back();
  const std::size_t want = output_width_for(cfg.loss);
  if (out.width != want) {
    throw ConfigError(loss_name(cfg.loss) + " needs a final width of " + std::to_string(want) +
                      ", got " + std::to_string(out.width));
  }
  const auto want_act = cfg.loss == LossKind::SparseCategoricalCE ? ActivationKind::Softmax
                                                                  : ActivationKind::Sigmoid;
  if (out.activation.kind != want_act) {
    throw ConfigError(loss_name(cfg.loss) + " needs a " + activation_name(want_act) +
                      " output layer, got " + activation_name(out.activation.kind));
  }
}

// JSON form. Keys are emitted sorted, so dump() of the same config is always
// the same bytes.
inline nlohmann::json to_json(const LayerSpec& l) {
  nlohmann::json j = {{"width", l.width}, {"activation", activation_name(l.activation.kind)}};
  if (l.activation.kind == ActivationKind::LeakyReLU) {
    j["slope"] = l.activation.slope;
  }
  return j;
}

inline nlohmann::json to_json(const NetworkConfig& cfg) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : cfg.layers) {
    layers.push_back(to_json(l));
  }
  return {
      {"input_dim", cfg.input_dim},
      {"layers", layers},
      {"use_feature_layer", cfg.use_feature_layer},
      {"loss", loss_name(cfg.loss)},
      {"epochs", cfg.epochs},
      {"learning_rate", cfg.learning_rate},
      {"seed", cfg.seed},
  };
}

inline NetworkConfig network_config_from_json(const nlohmann::json& j) {
  try {
    NetworkConfig cfg;
    cfg.input_dim = j.at("input_dim").get<std::size_t>();
    for (const auto& lj : j.at("layers")) {
      LayerSpec l;
      l.width = lj.at("width").get<std::size_t>();
      l.activation.kind = activation_kind_from_name(lj.at("activation").get<std::string>());
      if (l.activation.kind == ActivationKind::LeakyReLU) {
        l.activation.slope = lj.value("slope", Activation::kDefaultLeakySlope);
      }
      cfg.layers.push_back(l);
    }
    cfg.use_feature_layer = j.at("use_feature_layer").get<bool>();
    cfg.loss = loss_kind_from_name(j.at("loss").get<std::string>());
    cfg.epochs = j.at("epochs").get<std::size_t>();
    cfg.learning_rate = j.value("learning_rate", NetworkConfig::kDefaultLearningRate);
    cfg.seed = j.value("seed", std::uint64_t{0});
    validate(cfg);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed network config: ") + e.what());
  }
}

inline std::string serialize_config(const NetworkConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

inline NetworkConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return network_config_from_json(j);
}

inline NetworkConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file '" + path + "'");
  }
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

} // namespace fasdnn
