#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "fasdnn/config.hpp"
#include "fasdnn/data.hpp"
#include "fasdnn/errors.hpp"
#include "fasdnn/io.hpp"
#include "fasdnn/train.hpp"

namespace fasdnn {

// 2x2 confusion counts with FASD as the positive class.
struct ConfusionMatrix {
  std::size_t tp = 0; // FASD predicted FASD
  std::size_t fp = 0; // control predicted FASD
  std::size_t tn = 0; // control predicted control
  std::size_t fn = 0; // FASD predicted control
  std::size_t total = 0;

  double percent(std::size_t cell) const {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(cell) / static_cast<double>(total);
  }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion_matrix(std::span<const int> predictions,
                                        std::span<const int> labels) {
  if (predictions.size() != labels.size()) {
    throw ShapeError("confusion_matrix: " + std::to_string(predictions.size()) +
                     " predictions vs " + std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int p = predictions[i];
    const int y = labels[i];
    if ((p != 0 && p != 1) || (y != 0 && y != 1)) {
      throw DataError("confusion_matrix: values must be 0 or 1 (row " + std::to_string(i) + ")");
    }
    if (y == kFasd) {
      (p == kFasd ? cm.tp : cm.fn) += 1;
    } else {
      (p == kFasd ? cm.fp : cm.tn) += 1;
    }
  }
  cm.total = labels.size();
  return cm;
}

inline double accuracy(const ConfusionMatrix& cm) {
  if (cm.total == 0) {
    throw ContractError("accuracy of an empty confusion matrix");
  }
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total);
}

// Percent-of-total table, two decimals, counts in parentheses.
inline std::string render_confusion(const ConfusionMatrix& cm) {
  auto cell = [&](std::size_t n) {
    return format_fixed2(cm.percent(n)) + "% (" + std::to_string(n) + ")";
  };
  const std::string c1 = "predicted FASD";
  const std::string c2 = "predicted control";
  std::vector<std::array<std::string, 3>> rows = {
      {"", c1, c2},
      {"actual FASD", cell(cm.tp), cell(cm.fn)},
      {"actual control", cell(cm.fp), cell(cm.tn)},
  };
  std::array<std::size_t, 3> width{};
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < 3; ++c) {
      width[c] = std::max(width[c], r[c].size());
    }
  }
  std::string out;
  for (const auto& r : rows) {
    out += r[0] + std::string(width[0] - r[0].size(), ' ');
    for (std::size_t c = 1; c < 3; ++c) {
      out += "  " + std::string(width[c] - r[c].size(), ' ') + r[c];
    }
    out += '\n';
  }
  out += "total " + std::to_string(cm.total) + ", accuracy " +
         (cm.total ? format_percent(accuracy(cm)) : std::string("n/a")) + '\n';
  return out;
}

struct ExperimentSpec {
  std::string name;
  Battery battery = Battery::Synthetic;
  NetworkConfig config;
  SplitSpec split;
  bool balance = false;
  std::vector<std::string> ablate;
};

// Reference accuracies (percent) reported for a builtin configuration.
// Display-only; nothing is asserted against them.
struct PublishedAccuracy {
  std::optional<double> train_percent;
  double test_percent = 0.0;
};

namespace detail {

inline std::vector<LayerSpec> leaky_stack(std::initializer_list<std::size_t> widths) {
  std::vector<LayerSpec> layers;
  for (auto w : widths) {
    layers.push_back({w, Activation::leaky_relu()});
  }
  layers.push_back({2, Activation::softmax()});
  return layers;
}

inline NetworkConfig binary_config(std::size_t input_dim, std::vector<LayerSpec> hidden,
                                   std::size_t epochs) {
  NetworkConfig cfg;
  cfg.input_dim = input_dim;
  cfg.layers = std::move(hidden);
  cfg.layers.push_back({1, Activation::sigmoid()});
  cfg.use_feature_layer = true;
  cfg.loss = LossKind::BinaryCE;
  cfg.epochs = epochs;
  return cfg;
}

// 64/128 interleave: sigmoid on the 64-wide layers, `wide` on the 128-wide.
inline std::vector<LayerSpec> interleaved(Activation wide) {
  return {{64, Activation::sigmoid()}, {128, wide}, {64, Activation::sigmoid()}, {128, wide}};
}

struct LayerGridRow {
  std::size_t input_layer;
  std::size_t hidden1;
  std::size_t hidden2; // 0 when absent
  double train_percent;
  double test_percent;
};

inline constexpr std::array<LayerGridRow, 9> kLayerGrid = {{
    {20, 15, 0, 80.72, 57.00},
    {25, 15, 0, 80.72, 55.00},
    {25, 20, 0, 90.24, 75.55},
    {25, 30, 0, 85.00, 65.63},
    {25, 20, 15, 88.00, 65.63},
    {50, 15, 0, 93.98, 60.00},
    {100, 50, 25, 91.00, 55.00},
    {200, 15, 0, 97.59, 64.00},
    {200, 50, 50, 97.00, 64.00},
}};

} // namespace detail

/**
 * The builtin experiments.
 *
 * table2-row1 .. table2-row9: psychometric input (20 features) into an
 * "input layer" of the listed width, one or two hidden layers, and a
 * 2-unit softmax output. Leaky ReLU (slope 0.01) everywhere else, sparse
 * categorical cross-entropy, 1000 epochs, 75/25 split, no normalization.
 *
 * The remaining five add the normalization stage, balance the classes,
 * split 80/20 and use a 1-unit sigmoid output with binary cross-entropy:
 *   antisaccade-128x2, prosaccade-128x2   two ReLU layers of 128, 50 epochs
 *   psychometric-feature-layer,
 *   memory-guided-interleaved             64 sigmoid, 128 ReLU, 64 sigmoid,
 *                                         128 ReLU, 50 epochs
 *   dti-leaky-100ep                       same interleave with Leaky ReLU in
 *                                         place of ReLU, 100 epochs
 */
inline std::vector<ExperimentSpec> builtin_registry() {
  std::vector<ExperimentSpec> specs;
  const std::size_t psych = *battery_schema(Battery::Psychometric).expected_feature_count;
  for (std::size_t r = 0; r < detail::kLayerGrid.size(); ++r) {
    const auto& row = detail::kLayerGrid[r];
    ExperimentSpec s;
    s.name = "table2-row" + std::to_string(r + 1);
    s.battery = Battery::Psychometric;
    s.config.input_dim = psych;
    s.config.layers = row.hidden2 == 0 ? detail::leaky_stack({row.input_layer, row.hidden1})
                                       : detail::leaky_stack({row.input_layer, row.hidden1,
                                                              row.hidden2});
    s.config.use_feature_layer = false;
    s.config.loss = LossKind::SparseCategoricalCE;
    s.config.epochs = 1000;
    s.split = SplitSpec{0.75, true, 0};
    s.balance = false;
    specs.push_back(std::move(s));
  }

  auto second = [&](std::string name, Battery b, std::vector<LayerSpec> hidden,
                    std::size_t epochs) {
    ExperimentSpec s;
    s.name = std::move(name);
    s.battery = b;
    s.config = detail::binary_config(*battery_schema(b).expected_feature_count, std::move(hidden),
                                     epochs);
    s.split = SplitSpec{0.8, true, 0};
    s.balance = true;
    specs.push_back(std::move(s));
  };
  const std::vector<LayerSpec> two_by_128 = {{128, Activation::relu()},
                                             {128, Activation::relu()}};
  second("psychometric-feature-layer", Battery::Psychometric,
         detail::interleaved(Activation::relu()), 50);
  second("antisaccade-128x2", Battery::Antisaccade, two_by_128, 50);
  second("prosaccade-128x2", Battery::Prosaccade, two_by_128, 50);
  second("memory-guided-interleaved", Battery::MemoryGuided,
         detail::interleaved(Activation::relu()), 50);
  second("dti-leaky-100ep", Battery::DTI, detail::interleaved(Activation::leaky_relu()), 100);
  return specs;
}

inline std::optional<PublishedAccuracy> published_accuracy(const std::string& spec_name) {
  for (std::size_t r = 0; r < detail::kLayerGrid.size(); ++r) {
    if (spec_name == "table2-row" + std::to_string(r + 1)) {
      return PublishedAccuracy{detail::kLayerGrid[r].train_percent, detail::kLayerGrid[r].test_percent};
    }
  }
  static const std::map<std::string, double> second = {
      {"psychometric-feature-layer", 88.46},
      {"prosaccade-128x2", 72.41},
      {"memory-guided-interleaved", 88.0},
      {"dti-leaky-100ep", 75.0},
  };
  if (auto it = second.find(spec_name); it != second.end()) {
    return PublishedAccuracy{std::nullopt, it->second};
  }
  return std::nullopt;
}

// Names accepted wherever a set of builtin specs is expected.
inline std::vector<ExperimentSpec> builtin_set(const std::string& name) {
  auto all = builtin_registry();
  std::vector<ExperimentSpec> out;
  for (auto& s : all) {
    const bool table2 = s.name.rfind("table2-", 0) == 0;
    if (name == "all" || (name == "table2" && table2) || (name == "feature-layer" && !table2) ||
        s.name == name) {
      out.push_back(s);
    }
  }
  if (out.empty()) {
    throw ConfigError("unknown builtin spec or set '" + name +
                      "' (sets: table2, feature-layer, all)");
  }
  return out;
}

inline ExperimentSpec builtin_spec(const std::string& name) {
  for (auto& s : builtin_registry()) {
    if (s.name == name) {
      return s;
    }
  }
  throw ConfigError("unknown builtin spec '" + name + "'");
}

// The same experiment with `names` removed from the inputs before training.
inline ExperimentSpec with_ablation(ExperimentSpec spec, const std::vector<std::string>& names) {
  if (names.empty()) {
    return spec;
  }
  spec.ablate.insert(spec.ablate.end(), names.begin(), names.end());
  spec.name += "-without";
  for (const auto& n : names) {
    spec.name += "-" + n;
  }
  return spec;
}

struct RunResult {
  std::string spec_name;
  Battery battery = Battery::Synthetic;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  ConfusionMatrix confusion;
  std::shared_ptr<const History> history;

  double gap() const { return train_accuracy - test_accuracy; }

  friend bool operator==(const RunResult& a, const RunResult& b) {
    const bool hist_eq = (a.history == nullptr && b.history == nullptr) ||
                         (a.history && b.history && *a.history == *b.history);
    return a.spec_name == b.spec_name && a.battery == b.battery && a.seed == b.seed &&
           a.ok == b.ok && a.error == b.error && a.train_accuracy == b.train_accuracy &&
           a.test_accuracy == b.test_accuracy && a.confusion == b.confusion && hist_eq;
  }
};

namespace detail {

[[noreturn]] inline void rethrow_annotated(const std::string& prefix) {
  try {
    throw;
  } catch (const DivergenceError& e) {
    throw DivergenceError(prefix + e.what(), e.epoch());
  } catch (const SchemaError& e) {
    throw SchemaError(prefix + e.what());
  } catch (const ParseError& e) {
    throw ParseError(prefix + e.what());
  } catch (const LookupError& e) {
    throw LookupError(prefix + e.what());
  } catch (const DataError& e) {
    throw DataError(prefix + e.what());
  } catch (const ShapeError& e) {
    throw ShapeError(prefix + e.what());
  } catch (const ConfigError& e) {
    throw ConfigError(prefix + e.what());
  } catch (const Error& e) {
    throw Error(prefix + e.what());
  }
}

} // namespace detail

struct PreparedRun {
  NetworkConfig config;
  TrainTest data;
};

/**
 * Ablation, balancing, splitting and config binding for one run. Sub-seeds
 * are derived from `seed`: stream 1 drives balancing, 2 the split, 3 the
 * weight initialization. The config's input_dim is bound to the prepared
 * feature count.
 */
inline PreparedRun prepare_run(const ExperimentSpec& spec, const Dataset& ds, std::uint64_t seed) {
  if (ds.battery != spec.battery && ds.battery != Battery::Synthetic) {
    throw DataError("spec is for " + battery_name(spec.battery) + " data, got " +
                    battery_name(ds.battery));
  }
  Dataset prepared = spec.ablate.empty() ? ds : drop_features(ds, spec.ablate);
  if (spec.balance) {
    SeededRng rng(derive_seed(seed, 1));
    prepared = balance_downsample(prepared, rng);
  }
  SplitSpec split = spec.split;
  split.seed = derive_seed(seed, 2);
  PreparedRun run;
  run.data = stratified_split(prepared, split);
  run.config = spec.config;
  run.config.input_dim = prepared.features();
  run.config.seed = derive_seed(seed, 3);
  return run;
}

inline RunResult run_experiment(const ExperimentSpec& spec, const Dataset& ds,
                                 std::uint64_t seed) {
  try {
    PreparedRun run = prepare_run(spec, ds, seed);
    auto trained = train(run.config, run.data.train, run.data.test);
    RunResult r;
    r.spec_name = spec.name;
    r.battery = spec.battery;
    r.seed = seed;
    r.confusion = confusion_matrix(trained.model.predict(run.data.test.x), run.data.test.y);
    r.test_accuracy = accuracy(r.confusion);
    r.train_accuracy = trained.model.accuracy_on(run.data.train);
    r.history = std::make_shared<const History>(std::move(trained.history));
    return r;
  } catch (const Error&) {
    detail::rethrow_annotated(spec.name + ": ");
  }
}

inline double median(std::vector<double> values) {
  if (values.empty()) {
    throw ContractError("median of an empty list");
  }
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

inline double mean(const std::vector<double>& values) {
  if (values.empty()) {
    throw ContractError("mean of an empty list");
  }
  double s = 0.0;
  for (double v : values) {
    s += v;
  }
  return s / static_cast<double>(values.size());
}

// Population standard deviation.
inline double population_std(const std::vector<double>& values) {
  const double m = mean(values);
  double s = 0.0;
  for (double v : values) {
    s += (v - m) * (v - m);
  }
  return std::sqrt(s / static_cast<double>(values.size()));
}

/**
 * Runs every (spec, seed) pair. Results are ordered spec-major in the order
 * given, then by seed order, regardless of `threads`. A failing run is
 * recorded with ok = false and its message; the sweep carries on.
 */
inline std::vector<RunResult> run_sweep(const std::vector<ExperimentSpec>& specs,
                                        const Dataset& ds, const std::vector<std::uint64_t>& seeds,
                                        unsigned threads = 1) {
  if (seeds.empty()) {
    throw ConfigError("sweep needs at least one seed");
  }
  std::set<std::string> names;
  for (const auto& s : specs) {
    if (!names.insert(s.name).second) {
      throw ConfigError("duplicate spec name '" + s.name + "' in sweep");
    }
  }
  const std::size_t jobs = specs.size() * seeds.size();
  std::vector<RunResult> results(jobs);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs; i = next++) {
      const auto& spec = specs[i / seeds.size()];
      const auto seed = seeds[i % seeds.size()];
      try {
        results[i] = run_experiment(spec, ds, seed);
      } catch (const std::exception& e) {
        RunResult failed;
        failed.spec_name = spec.name;
        failed.battery = spec.battery;
        failed.seed = seed;
        failed.ok = false;
        failed.error = e.what();
        results[i] = std::move(failed);
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(jobs)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n_threads; ++t) {
      pool.emplace_back(worker);
    }
  }
  return results;
}

struct SpecSummary {
  std::string name;
  Battery battery = Battery::Synthetic;
  std::size_t runs_ok = 0;
  std::size_t runs_failed = 0;
  double median_test = 0.0;
  double mean_test = 0.0;
  double median_train = 0.0;
  double mean_train = 0.0;
  double median_gap = 0.0; // median over runs of (train - test)
};

// One row per spec in first-appearance order; specs with no successful runs
// keep zero statistics.
inline std::vector<SpecSummary> summarize(const std::vector<RunResult>& results) {
  std::vector<SpecSummary> out;
  std::map<std::string, std::size_t> index;
  std::vector<std::vector<const RunResult*>> groups;
  for (const auto& r : results) {
    auto [it, inserted] = index.emplace(r.spec_name, out.size());
    if (inserted) {
      out.push_back(SpecSummary{r.spec_name, r.battery});
      groups.emplace_back();
    }
    groups[it->second].push_back(&r);
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::vector<double> test, train, gap;
    for (const auto* r : groups[k]) {
      if (!r->ok) {
        out[k].runs_failed += 1;
        continue;
      }
      out[k].runs_ok += 1;
      test.push_back(r->test_accuracy);
      train.push_back(r->train_accuracy);
      gap.push_back(r->gap());
    }
    if (!test.empty()) {
      out[k].median_test = median(test);
      out[k].mean_test = mean(test);
      out[k].median_train = median(train);
      out[k].mean_train = mean(train);
      out[k].median_gap = median(gap);
    }
  }
  return out;
}

// Summaries sorted by median test accuracy, best first; ties keep input order.
inline std::vector<SpecSummary> ranked(std::vector<SpecSummary> summaries) {
  std::stable_sort(summaries.begin(), summaries.end(),
                   [](const SpecSummary& a, const SpecSummary& b) {
                     return a.median_test > b.median_test;
                   });
  return summaries;
}

// spec,seed,train_acc,test_acc,tp,fp,tn,fn for each successful run.
inline std::string runs_csv(const std::vector<RunResult>& results) {
  std::string out = "spec,seed,train_acc,test_acc,tp,fp,tn,fn\n";
  for (const auto& r : results) {
    if (!r.ok) {
      continue;
    }
    out += r.spec_name + ',' + std::to_string(r.seed) + ',' + format_double(r.train_accuracy) +
           ',' + format_double(r.test_accuracy) + ',' + std::to_string(r.confusion.tp) + ',' +
           std::to_string(r.confusion.fp) + ',' + std::to_string(r.confusion.tn) + ',' +
           std::to_string(r.confusion.fn) + '\n';
  }
  return out;
}

// Inverse of runs_csv; battery is left as Synthetic, history empty.
inline std::vector<RunResult> parse_runs_csv(const std::string& text,
                                             const std::string& source = "runs.csv") {
  auto lines = split_lines(text);
  if (lines.empty() || lines.front() != "spec,seed,train_acc,test_acc,tp,fp,tn,fn") {
    throw ParseError(source + ": unexpected header");
  }
  std::vector<RunResult> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) {
      continue;
    }
    const auto c = split_csv_line(lines[i]);
    if (c.size() != 8) {
      throw ParseError(source + ": line " + std::to_string(i + 1) + " has " +
                       std::to_string(c.size()) + " cells");
    }
    auto num = [&](std::size_t k) {
      const auto v = parse_double(c[k]);
      if (!v) {
        throw ParseError(source + ": line " + std::to_string(i + 1) + ", column " +
                         std::to_string(k + 1) + " is not numeric");
      }
      return *v;
    };
    RunResult r;
    r.spec_name = c[0];
    try {
      r.seed = std::stoull(c[1]);
    } catch (const std::exception&) {
      throw ParseError(source + ": line " + std::to_string(i + 1) + ", bad seed '" + c[1] + "'");
    }
    r.train_accuracy = num(2);
    r.test_accuracy = num(3);
    r.confusion.tp = static_cast<std::size_t>(num(4));
    r.confusion.fp = static_cast<std::size_t>(num(5));
    r.confusion.tn = static_cast<std::size_t>(num(6));
    r.confusion.fn = static_cast<std::size_t>(num(7));
    r.confusion.total = r.confusion.tp + r.confusion.fp + r.confusion.tn + r.confusion.fn;
    out.push_back(std::move(r));
  }
  return out;
}

inline nlohmann::json summary_json(const std::vector<RunResult>& results,
                                   const std::vector<std::uint64_t>& seeds) {
  nlohmann::json specs = nlohmann::json::array();
  for (const auto& s : summarize(results)) {
    specs.push_back({{"name", s.name},
                     {"battery", battery_name(s.battery)},
                     {"runs_ok", s.runs_ok},
                     {"runs_failed", s.runs_failed},
                     {"median_test_acc", s.median_test},
                     {"mean_test_acc", s.mean_test},
                     {"median_train_acc", s.median_train},
                     {"mean_train_acc", s.mean_train},
                     {"median_gap", s.median_gap}});
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& r : results) {
    if (!r.ok) {
      failures.push_back({{"spec", r.spec_name}, {"seed", r.seed}, {"error", r.error}});
    }
  }
  return {{"seeds", seeds}, {"specs", specs}, {"failures", failures}};
}

/**
 * Human-readable sweep report: specs ranked by median test accuracy with
 * the generalization gap, any published reference figures, and the list of
 * failed runs.
 */
inline std::string summary_text(const std::vector<RunResult>& results,
                                const std::vector<std::uint64_t>& seeds) {
  std::string out = "seeds:";
  for (auto s : seeds) {
    out += " " + std::to_string(s);
  }
  out += "\n\n";
  std::vector<std::array<std::string, 8>> rows = {{"spec", "runs", "median test", "mean test",
                                                   "median train", "median gap",
                                                   "published train", "published test"}};
  for (const auto& s : ranked(summarize(results))) {
    const auto pub = published_accuracy(s.name);
    auto pct = [](const std::optional<double>& v) {
      return v ? format_fixed2(*v) + "%" : std::string("-");
    };
    const bool any = s.runs_ok > 0;
    rows.push_back({s.name,
                    std::to_string(s.runs_ok) + "/" + std::to_string(s.runs_ok + s.runs_failed),
                    any ? format_percent(s.median_test) : "-",
                    any ? format_percent(s.mean_test) : "-",
                    any ? format_percent(s.median_train) : "-",
                    any ? format_fixed2(100.0 * s.median_gap) + " pp" : "-",
                    pub ? pct(pub->train_percent) : "-",
                    pub ? pct(pub->test_percent) : "-"});
  }
  std::array<std::size_t, 8> width{};
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      width[c] = std::max(width[c], r[c].size());
    }
  }
  for (const auto& r : rows) {
    std::string line = r[0] + std::string(width[0] - r[0].size(), ' ');
    for (std::size_t c = 1; c < r.size(); ++c) {
      line += "  " + std::string(width[c] - r[c].size(), ' ') + r[c];
    }
    out += line + '\n';
  }
  std::string failures;
  for (const auto& r : results) {
    if (!r.ok) {
      failures += "  " + r.spec_name + " seed " + std::to_string(r.seed) + ": FAILED: " +
                  r.error + '\n';
    }
  }
  out += failures.empty() ? "\nall runs succeeded\n" : "\nfailed runs:\n" + failures;
  out += "\npublished figures are reference values from a different setup (unknown seeds, "
         "learning rate and splits); they are not reproduction targets\n";
  return out;
}

struct BaselineEntry {
  Battery battery = Battery::Synthetic;
  double accuracy_percent = 0.0;
  std::string source;
};

/**
 * Per-battery reference accuracies (percent) to compare against. published()
 * carries the accuracies reported for the original feature-layer networks;
 * user tables are read from CSV with columns battery,accuracy[,source].
 */
class BaselineTable {
public:
  BaselineTable() = default;
  explicit BaselineTable(std::vector<BaselineEntry> entries) : entries_(std::move(entries)) {
    std::set<Battery> seen;
    for (const auto& e : entries_) {
      if (!seen.insert(e.battery).second) {
        throw ConfigError("baseline table lists " + battery_name(e.battery) + " twice");
      }
      if (!std::isfinite(e.accuracy_percent)) {
        throw ConfigError("baseline accuracy for " + battery_name(e.battery) + " is not finite");
      }
    }
  }

  static BaselineTable published() {
    const std::string src = "published ANN accuracy";
    return BaselineTable({{Battery::Psychometric, 88.46, src},
                          {Battery::Prosaccade, 72.41, src},
                          {Battery::MemoryGuided, 88.0, src},
                          {Battery::DTI, 75.0, src}});
  }

  const std::vector<BaselineEntry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  const BaselineEntry* find(Battery b) const {
    for (const auto& e : entries_) {
      if (e.battery == b) {
        return &e;
      }
    }
    return nullptr;
  }

private:
  std::vector<BaselineEntry> entries_;
};

inline BaselineTable parse_baselines_csv(const std::string& text,
                                         const std::string& source = "baselines") {
  auto lines = split_lines(text);
  std::vector<BaselineEntry> entries;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty() || (i == 0 && lines[i].rfind("battery", 0) == 0)) {
      continue;
    }
    const auto c = split_csv_line(lines[i]);
    if (c.size() < 2 || c.size() > 3) {
      throw ParseError(source + ": line " + std::to_string(i + 1) +
                       " must be battery,accuracy[,source]");
    }
    const auto acc = parse_double(c[1]);
    if (!acc) {
      throw ParseError(source + ": line " + std::to_string(i + 1) + ", accuracy '" + c[1] +
                       "' is not numeric");
    }
    entries.push_back({battery_from_name(c[0]), *acc, c.size() == 3 ? c[2] : "user-supplied"});
  }
  return BaselineTable(std::move(entries));
}

struct ComparisonRow {
  Battery battery = Battery::Synthetic;
  std::string spec;          // best spec for this battery
  double ours_percent = 0.0; // its median test accuracy
  std::optional<double> baseline_percent;
  std::string baseline_source;
  std::optional<double> difference; // ours - baseline, percentage points
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::size_t compared = 0;
  std::optional<double> mean_difference;
  std::optional<double> std_difference; // population

  std::string text() const {
    std::vector<std::array<std::string, 6>> t = {
        {"battery", "spec", "ours", "baseline", "difference", "baseline source"}};
    for (const auto& r : rows) {
      t.push_back({battery_name(r.battery), r.spec, format_fixed2(r.ours_percent) + "%",
                   r.baseline_percent ? format_fixed2(*r.baseline_percent) + "%" : "-",
                   r.difference ? format_fixed2(*r.difference) + " pp" : "-",
                   r.baseline_percent ? r.baseline_source : "-"});
    }
    std::array<std::size_t, 6> w{};
    for (const auto& r : t) {
      for (std::size_t c = 0; c < 6; ++c) {
        w[c] = std::max(w[c], r[c].size());
      }
    }
    std::string out;
    for (const auto& r : t) {
      std::string line;
      for (std::size_t c = 0; c < 6; ++c) {
        const bool left = c < 2 || c == 5;
        const std::string pad(w[c] - r[c].size(), ' ');
        line += (c ? "  " : "") + (left ? r[c] + pad : pad + r[c]);
      }
      while (!line.empty() && line.back() == ' ') {
        line.pop_back();
      }
      out += line + '\n';
    }
    if (mean_difference) {
      out += "\nbatteries compared: " + std::to_string(compared) + "\nmean difference: " +
             format_fixed2(*mean_difference) + " pp\nstd of differences (population): " +
             format_fixed2(*std_difference) + " pp\n";
    } else {
      out += "\nno baseline values: ours-only report\n";
    }
    return out;
  }

  // battery,ours,baseline (percent, full precision; empty baseline if none).
  std::string csv() const {
    std::string out = "battery,ours,baseline\n";
    for (const auto& r : rows) {
      out += battery_name(r.battery) + ',' + format_double(r.ours_percent) + ',' +
             (r.baseline_percent ? format_double(*r.baseline_percent) : std::string()) + '\n';
    }
    return out;
  }
};

/**
 * Our accuracy per battery against the baseline table. For each battery the
 * spec with the highest median test accuracy represents it. Differences are
 * in percentage points; their standard deviation is the population one.
 *
 * An empty baseline table yields an ours-only report. A non-empty table that
 * shares no battery with the results is a ReportError.
 */
inline ComparisonReport comparison_report(const std::vector<RunResult>& results,
                                          const BaselineTable& baselines) {
  const auto summaries = summarize(results);
  std::map<Battery, const SpecSummary*> best;
  std::vector<Battery> order;
  for (const auto& s : summaries) {
    if (s.runs_ok == 0) {
      continue;
    }
    auto it = best.find(s.battery);
    if (it == best.end()) {
      best.emplace(s.battery, &s);
      order.push_back(s.battery);
    } else if (s.median_test > it->second->median_test) {
      it->second = &s;
    }
  }
  if (best.empty()) {
    throw ReportError("no successful runs to report");
  }
  std::sort(order.begin(), order.end());

  ComparisonReport rep;
  std::vector<double> diffs;
  for (auto b : order) {
    const auto* s = best.at(b);
    ComparisonRow row;
    row.battery = b;
    row.spec = s->name;
    row.ours_percent = 100.0 * s->median_test;
    if (const auto* e = baselines.find(b)) {
      row.baseline_percent = e->accuracy_percent;
      row.baseline_source = e->source;
      row.difference = row.ours_percent - e->accuracy_percent;
      diffs.push_back(*row.difference);
    }
    rep.rows.push_back(std::move(row));
  }
  if (!baselines.empty() && diffs.empty()) {
    throw ReportError("results share no battery with the baseline table");
  }
  rep.compared = diffs.size();
  if (!diffs.empty()) {
    rep.mean_difference = mean(diffs);
    rep.std_difference = population_std(diffs);
  }
  return rep;
}

} // namespace fasdnn
