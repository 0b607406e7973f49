#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fasdnn/errors.hpp"
#include "fasdnn/io.hpp"
#include "fasdnn/numeric.hpp"

namespace fasdnn {

enum class Battery { Psychometric, Antisaccade, Prosaccade, MemoryGuided, DTI, Synthetic };

inline constexpr std::array<Battery, 6> kAllBatteries = {
    Battery::Psychometric, Battery::Antisaccade, Battery::Prosaccade,
    Battery::MemoryGuided, Battery::DTI,         Battery::Synthetic};

inline std::string battery_name(Battery b) {
  switch (b) {
  case Battery::Psychometric:
    return "psychometric";
  case Battery::Antisaccade:
    return "antisaccade";
  case Battery::Prosaccade:
    return "prosaccade";
  case Battery::MemoryGuided:
    return "memory-guided";
  case Battery::DTI:
    return "dti";
  case Battery::Synthetic:
    return "synthetic";
  }
  return "unknown";
}

inline Battery battery_from_name(const std::string& name) {
  for (auto b : kAllBatteries) {
    if (battery_name(b) == name) {
      return b;
    }
  }
  throw ConfigError("unknown battery '" + name +
                    "' (expected psychometric, antisaccade, prosaccade, memory-guided, dti or "
                    "synthetic)");
}

/**
 * Published shape of each clinical test battery: feature count, total rows
 * and the FASD/control split. Synthetic data has no fixed shape.
 */
struct BatterySchema {
  Battery battery;
  std::optional<std::size_t> expected_feature_count;
  std::optional<std::size_t> expected_rows;
  std::optional<std::size_t> fasd_rows;
  std::optional<std::size_t> control_rows;
};

inline BatterySchema battery_schema(Battery b) {
  switch (b) {
  case Battery::Psychometric:
    return {b, 20, 129, 58, 71};
  case Battery::Antisaccade:
    return {b, 15, 174, 68, 106};
  case Battery::Prosaccade:
    return {b, 18, 186, 71, 115};
  case Battery::MemoryGuided:
    return {b, 26, 154, 61, 93};
  case Battery::DTI:
    return {b, 48, 76, 41, 35};
  case Battery::Synthetic:
    return {b, std::nullopt, std::nullopt, std::nullopt, std::nullopt};
  }
  throw ConfigError("unknown battery");
}

// Column names the sex/age ablation targets.
inline const std::vector<std::string>& demographic_columns() {
  static const std::vector<std::string> names = {"sex", "age"};
  return names;
}

inline constexpr int kFasd = 1;
inline constexpr int kControl = 0;

struct Dataset {
  Battery battery = Battery::Synthetic;
  std::vector<std::string> feature_names;
  Matrix x;
  std::vector<int> y; // 1 = FASD, 0 = control

  std::size_t rows() const noexcept { return y.size(); }
  std::size_t features() const noexcept { return feature_names.size(); }

  std::size_t count(int label) const {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
  }

  void validate() const {
    if (x.rows() != y.size()) {
      throw DataError("dataset has " + std::to_string(x.rows()) + " feature rows but " +
                      std::to_string(y.size()) + " labels");
    }
    if (x.cols() != feature_names.size()) {
      throw DataError("dataset has " + std::to_string(x.cols()) + " feature columns but " +
                      std::to_string(feature_names.size()) + " names");
    }
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (y[i] != kFasd && y[i] != kControl) {
        throw DataError("label " + std::to_string(y[i]) + " at row " + std::to_string(i) +
                        " is not 0 or 1");
      }
    }
  }

  // Copy holding only the given rows, in the given order.
  Dataset subset(const std::vector<std::size_t>& rows_to_keep) const {
    Dataset out;
    out.battery = battery;
    out.feature_names = feature_names;
    std::vector<double> data;
    data.reserve(rows_to_keep.size() * features());
    out.y.reserve(rows_to_keep.size());
    for (auto r : rows_to_keep) {
      auto row = x.row(r);
      data.insert(data.end(), row.begin(), row.end());
      out.y.push_back(y[r]);
    }
    out.x = Matrix(rows_to_keep.size(), features(), std::move(data));
    return out;
  }

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Accepts the published count, or the published count plus whichever of the
// sex/age columns are present.
inline void check_schema(Battery battery, const std::vector<std::string>& feature_names) {
  const auto schema = battery_schema(battery);
  if (!schema.expected_feature_count) {
    return;
  }
  const std::size_t want = *schema.expected_feature_count;
  const std::size_t have = feature_names.size();
  std::size_t demographic = 0;
  for (const auto& name : demographic_columns()) {
    demographic += static_cast<std::size_t>(
        std::count(feature_names.begin(), feature_names.end(), name));
  }
  if (have == want || (demographic > 0 && have - demographic == want)) {
    return;
  }
  throw SchemaError(battery_name(battery) + " data must have " + std::to_string(want) +
                    " feature columns (published count, optionally plus sex/age), found " +
                    std::to_string(have));
}

/**
 * Reads a battery CSV: header row, comma separated, one numeric column per
 * feature and a final 0/1 column named "label". Empty or non-numeric cells
 * are rejected with their 1-based line and column. A row count differing
 * from the battery's published count is reported through `warnings` (if
 * given) but accepted.
 */
inline Dataset parse_csv(const std::string& text, Battery battery,
                         std::vector<std::string>* warnings = nullptr,
                         const std::string& source = "<csv>") {
  auto lines = split_lines(text);
  while (!lines.empty() && lines.back().empty()) {
    lines.pop_back();
  }
  if (lines.empty()) {
    throw ParseError(source + ": missing header row");
  }
  auto header = split_csv_line(lines.front());
  for (auto& h : header) {
    while (!h.empty() && (h.back() == ' ' || h.back() == '\t')) {
      h.pop_back();
    }
    while (!h.empty() && (h.front() == ' ' || h.front() == '\t')) {
      h.erase(h.begin());
    }
  }
  if (header.size() < 2 || header.back() != "label") {
    throw ParseError(source + ": header must list at least one feature and end with 'label'");
  }
  Dataset ds;
  ds.battery = battery;
  ds.feature_names.assign(header.begin(), header.end() - 1);
  check_schema(battery, ds.feature_names);

  const std::size_t ncols = header.size();
  std::vector<double> data;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    if (lines[li].empty()) {
      throw ParseError(source + ": line " + std::to_string(line_no) + " is empty");
    }
    const auto cells = split_csv_line(lines[li]);
    if (cells.size() != ncols) {
      throw ParseError(source + ": line " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " cells, header has " +
                       std::to_string(ncols));
    }
    for (std::size_t c = 0; c < ncols; ++c) {
      const auto v = parse_double(cells[c]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(source + ": line " + std::to_string(line_no) + ", column " +
                         std::to_string(c + 1) + " ('" + header[c] + "'): " +
                         (cells[c].empty() ? std::string("missing value")
                                           : "not a finite number: '" + cells[c] + "'"));
      }
      if (c + 1 == ncols) {
        if (*v != 0.0 && *v != 1.0) {
          throw ParseError(source + ": line " + std::to_string(line_no) +
                           ", label must be 0 or 1, got '" + cells[c] + "'");
        }
        ds.y.push_back(static_cast<int>(*v));
      } else {
        data.push_back(*v);
      }
    }
  }
  ds.x = Matrix(ds.y.size(), ds.feature_names.size(), std::move(data));

  const auto schema = battery_schema(battery);
  if (warnings != nullptr && schema.expected_rows && *schema.expected_rows != ds.rows()) {
    warnings->push_back(source + ": " + std::to_string(ds.rows()) + " rows, published " +
                        battery_name(battery) + " count is " +
                        std::to_string(*schema.expected_rows));
  }
  return ds;
}

inline Dataset load_csv(const std::filesystem::path& path, Battery battery,
                        std::vector<std::string>* warnings = nullptr) {
  if (!std::filesystem::exists(path)) {
    throw IoError("data file '" + path.string() + "' does not exist");
  }
  return parse_csv(read_file(path), battery, warnings, path.string());
}

// Values are written in shortest round-trip form, so parse_csv(to_csv(ds))
// reproduces every double bit for bit.
inline std::string to_csv(const Dataset& ds) {
  ds.validate();
  std::string out;
  for (const auto& name : ds.feature_names) {
    out += name;
    out += ',';
  }
  out += "label\n";
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (double v : ds.x.row(i)) {
      out += format_double(v);
      out += ',';
    }
    out += ds.y[i] == kFasd ? "1\n" : "0\n";
  }
  return out;
}

inline void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  write_file(path, to_csv(ds));
}

// Copy without the named columns; remaining columns keep their order.
inline Dataset drop_features(const Dataset& ds, const std::vector<std::string>& names) {
  std::vector<bool> drop(ds.features(), false);
  for (const auto& name : names) {
    auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
    if (it == ds.feature_names.end()) {
      throw LookupError("no feature named '" + name + "' in " + battery_name(ds.battery) +
                        " data");
    }
    drop[static_cast<std::size_t>(it - ds.feature_names.begin())] = true;
  }
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < ds.features(); ++j) {
    if (!drop[j]) {
      keep.push_back(j);
    }
  }
  Dataset out;
  out.battery = ds.battery;
  out.y = ds.y;
  for (auto j : keep) {
    out.feature_names.push_back(ds.feature_names[j]);
  }
  std::vector<double> data;
  data.reserve(ds.rows() * keep.size());
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    for (auto j : keep) {
      data.push_back(ds.x(i, j));
    }
  }
  out.x = Matrix(ds.rows(), keep.size(), std::move(data));
  return out;
}

/**
 * Removes randomly chosen majority-class rows until both classes have the
 * minority count. Surviving rows keep their original relative order.
 */
inline Dataset balance_downsample(const Dataset& ds, SeededRng& rng) {
  const std::size_t n_fasd = ds.count(kFasd);
  const std::size_t n_control = ds.count(kControl);
  if (n_fasd == 0 || n_control == 0) {
    throw DataError("balancing needs both classes present (FASD " + std::to_string(n_fasd) +
                    ", control " + std::to_string(n_control) + ")");
  }
  const int majority = n_fasd > n_control ? kFasd : kControl;
  const std::size_t target = std::min(n_fasd, n_control);

  std::vector<std::size_t> majority_rows;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (ds.y[i] == majority) {
      majority_rows.push_back(i);
    }
  }
  rng.shuffle_in_place(std::span<std::size_t>(majority_rows));
  std::vector<bool> keep(ds.rows(), true);
  for (std::size_t k = target; k < majority_rows.size(); ++k) {
    keep[majority_rows[k]] = false;
  }
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (keep[i]) {
      rows.push_back(i);
    }
  }
  return ds.subset(rows);
}

struct SplitSpec {
  double train_fraction = 0.8;
  bool stratified = true;
  std::uint64_t seed = 0;

  friend bool operator==(const SplitSpec&, const SplitSpec&) = default;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Rows going to train for a group of n: ceil(fraction * n), kept within
// [1, n - 1] so both sides receive at least one row.
inline std::size_t train_share(std::size_t n, double fraction) {
  auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(k, 1, n - 1);
}

/**
 * Row indices for a train/test partition. Stratified splits shuffle each
 * class separately and send train_share(n_class) rows of it to train, so
 * per-class proportions are preserved up to rounding (which favours train).
 * Both index lists come back sorted.
 */
inline SplitIndices split_indices(const Dataset& ds, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw ConfigError("train fraction must lie in (0, 1), got " +
                      std::to_string(spec.train_fraction));
  }
  SeededRng rng(spec.seed);
  SplitIndices out;
  auto take = [&](std::vector<std::size_t> group) {
    rng.shuffle_in_place(std::span<std::size_t>(group));
    const std::size_t k = train_share(group.size(), spec.train_fraction);
    out.train.insert(out.train.end(), group.begin(), group.begin() + static_cast<long>(k));
    out.test.insert(out.test.end(), group.begin() + static_cast<long>(k), group.end());
  };
  if (spec.stratified) {
    for (int label : {kControl, kFasd}) {
      std::vector<std::size_t> group;
      for (std::size_t i = 0; i < ds.rows(); ++i) {
        if (ds.y[i] == label) {
          group.push_back(i);
        }
      }
      if (group.size() < 2) {
        throw DataError("stratified split needs at least 2 rows per class; class " +
                        std::to_string(label) + " has " + std::to_string(group.size()));
      }
      take(std::move(group));
    }
  } else {
    if (ds.rows() < 2) {
      throw DataError("split needs at least 2 rows");
    }
    std::vector<std::size_t> all(ds.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    take(std::move(all));
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

struct TrainTest {
  Dataset train;
  Dataset test;
};

inline TrainTest stratified_split(const Dataset& ds, const SplitSpec& spec) {
  const auto idx = split_indices(ds, spec);
  return {ds.subset(idx.train), ds.subset(idx.test)};
}

/**
 * Two Gaussian classes over features of mixed scale. Even-numbered features
 * are N(0, 1) for controls, odd-numbered ones N(70, 10); the FASD class is
 * shifted by `class_separation` standard deviations in every feature.
 * Rows are emitted in shuffled order, features are named f0, f1, ...
 */
inline Dataset synthesize_dataset(std::size_t n_per_class, std::size_t n_features,
                                  double class_separation, SeededRng& rng) {
  if (n_per_class < 1 || n_features < 1) {
    throw ConfigError("synthetic data needs at least 1 row per class and 1 feature");
  }
  if (!std::isfinite(class_separation)) {
    throw ConfigError("class separation must be finite");
  }
  Dataset ds;
  ds.battery = Battery::Synthetic;
  for (std::size_t j = 0; j < n_features; ++j) {
    ds.feature_names.push_back("f" + std::to_string(j));
  }
  const std::size_t n = 2 * n_per_class;
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    labels[i] = i < n_per_class ? kControl : kFasd;
  }
  rng.shuffle_in_place(std::span<int>(labels));

  std::vector<double> data;
  data.reserve(n * n_features);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n_features; ++j) {
      const bool wide = j % 2 == 1;
      const double base = wide ? 70.0 : 0.0;
      const double scale = wide ? 10.0 : 1.0;
      const double shift = labels[i] == kFasd ? class_separation * scale : 0.0;
      data.push_back(rng.normal(base + shift, scale));
    }
  }
  ds.y = std::move(labels);
  ds.x = Matrix(n, n_features, std::move(data));
  return ds;
}

} // namespace fasdnn
