// fasdnn command-line tool: synth, train, sweep, report.
//
// Exit codes:
//   0 success        1 internal error   2 usage
//   3 data error     4 config error     5 training diverged
//   6 I/O error      7 report error

#include <chrono>
#include <ctime>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fasdnn/fasdnn.hpp"

namespace fs = std::filesystem;
using namespace fasdnn;

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kData = 3,
  kConfig = 4,
  kDivergence = 5,
  kIo = 6,
  kReport = 7,
};

std::string g_command_line;

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

fs::path resolve_out(const std::string& flag, const std::string& fallback_name) {
  if (!flag.empty()) {
    return flag;
  }
  if (const char* env = std::getenv("FASDNN_OUT_DIR"); env != nullptr && *env != '\0') {
    return fs::path(env) / fallback_name;
  }
  return fs::path("fasdnn-out") / fallback_name;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

std::string file_hash(const std::string& path) {
  return path.empty() ? std::string() : fnv1a_hex(read_file(path));
}

void write_manifest(const fs::path& dir, const std::string& config_text,
                    const std::string& data_path, const nlohmann::json& seed) {
  nlohmann::json m = {{"command_line", g_command_line},
                      {"config_hash", fnv1a_hex(config_text)},
                      {"data_file", data_path},
                      {"data_hash", file_hash(data_path)},
                      {"seed", seed},
                      {"tool_version", FASDNN_VERSION},
                      {"timestamp", utc_timestamp()}};
  write_file(dir / "manifest.json", m.dump(2) + "\n");
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  for (const auto& cell : split_csv_line(text)) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(cell, &used));
      if (used != cell.size()) {
        throw std::invalid_argument(cell);
      }
    } catch (const std::exception&) {
      throw ConfigError("bad seed '" + cell + "' in seed list '" + text + "'");
    }
  }
  if (seeds.empty()) {
    throw ConfigError("seed list is empty");
  }
  return seeds;
}

Dataset load_data(const std::string& path, Battery battery) {
  std::vector<std::string> warnings;
  auto ds = load_csv(path, battery, &warnings);
  for (const auto& w : warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  return ds;
}

// A builtin spec name, or a JSON config file wrapped in a default spec.
ExperimentSpec resolve_spec(const std::string& config, Battery battery, double train_fraction,
                            bool balance) {
  if (fs::is_regular_file(config)) {
    ExperimentSpec s;
    s.name = fs::path(config).stem().string();
    s.battery = battery;
    s.config = load_config_file(config);
    s.split.train_fraction = train_fraction;
    s.balance = balance;
    return s;
  }
  return builtin_spec(config);
}

std::vector<ExperimentSpec> resolve_spec_set(const std::string& specs, Battery battery,
                                             double train_fraction, bool balance) {
  if (fs::is_directory(specs)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(specs)) {
      if (e.is_regular_file() && e.path().extension() == ".json") {
        files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
      throw ConfigError("no .json configs in " + specs);
    }
    std::vector<ExperimentSpec> out;
    for (const auto& f : files) {
      out.push_back(resolve_spec(f.string(), battery, train_fraction, balance));
    }
    return out;
  }
  // Builtin sets span batteries; real battery data only runs its own specs.
  auto out = builtin_set(specs);
  if (battery != Battery::Synthetic) {
    std::erase_if(out, [&](const ExperimentSpec& e) { return e.battery != battery; });
    if (out.empty()) {
      throw ConfigError("'" + specs + "' has no spec for " + battery_name(battery) + " data");
    }
  }
  return out;
}

std::string gaps_csv(const std::vector<RunResult>& results) {
  std::string out = "spec,median_train_acc,median_test_acc,median_gap\n";
  for (const auto& s : ranked(summarize(results))) {
    if (s.runs_ok == 0) {
      continue;
    }
    out += s.name + ',' + format_double(s.median_train) + ',' + format_double(s.median_test) +
           ',' + format_double(s.median_gap) + '\n';
  }
  return out;
}

void write_sweep_outputs(const fs::path& out, const std::vector<RunResult>& results,
                         const std::vector<std::uint64_t>& seeds) {
  write_file(out / "runs.csv", runs_csv(results));
  write_file(out / "summary.txt", summary_text(results, seeds));
  write_file(out / "summary.json", summary_json(results, seeds).dump(2) + "\n");
  write_file(out / "gaps.csv", gaps_csv(results));
}

// --- subcommands ---

struct SynthArgs {
  std::size_t n_per_class = 50;
  std::size_t n_features = 20;
  double separation = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthArgs& a) {
  SeededRng rng(a.seed);
  const auto ds = synthesize_dataset(a.n_per_class, a.n_features, a.separation, rng);
  const fs::path out = resolve_out(a.out, "synthetic.csv");
  if (out.has_parent_path()) {
    ensure_dir(out.parent_path());
  }
  write_csv(ds, out);
  std::cout << "wrote " << out.string() << ": " << ds.rows() << " rows (" << ds.count(kFasd)
            << " FASD, " << ds.count(kControl) << " control), " << ds.features()
            << " features + label\n";
  return kOk;
}

struct TrainArgs {
  std::string data;
  std::string battery = "psychometric";
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::string> ablate;
  double train_fraction = 0.8;
  bool balance = false;
};

int cmd_train(const TrainArgs& a) {
  const Battery battery = battery_from_name(a.battery);
  auto spec = with_ablation(resolve_spec(a.config, battery, a.train_fraction, a.balance), a.ablate);
  const auto ds = load_data(a.data, battery);
  const fs::path out = resolve_out(a.out, "train-" + spec.name);

  const auto prepared = prepare_run(spec, ds, a.seed);
  TrainResult trained;
  try {
    trained = train(prepared.config, prepared.data.train, prepared.data.test);
  } catch (const Error&) {
    detail::rethrow_annotated(spec.name + ": ");
  }
  RunResult r;
  r.spec_name = spec.name;
  r.battery = spec.battery;
  r.seed = a.seed;
  r.confusion = confusion_matrix(trained.model.predict(prepared.data.test.x),
                                 prepared.data.test.y);
  r.test_accuracy = accuracy(r.confusion);
  r.train_accuracy = trained.model.accuracy_on(prepared.data.train);

  ensure_dir(out);
  write_file(out / "model.json", to_json(trained.model).dump(2) + "\n");
  write_file(out / "history.csv", history_csv(trained.history));
  write_file(out / "confusion.txt", render_confusion(r.confusion));
  const std::vector<RunResult> results = {r};
  write_sweep_outputs(out, results, {a.seed});
  write_manifest(out, serialize_config(prepared.config), a.data, a.seed);

  std::cout << spec.name << " seed " << a.seed << ": train " << format_percent(r.train_accuracy)
            << ", test " << format_percent(r.test_accuracy) << " (" << r.confusion.total
            << " test rows)\n"
            << render_confusion(r.confusion) << "outputs in " << out.string() << "\n";
  return kOk;
}

struct SweepArgs {
  std::string data;
  std::string battery = "psychometric";
  std::string specs = "table2";
  std::string seeds = "1,2,3";
  std::string out;
  unsigned threads = 1;
  double train_fraction = 0.8;
  bool balance = false;
};

int cmd_sweep(const SweepArgs& a) {
  const Battery battery = battery_from_name(a.battery);
  const auto specs = resolve_spec_set(a.specs, battery, a.train_fraction, a.balance);
  const auto seeds = parse_seeds(a.seeds);
  const auto ds = load_data(a.data, battery);
  const fs::path out = resolve_out(a.out, "sweep");

  const auto results = run_sweep(specs, ds, seeds, std::max(1u, a.threads));
  ensure_dir(out);
  write_sweep_outputs(out, results, seeds);
  std::string all_configs;
  for (const auto& s : specs) {
    all_configs += s.name + "\n" + serialize_config(s.config);
  }
  write_manifest(out, all_configs, a.data, seeds);

  std::cout << summary_text(results, seeds) << "outputs in " << out.string() << "\n";
  return kOk;
}

struct ReportArgs {
  std::string results;
  std::string baselines;
  std::string out;
};

// Collects runs from every runs.csv under `root`; batteries come from the
// sibling summary.json.
std::vector<RunResult> collect_results(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw ReportError("results directory " + root.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().filename() == "runs.csv") {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<RunResult> all;
  for (const auto& f : files) {
    std::map<std::string, Battery> battery_of;
    const auto summary = f.parent_path() / "summary.json";
    if (fs::exists(summary)) {
      const auto j = nlohmann::json::parse(read_file(summary), nullptr, false);
      if (!j.is_discarded() && j.contains("specs")) {
        for (const auto& s : j["specs"]) {
          battery_of[s.value("name", "")] = battery_from_name(s.value("battery", "synthetic"));
        }
      }
    }
    for (auto r : parse_runs_csv(read_file(f), f.string())) {
      if (auto it = battery_of.find(r.spec_name); it != battery_of.end()) {
        r.battery = it->second;
      }
      all.push_back(std::move(r));
    }
  }
  if (all.empty()) {
    throw ReportError("no runs found under " + root.string());
  }
  return all;
}

int cmd_report(const ReportArgs& a) {
  const auto results = collect_results(a.results);
  const BaselineTable baselines = a.baselines.empty()
                                      ? BaselineTable::published()
                                      : parse_baselines_csv(read_file(a.baselines), a.baselines);
  const auto rep = comparison_report(results, baselines);
  const fs::path out = a.out.empty() ? fs::path(a.results) / "report" : fs::path(a.out);
  ensure_dir(out);
  write_file(out / "comparison.txt", rep.text());
  write_file(out / "comparison.csv", rep.csv());
  write_manifest(out, a.baselines.empty() ? std::string("published") : read_file(a.baselines),
                 "", nullptr);
  std::cout << rep.text() << "outputs in " << out.string() << "\n";
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const DivergenceError*>(&e)) {
    return kDivergence;
  }
  if (dynamic_cast<const DataError*>(&e)) {
    return kData;
  }
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ShapeError*>(&e)) {
    return kConfig;
  }
  if (dynamic_cast<const IoError*>(&e)) {
    return kIo;
  }
  if (dynamic_cast<const ReportError*>(&e)) {
    return kReport;
  }
  return kInternal;
}

} // namespace

int main(int argc, char** argv) {
  for (int i = 0; i < argc; ++i) {
    g_command_line += (i ? " " : "") + std::string(argv[i]);
  }

  CLI::App app{"fasdnn: dense-network FASD screening experiments"};
  app.set_version_flag("--version", std::string(FASDNN_VERSION));
  app.require_subcommand(1);

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "write a synthetic two-class dataset");
  s->add_option("--n-per-class", synth.n_per_class, "rows per class")->check(CLI::PositiveNumber);
  s->add_option("--n-features", synth.n_features, "feature columns")->check(CLI::PositiveNumber);
  s->add_option("--separation", synth.separation, "class shift in feature standard deviations");
  s->add_option("--seed", synth.seed, "random seed");
  s->add_option("--out", synth.out, "output CSV path");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "train one network and write its artifacts");
  t->add_option("--data", tr.data, "input CSV")->required();
  t->add_option("--battery", tr.battery, "battery the CSV belongs to");
  t->add_option("--config", tr.config, "JSON config file or builtin spec name")->required();
  t->add_option("--seed", tr.seed, "run seed");
  t->add_option("--out", tr.out, "output directory");
  t->add_option("--ablate", tr.ablate, "feature columns to drop")->delimiter(',');
  t->add_option("--train-fraction", tr.train_fraction, "train share for JSON configs");
  t->add_flag("--balance", tr.balance, "downsample the majority class (JSON configs)");

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "run several specs over several seeds");
  w->add_option("--data", sw.data, "input CSV")->required();
  w->add_option("--battery", sw.battery, "battery the CSV belongs to");
  w->add_option("--specs", sw.specs, "builtin set/spec name or directory of JSON configs");
  w->add_option("--seeds", sw.seeds, "comma-separated seeds");
  w->add_option("--out", sw.out, "output directory");
  w->add_option("--threads", sw.threads, "worker threads")->check(CLI::PositiveNumber);
  w->add_option("--train-fraction", sw.train_fraction, "train share for JSON configs");
  w->add_flag("--balance", sw.balance, "downsample the majority class (JSON configs)");

  ReportArgs rp;
  auto* r = app.add_subcommand("report", "compare sweep results against baselines");
  r->add_option("--results", rp.results, "directory holding runs.csv files")->required();
  r->add_option("--baselines", rp.baselines, "CSV battery,accuracy[,source]");
  r->add_option("--out", rp.out, "output directory (default <results>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (s->parsed()) {
      return cmd_synth(synth);
    }
    if (t->parsed()) {
      return cmd_train(tr);
    }
    if (w->parsed()) {
      return cmd_sweep(sw);
    }
    return cmd_report(rp);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}
