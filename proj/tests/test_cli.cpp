#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <map>

#include "fasdnn/fasdnn.hpp"

namespace fasdnn {
namespace {

namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const auto dir = fs::path(FASDNN_TEST_TMP) / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the CLI with stdout/stderr sent to `log`; returns the exit status.
int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd =
      std::string("\"") + FASDNN_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path make_data(const fs::path& dir, std::size_t npc = 30, double sep = 1.0,
                   std::size_t features = 20) {
  const auto path = dir / "data.csv";
  const int rc = run_cli("synth --n-per-class " + std::to_string(npc) + " --n-features " +
                             std::to_string(features) + " --separation " + std::to_string(sep) +
                             " --seed 9 --out \"" + path.string() + "\"",
                         dir / "synth.log");
  EXPECT_EQ(rc, 0) << read_file(dir / "synth.log");
  return path;
}

void write_config(const fs::path& path, std::size_t epochs, double lr = 0.001) {
  NetworkConfig cfg;
  cfg.input_dim = 20;
  cfg.layers = {{8, Activation::leaky_relu()}, {2, Activation::softmax()}};
  cfg.epochs = epochs;
  cfg.learning_rate = lr;
  write_file(path, serialize_config(cfg));
}

TEST(CliSynth, ShapeAndDeterminism) {
  const auto dir = scratch("synth");
  ASSERT_EQ(run_cli("synth --n-per-class 50 --n-features 20 --seed 4 --out \"" +
                        (dir / "a.csv").string() + "\"",
                    dir / "log"),
            0);
  ASSERT_EQ(run_cli("synth --n-per-class 50 --n-features 20 --seed 4 --out \"" +
                        (dir / "b.csv").string() + "\"",
                    dir / "log"),
            0);
  EXPECT_NE(read_file(dir / "log").find("100 rows"), std::string::npos);
  const auto text = read_file(dir / "a.csv");
  EXPECT_EQ(text, read_file(dir / "b.csv"));
  const auto lines = split_lines(text);
  EXPECT_EQ(lines.size(), 101u);
  EXPECT_EQ(split_csv_line(lines[0]).size(), 21u);
  const auto ds = load_csv(dir / "a.csv", Battery::Synthetic);
  EXPECT_EQ(ds.rows(), 100u);
  EXPECT_NO_THROW(ds.validate());

  EXPECT_EQ(run_cli("synth --out /proc/forbidden/x.csv", dir / "log2"), 6);
  EXPECT_NE(read_file(dir / "log2").find("/proc/forbidden"), std::string::npos);
}

TEST(CliTrain, BuiltinRow3WritesArtifacts) {
  const auto dir = scratch("train");
  const auto data = make_data(dir);
  const auto out = dir / "out";
  ASSERT_EQ(run_cli("train --data \"" + data.string() +
                        "\" --battery psychometric --config table2-row3 --seed 2 --out \"" +
                        out.string() + "\"",
                    dir / "log"),
            0)
      << read_file(dir / "log");
  for (const char* f : {"model.json", "history.csv", "confusion.txt", "runs.csv", "summary.txt",
                        "manifest.json"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_EQ(split_lines(read_file(out / "history.csv")).size(), 1001u);
  const auto manifest = nlohmann::json::parse(read_file(out / "manifest.json"));
  for (const char* key :
       {"command_line", "config_hash", "data_hash", "seed", "tool_version", "timestamp"}) {
    EXPECT_TRUE(manifest.contains(key)) << key;
  }
  EXPECT_EQ(manifest["data_hash"], fnv1a_hex(read_file(data)));

  // Same inputs, same metrics.
  const auto again = dir / "again";
  ASSERT_EQ(run_cli("train --data \"" + data.string() +
                        "\" --battery psychometric --config table2-row3 --seed 2 --out \"" +
                        again.string() + "\"",
                    dir / "log"),
            0);
  for (const char* f : {"model.json", "history.csv", "confusion.txt", "runs.csv"}) {
    EXPECT_EQ(read_file(out / f), read_file(again / f)) << f;
  }
}

TEST(CliTrain, ErrorsMapToDistinctExitCodes) {
  const auto dir = scratch("errors");
  const auto data = make_data(dir, 10);
  write_config(dir / "diverge.json", 5, 1e300);
  const int missing = run_cli("train --data \"" + (dir / "none.csv").string() +
                                  "\" --config table2-row3",
                              dir / "log");
  const int diverged = run_cli("train --data \"" + data.string() + "\" --config \"" +
                                   (dir / "diverge.json").string() + "\" --out \"" +
                                   (dir / "d").string() + "\"",
                               dir / "log_div");
  EXPECT_EQ(missing, 6);
  EXPECT_EQ(diverged, 5);
  EXPECT_NE(read_file(dir / "log_div").find("epoch"), std::string::npos);
  EXPECT_EQ(read_file(dir / "log_div").find("terminate"), std::string::npos);

  EXPECT_EQ(run_cli("train --data \"" + data.string() + "\"", dir / "log"), 2);
  EXPECT_EQ(run_cli("frobnicate", dir / "log"), 2);
  EXPECT_EQ(run_cli("train --data \"" + data.string() + "\" --config no-such-spec", dir / "log"),
            4);
  write_file(dir / "bad.csv", "a,b,label\n1,x,0\n");
  EXPECT_EQ(run_cli("train --data \"" + (dir / "bad.csv").string() +
                        "\" --battery synthetic --config table2-row3",
                    dir / "log"),
            3);
  EXPECT_EQ(run_cli("report --results \"" + (dir / "empty").string() + "\"", dir / "log"), 7);
}

TEST(CliSweep, Table2SetAndSeedCount) {
  const auto dir = scratch("sweep");
  const auto data = make_data(dir, 8);
  ASSERT_EQ(run_cli("sweep --data \"" + data.string() +
                        "\" --specs table2 --seeds 1 --threads 4 --out \"" +
                        (dir / "t2").string() + "\"",
                    dir / "log"),
            0)
      << read_file(dir / "log");
  const auto runs = parse_runs_csv(read_file(dir / "t2" / "runs.csv"));
  std::set<std::string> names;
  for (const auto& r : runs) {
    names.insert(r.spec_name);
  }
  EXPECT_EQ(names.size(), 9u);

  // Config directory, three seeds.
  fs::create_directories(dir / "configs");
  write_config(dir / "configs" / "small.json", 10);
  write_config(dir / "configs" / "tiny.json", 3);
  ASSERT_EQ(run_cli("sweep --data \"" + data.string() + "\" --battery synthetic --specs \"" +
                        (dir / "configs").string() + "\" --seeds 1,2,3 --out \"" +
                        (dir / "cfg").string() + "\"",
                    dir / "log"),
            0)
      << read_file(dir / "log");
  const auto text = read_file(dir / "cfg" / "runs.csv");
  const auto cfg_runs = parse_runs_csv(text);
  EXPECT_EQ(cfg_runs.size(), 6u);

  // Summary medians equal a recomputation from the per-run CSV.
  const auto summary = nlohmann::json::parse(read_file(dir / "cfg" / "summary.json"));
  std::map<std::string, std::vector<double>> test_by_spec;
  for (const auto& r : cfg_runs) {
    test_by_spec[r.spec_name].push_back(r.test_accuracy);
  }
  for (const auto& s : summary["specs"]) {
    std::vector<double> v = test_by_spec.at(s["name"].get<std::string>());
    std::sort(v.begin(), v.end());
    EXPECT_EQ(s["median_test_acc"].get<double>(), v[1]);
  }
  EXPECT_TRUE(fs::exists(dir / "cfg" / "gaps.csv"));
  EXPECT_EQ(run_cli("sweep --data \"" + data.string() + "\" --seeds 1,x", dir / "log"), 4);
}

TEST(CliReport, BaselineVariants) {
  const auto dir = scratch("report");
  const auto data = make_data(dir, 10);
  ASSERT_EQ(run_cli("sweep --data \"" + data.string() +
                        "\" --specs psychometric-feature-layer --seeds 1,2 --out \"" +
                        (dir / "res" / "psy").string() + "\"",
                    dir / "log"),
            0)
      << read_file(dir / "log");

  write_file(dir / "empty.csv", "");
  ASSERT_EQ(run_cli("report --results \"" + (dir / "res").string() + "\" --baselines \"" +
                        (dir / "empty.csv").string() + "\" --out \"" + (dir / "r0").string() +
                        "\"",
                    dir / "log"),
            0)
      << read_file(dir / "log");
  EXPECT_NE(read_file(dir / "r0" / "comparison.txt").find("ours-only"), std::string::npos);

  // A baseline equal to our own median gives a zero difference.
  const auto runs = parse_runs_csv(read_file(dir / "res" / "psy" / "runs.csv"));
  std::vector<double> test;
  for (const auto& r : runs) {
    test.push_back(r.test_accuracy);
  }
  const double ours = 100.0 * median(test);
  write_file(dir / "same.csv", "battery,accuracy\npsychometric," + format_double(ours) + "\n");
  ASSERT_EQ(run_cli("report --results \"" + (dir / "res").string() + "\" --baselines \"" +
                        (dir / "same.csv").string() + "\" --out \"" + (dir / "r1").string() +
                        "\"",
                    dir / "log"),
            0);
  EXPECT_NE(read_file(dir / "r1" / "comparison.txt").find("mean difference: 0.00 pp"),
            std::string::npos);

  // Default baselines are the published values; the CSV matches the library.
  ASSERT_EQ(run_cli("report --results \"" + (dir / "res").string() + "\"", dir / "log"), 0);
  auto tagged = runs;
  for (auto& r : tagged) {
    r.battery = Battery::Psychometric;
  }
  const auto rep = comparison_report(tagged, BaselineTable::published());
  EXPECT_EQ(read_file(dir / "res" / "report" / "comparison.csv"), rep.csv());
  EXPECT_TRUE(fs::exists(dir / "res" / "report" / "manifest.json"));
}

} // namespace
} // namespace fasdnn
