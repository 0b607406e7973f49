#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "fasdnn/data.hpp"
#include "oracles.hpp"

namespace fasdnn {
namespace {

std::string header_for(std::size_t n_features, bool demographics = false) {
  std::string h;
  for (std::size_t j = 0; j < n_features; ++j) {
    h += "x" + std::to_string(j) + ",";
  }
  if (demographics) {
    h += "sex,age,";
  }
  return h + "label\n";
}

std::string csv_rows(std::size_t n_rows, std::size_t n_cols, SeededRng& rng) {
  std::string out;
  for (std::size_t i = 0; i < n_rows; ++i) {
    for (std::size_t j = 0; j < n_cols; ++j) {
      out += format_double(rng.normal(0.0, 5.0)) + ",";
    }
    out += std::to_string(i % 2) + "\n";
  }
  return out;
}

Dataset labelled(std::size_t n_control, std::size_t n_fasd, std::size_t n_features = 2) {
  Dataset ds;
  for (std::size_t j = 0; j < n_features; ++j) {
    ds.feature_names.push_back("c" + std::to_string(j));
  }
  std::vector<double> data;
  for (std::size_t i = 0; i < n_control + n_fasd; ++i) {
    ds.y.push_back(i < n_control ? kControl : kFasd);
    for (std::size_t j = 0; j < n_features; ++j) {
      data.push_back(static_cast<double>(i * n_features + j));
    }
  }
  ds.x = Matrix(ds.y.size(), n_features, std::move(data));
  return ds;
}

TEST(BatterySchema, PublishedCounts) {
  struct Want {
    Battery b;
    std::size_t features, rows, fasd, control;
  };
  for (auto w : {Want{Battery::Psychometric, 20, 129, 58, 71},
                 Want{Battery::Antisaccade, 15, 174, 68, 106},
                 Want{Battery::Prosaccade, 18, 186, 71, 115},
                 Want{Battery::MemoryGuided, 26, 154, 61, 93},
                 Want{Battery::DTI, 48, 76, 41, 35}}) {
    const auto s = battery_schema(w.b);
    EXPECT_EQ(*s.expected_feature_count, w.features);
    EXPECT_EQ(*s.expected_rows, w.rows);
    EXPECT_EQ(*s.fasd_rows, w.fasd);
    EXPECT_EQ(*s.control_rows, w.control);
    EXPECT_EQ(*s.fasd_rows + *s.control_rows, *s.expected_rows);
    EXPECT_EQ(battery_from_name(battery_name(w.b)), w.b);
  }
  EXPECT_FALSE(battery_schema(Battery::Synthetic).expected_feature_count);
  EXPECT_THROW(battery_from_name("eeg"), ConfigError);
}

TEST(ParseCsv, AcceptsContractAndRejectsWrongWidth) {
  SeededRng rng(1);
  const auto ok = parse_csv(header_for(20) + csv_rows(4, 20, rng), Battery::Psychometric);
  EXPECT_EQ(ok.features(), 20u);
  EXPECT_EQ(ok.rows(), 4u);

  const auto demo =
      parse_csv(header_for(18, true) + csv_rows(3, 20, rng), Battery::Psychometric);
  EXPECT_EQ(demo.features(), 20u);
  const auto demo_plus =
      parse_csv(header_for(20, true) + csv_rows(3, 22, rng), Battery::Psychometric);
  EXPECT_EQ(demo_plus.features(), 22u);

  try {
    parse_csv(header_for(19) + csv_rows(2, 19, rng), Battery::Psychometric);
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("20"), std::string::npos) << msg;
    EXPECT_NE(msg.find("19"), std::string::npos) << msg;
  }
}

TEST(ParseCsv, RowCountMismatchOnlyWarns) {
  SeededRng rng(2);
  std::vector<std::string> warnings;
  parse_csv(header_for(20) + csv_rows(5, 20, rng), Battery::Psychometric, &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("129"), std::string::npos);
}

TEST(ParseCsv, ErrorsNameLineAndColumn) {
  const std::string head = "a,b,label\n";
  try {
    parse_csv(head + "1,2,0\n3,,1\n", Battery::Synthetic);
    FAIL();
  } catch (const ParseError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("column 2"), std::string::npos) << msg;
  }
  EXPECT_THROW(parse_csv(head + "1,abc,0\n", Battery::Synthetic), ParseError);
  EXPECT_THROW(parse_csv(head + "1,nan,0\n", Battery::Synthetic), ParseError);
  EXPECT_THROW(parse_csv(head + "1,2,2\n", Battery::Synthetic), ParseError);
  EXPECT_THROW(parse_csv(head + "1,2\n", Battery::Synthetic), ParseError);
  EXPECT_THROW(parse_csv("a,b,target\n1,2,0\n", Battery::Synthetic), ParseError);
  EXPECT_THROW(parse_csv("", Battery::Synthetic), ParseError);
  EXPECT_THROW(load_csv("/nonexistent/dir/data.csv", Battery::Synthetic), IoError);
}

TEST(ParseCsv, WriteReadRoundTripIsBitExact) {
  SeededRng rng(3);
  auto ds = synthesize_dataset(7, 5, 1.5, rng);
  ds.x(0, 0) = 0.1 + 0.2; // not representable in short decimal form
  ds.x(1, 1) = -1e-300;
  const auto back = parse_csv(to_csv(ds), Battery::Synthetic);
  EXPECT_EQ(back, ds);
  EXPECT_EQ(to_csv(back), to_csv(ds));

  const auto dir = std::filesystem::path(FASDNN_TEST_TMP);
  std::filesystem::create_directories(dir);
  write_csv(ds, dir / "round_trip.csv");
  EXPECT_EQ(load_csv(dir / "round_trip.csv", Battery::Synthetic), ds);
}

TEST(ParseCsv, ToleratesCrlfAndTrailingBlankLines) {
  const auto ds = parse_csv("a,b,label\r\n1,2,1\r\n\r\n", Battery::Synthetic);
  EXPECT_EQ(ds.rows(), 1u);
  EXPECT_EQ(ds.x, (Matrix{{1, 2}}));
}

TEST(DropFeatures, RemovesNamedColumnsKeepingOrder) {
  Dataset ds = labelled(2, 2, 4);
  ds.feature_names = {"a", "sex", "b", "age"};
  EXPECT_EQ(drop_features(ds, {}), ds);
  const auto out = drop_features(ds, demographic_columns());
  EXPECT_EQ(out.feature_names, (std::vector<std::string>{"a", "b"}));
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    EXPECT_EQ(out.x(i, 0), ds.x(i, 0));
    EXPECT_EQ(out.x(i, 1), ds.x(i, 2));
  }
  EXPECT_EQ(out.y, ds.y);
  EXPECT_THROW(drop_features(ds, {"height"}), LookupError);

  SeededRng rng(5);
  const auto psych =
      parse_csv(header_for(18, true) + csv_rows(3, 20, rng), Battery::Psychometric);
  EXPECT_EQ(drop_features(psych, {"sex", "age"}).features(), 18u);
}

TEST(Balance, DownsamplesMajorityOnly) {
  const auto ds = labelled(106, 68);
  SeededRng rng(6);
  const auto out = balance_downsample(ds, rng);
  EXPECT_EQ(out.count(kControl), 68u);
  EXPECT_EQ(out.count(kFasd), 68u);
  // Every FASD row survives, in order.
  std::vector<double> fasd_in, fasd_out;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if (ds.y[i] == kFasd) {
      fasd_in.push_back(ds.x(i, 0));
    }
  }
  for (std::size_t i = 0; i < out.rows(); ++i) {
    if (out.y[i] == kFasd) {
      fasd_out.push_back(out.x(i, 0));
    }
    if (i > 0) {
      EXPECT_LT(out.x(i - 1, 0), out.x(i, 0));
    }
  }
  EXPECT_EQ(fasd_in, fasd_out);

  SeededRng a(1), b(1);
  EXPECT_EQ(balance_downsample(ds, a), balance_downsample(ds, b));
  EXPECT_EQ(balance_downsample(labelled(3, 3), a), labelled(3, 3));
  EXPECT_THROW(balance_downsample(labelled(3, 0), a), DataError);
}

TEST(Split, StratifiedCounts) {
  const auto ds = labelled(50, 50);
  const auto tt = stratified_split(ds, SplitSpec{0.8, true, 4});
  EXPECT_EQ(tt.train.count(kControl), 40u);
  EXPECT_EQ(tt.train.count(kFasd), 40u);
  EXPECT_EQ(tt.test.count(kControl), 10u);
  EXPECT_EQ(tt.test.count(kFasd), 10u);

  const auto psych = labelled(71, 58);
  const auto idx = split_indices(psych, SplitSpec{0.75, true, 9});
  EXPECT_NEAR(static_cast<double>(idx.train.size()), 97.0, 1.0);
  EXPECT_NEAR(static_cast<double>(idx.test.size()), 32.0, 1.0);
}

TEST(Split, DisjointExhaustiveDeterministic) {
  for (std::uint64_t seed : {0u, 1u, 77u}) {
    for (bool strat : {true, false}) {
      const auto ds = labelled(23, 17);
      const auto idx = split_indices(ds, SplitSpec{0.7, strat, seed});
      std::set<std::size_t> all(idx.train.begin(), idx.train.end());
      for (auto i : idx.test) {
        EXPECT_TRUE(all.insert(i).second) << "row " << i << " in both";
      }
      EXPECT_EQ(all.size(), ds.rows());
      EXPECT_TRUE(std::is_sorted(idx.train.begin(), idx.train.end()));
      const auto again = split_indices(ds, SplitSpec{0.7, strat, seed});
      EXPECT_EQ(again.train, idx.train);
    }
  }
  EXPECT_NE(split_indices(labelled(20, 20), SplitSpec{0.5, true, 1}).train,
            split_indices(labelled(20, 20), SplitSpec{0.5, true, 2}).train);
}

TEST(Split, RejectsDegenerateInputs) {
  EXPECT_THROW(split_indices(labelled(10, 1), SplitSpec{0.8, true, 0}), DataError);
  EXPECT_THROW(split_indices(labelled(10, 10), SplitSpec{1.0, true, 0}), ConfigError);
  EXPECT_THROW(split_indices(labelled(10, 10), SplitSpec{0.0, true, 0}), ConfigError);
  // Both sides get a row even at extreme fractions.
  const auto idx = split_indices(labelled(2, 2), SplitSpec{0.99, true, 0});
  EXPECT_EQ(idx.test.size(), 2u);
}

TEST(Synthesize, SeparableAndDeterministic) {
  SeededRng rng(10);
  const auto ds = synthesize_dataset(100, 6, 6.0, rng);
  EXPECT_EQ(ds.rows(), 200u);
  EXPECT_EQ(ds.count(kFasd), 100u);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    hits += (ds.x(i, 0) > 3.0) == (ds.y[i] == kFasd) ? 1 : 0;
  }
  EXPECT_GT(static_cast<double>(hits) / 200.0, 0.95);

  SeededRng a(3), b(3);
  EXPECT_EQ(synthesize_dataset(5, 4, 1.0, a), synthesize_dataset(5, 4, 1.0, b));
  EXPECT_NO_THROW(ds.validate());
}

} // namespace
} // namespace fasdnn
