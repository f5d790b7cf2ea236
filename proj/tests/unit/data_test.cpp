#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "benchmark_fixtures.hpp"
#include "test_support.hpp"
#include "trustmon/data/blobs.hpp"
#include "trustmon/data/csv.hpp"
#include "trustmon/data/dataset.hpp"
#include "trustmon/data/manifest.hpp"
#include "trustmon/data/random.hpp"
#include "trustmon/error.hpp"

using namespace trustmon;
using namespace trustmon::data;
using namespace trustmon::testing;

namespace {

Dataset numbered(std::size_t n) {
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), 1);
  for (std::size_t i = 0; i < n; ++i) {
    ds.features(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    ds.labels.push_back(static_cast<int>(i % 2));
  }
  ds.feature_names = {"i"};
  ds.class_count = 2;
  return ds;
}

}  // namespace

TEST(Csv, QuotesCrlfAndBom) {
  const auto t = parse_csv("\xEF\xBB\xBF" "a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\r\n1,\r\n");
  ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][0], "x, y");
  EXPECT_EQ(t.rows[0][1], "say \"hi\"");
  EXPECT_EQ(t.rows[1][1], "");
  EXPECT_EQ(parse_csv(format_csv(t)).rows, t.rows);
}

TEST(Csv, RaggedRowsAndMissingColumns) {
  EXPECT_THROW(parse_csv("a,b\n1,2,3\n"), ParseError);
  EXPECT_THROW(parse_csv("a,b\n1,2\n").column("c"), MissingColumn);
  EXPECT_THROW(read_csv("/nonexistent/file.csv"), IoError);
}

TEST(Csv, NumberParsing) {
  EXPECT_EQ(parse_number(" 2.5 "), 2.5);
  EXPECT_EQ(parse_number("-1e3"), -1000.0);
  EXPECT_FALSE(parse_number(""));
  EXPECT_FALSE(parse_number("abc"));
  EXPECT_FALSE(parse_number("nan"));
  EXPECT_FALSE(parse_number("1.5x"));
  EXPECT_EQ(parse_number(format_number(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(Random, FrozenOutputsForSeed10) {
  SeededRng rng(10);
  EXPECT_EQ(rng.next(), 11091715596963791794ull);
  EXPECT_EQ(rng.below(1000), 698u);
  EXPECT_DOUBLE_EQ(rng.uniform(), 0.26673194908081255);
  EXPECT_DOUBLE_EQ(rng.normal(), 1.3324155781953722);
  EXPECT_EQ(shuffled_indices(10, 10), (std::vector<std::size_t>{8, 7, 3, 1, 9, 5, 2, 0, 6, 4}));
}

TEST(Random, BelowStaysInRange) {
  SeededRng rng(3);
  for (int i = 0; i < 10000; ++i) EXPECT_LT(rng.below(7), 7u);
}

TEST(MinMax, EndpointsAndInverse) {
  const Eigen::MatrixXd raw = matrix({{0, 3}, {5, 3}, {10, 3}});
  const auto scaler = MinMaxScaler::fit(raw);
  const Eigen::MatrixXd scaled = scaler.transform(raw);
  EXPECT_EQ(scaled.col(0), vec({0.0, 0.5, 1.0}));
  EXPECT_EQ(scaled.col(1), vec({0.0, 0.0, 0.0}));  // constant column
  EXPECT_LE((scaler.inverse_transform(scaled) - raw).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(MinMax, RandomDataInUnitRangeAndInvertible) {
  std::mt19937_64 rng(8);
  const Eigen::MatrixXd raw = random_matrix(rng, 200, 6, 50.0);
  const auto scaler = MinMaxScaler::fit(raw);
  const Eigen::MatrixXd scaled = scaler.transform(raw);
  EXPECT_GE(scaled.minCoeff(), 0.0);
  EXPECT_LE(scaled.maxCoeff(), 1.0);
  const Eigen::MatrixXd back = scaler.inverse_transform(scaled);
  for (Eigen::Index i = 0; i < raw.size(); ++i) {
    EXPECT_LE(std::abs(back(i) - raw(i)), 1e-9 * std::max(1.0, std::abs(raw(i))));
  }
}

TEST(Prepare, OneHotGroupsSumToOne) {
  const auto raw = parse_csv("color,size,y\nred,1,a\nblue,2,b\n,3,a\nred,4,b\n");
  PrepRecipe recipe;
  recipe.label_column = "y";
  recipe.one_hot_columns = {"color"};
  const auto ds = prepare(raw, recipe);
  EXPECT_EQ(ds.feature_names,
            (std::vector<std::string>{"size", "color_NA", "color_blue", "color_red"}));
  for (std::size_t r = 0; r < ds.size(); ++r) {
    EXPECT_EQ(ds.features.row(static_cast<Eigen::Index>(r)).tail(3).sum(), 1.0);
  }
  EXPECT_EQ(ds.labels, (std::vector<int>{0, 1, 0, 1}));
  EXPECT_EQ(ds.class_count, 2u);
}

TEST(Prepare, DropsAndOrdinals) {
  const auto raw = parse_csv("m,c,y\nfeb,x,0\njan,y,1\nmar,x,1\n");
  PrepRecipe recipe;
  recipe.label_column = "y";
  recipe.ordinal_columns = {"m"};
  recipe.one_hot_columns = {"c"};
  recipe.drop_columns = {"c_x"};
  const auto ds = prepare(raw, recipe);
  EXPECT_EQ(ds.feature_names, (std::vector<std::string>{"m", "c_y"}));
  EXPECT_EQ(ds.features.col(0), vec({0, 1, 2}));  // feb < jan < mar
  recipe.drop_columns = {"c_z"};
  EXPECT_THROW(prepare(raw, recipe), MissingColumn);
  recipe.drop_columns = {};
  recipe.one_hot_columns = {"missing"};
  EXPECT_THROW(prepare(raw, recipe), MissingColumn);
}

TEST(Prepare, NonNumericValueRejected) {
  const auto raw = parse_csv("a,y\n1,0\nx,1\n");
  PrepRecipe recipe;
  recipe.label_column = "y";
  EXPECT_THROW(prepare(raw, recipe), NonNumericValue);
}

TEST(Prepare, BalancingAbsentClassFails) {
  const auto raw = parse_csv("a,y\n1,0\n2,2\n3,0\n");
  PrepRecipe recipe;
  recipe.label_column = "y";
  recipe.balance_classes = true;
  EXPECT_THROW(prepare(raw, recipe), EmptyClass);
}

TEST(Prepare, BalancingTenVersusFour) {
  std::vector<int> labels(14, 0);
  for (int i = 10; i < 14; ++i) labels[static_cast<std::size_t>(i)] = 1;
  const auto kept = balanced_rows(labels, 2, 10);
  // Frozen output of the seeded sampler.
  EXPECT_EQ(kept, (std::vector<std::size_t>{1, 3, 7, 8, 10, 11, 12, 13}));
  EXPECT_EQ(balanced_rows(labels, 2, 10), kept);
}

TEST(Prepare, MedianThreshold) {
  const auto raw = parse_csv("a,price\n1,10\n2,30\n3,20\n4,40\n");
  PrepRecipe recipe;
  recipe.label_column = "price";
  recipe.label_threshold_median = true;
  EXPECT_EQ(prepare(raw, recipe).labels, (std::vector<int>{0, 1, 0, 1}));
}

TEST(Split, PublishedSizes) {
  const std::pair<std::size_t, std::array<std::size_t, 3>> cases[] = {
      {768, {614, 77, 77}}, {1000, {800, 100, 100}}, {1460, {1168, 146, 146}},
      {10578, {8462, 1058, 1058}}};
  for (const auto& [n, sizes] : cases) {
    const auto s = split_indices(n, SplitSpec{});
    EXPECT_EQ(s.train.size(), sizes[0]) << n;
    EXPECT_EQ(s.val.size(), sizes[1]) << n;
    EXPECT_EQ(s.test.size(), sizes[2]) << n;
  }
}

TEST(Split, PartitionAndDeterminism) {
  for (std::size_t n : {10u, 11u, 97u, 768u}) {
    const auto s = split_indices(n, SplitSpec{});
    std::vector<std::size_t> all;
    for (const auto* part : {&s.train, &s.val, &s.test}) all.insert(all.end(), part->begin(), part->end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(n);
    std::iota(expected.begin(), expected.end(), std::size_t{0});
    EXPECT_EQ(all, expected);
    const auto again = split_indices(n, SplitSpec{});
    EXPECT_EQ(again.train, s.train);
    EXPECT_EQ(again.test, s.test);
  }
  EXPECT_NE(split_indices(100, SplitSpec{0.8, 0.1, 0.1, 11}).test, split_indices(100, SplitSpec{}).test);
}

TEST(Split, RejectsTinyAndBadFractions) {
  EXPECT_THROW(split_indices(9, SplitSpec{}), TooFewRows);
  EXPECT_THROW(split_indices(100, SplitSpec{0.8, 0.3, 0.1, 10}), ManifestError);
}

TEST(Split, DatasetSplitFollowsIndices) {
  const auto ds = numbered(20);
  const auto idx = split_indices(20, SplitSpec{});
  const auto parts = split(ds, SplitSpec{});
  ASSERT_EQ(parts.test.size(), idx.test.size());
  for (std::size_t i = 0; i < idx.test.size(); ++i) {
    EXPECT_EQ(parts.test.features(static_cast<Eigen::Index>(i), 0), static_cast<double>(idx.test[i]));
  }
}

TEST(Manifest, PreSplitFilesLoadVerbatim) {
  TempDir dir;
  write_file(dir / "tr.csv", "a,b,y\n1,2,0\n3,4,1\n5,6,0\n");
  write_file(dir / "va.csv", "a,b,y\n7,8,1\n");
  write_file(dir / "te.csv", "a,b,y\n9,10,0\n11,12,1\n");
  write_file(dir / "m.json",
             R"({"name":"tiny","csv":{"train":"tr.csv","val":"va.csv","test":"te.csv"},"label_column":"y"})");
  const auto b = load_manifest(dir / "m.json");
  EXPECT_TRUE(b.pre_split);
  EXPECT_EQ(b.splits.train.size(), 3u);
  EXPECT_EQ(b.splits.val.size(), 1u);
  EXPECT_EQ(b.splits.test.size(), 2u);
  EXPECT_EQ(b.splits.test.features(1, 1), 12.0);
}

TEST(Manifest, RecipeAndSplitEqualComposition) {
  TempDir dir;
  std::string text = "a,b,y\n";
  for (int i = 0; i < 40; ++i) text += std::to_string(i) + "," + std::to_string(i * i) + "," + std::to_string(i % 3) + "\n";
  write_file(dir / "d.csv", text);
  write_file(dir / "m.json", R"({"name":"d","csv":"d.csv","label_column":"y",
    "recipe":{"scale":"minmax"},"split":{"train":0.8,"val":0.1,"test":0.1,"seed":4}})");
  const auto b = load_manifest(dir / "m.json");
  PrepRecipe recipe;
  recipe.label_column = "y";
  recipe.scale = Scaling::kMinMax;
  const auto direct = split(prepare(dir / "d.csv", recipe), SplitSpec{0.8, 0.1, 0.1, 4});
  EXPECT_EQ(b.splits.train.features, direct.train.features);
  EXPECT_EQ(b.splits.test.labels, direct.test.labels);
  EXPECT_EQ(b.splits.train.class_count, 3u);
}

TEST(Manifest, RejectsUnknownKeys) {
  TempDir dir;
  write_file(dir / "d.csv", "a,y\n1,0\n");
  write_file(dir / "m.json", R"({"csv":"d.csv","label_column":"y","shuffle":true})");
  EXPECT_THROW(load_manifest(dir / "m.json"), ManifestError);
  write_file(dir / "m.json", R"({"csv":"d.csv","label_column":"y","recipe":{"normalize":true}})");
  EXPECT_THROW(load_manifest(dir / "m.json"), ManifestError);
  EXPECT_THROW(load_manifest(dir / "absent.json"), IoError);
}

TEST(Benchmarks, BankMarketingBalancedTo5289) {
  TempDir dir;
  const auto b = load_manifest(stage_benchmark(dir, "bm"));
  const auto& s = b.splits;
  EXPECT_EQ(s.train.feature_count(), 28u);
  EXPECT_EQ(s.train.size(), 8462u);
  EXPECT_EQ(s.val.size(), 1058u);
  EXPECT_EQ(s.test.size(), 1058u);
  std::vector<std::size_t> totals(2, 0);
  for (const auto* part : {&s.train, &s.val, &s.test}) {
    const auto counts = part->class_counts();
    totals[0] += counts[0];
    totals[1] += counts[1];
  }
  EXPECT_EQ(totals, (std::vector<std::size_t>{5289, 5289}));
  const auto& names = s.train.feature_names;
  for (const char* dropped : {"job_admin.", "marital_divorced", "default_no", "housing_no",
                              "loan_no", "contact_cellular"}) {
    EXPECT_EQ(std::count(names.begin(), names.end(), dropped), 0) << dropped;
  }
}

TEST(Benchmarks, GermanCreditHas22Features) {
  TempDir dir;
  const auto b = load_manifest(stage_benchmark(dir, "gc"));
  EXPECT_EQ(b.splits.train.feature_count(), 22u);
  EXPECT_EQ(b.splits.train.size(), 800u);
  EXPECT_EQ(b.splits.val.size(), 100u);
  EXPECT_EQ(b.splits.test.size(), 100u);
  EXPECT_GE(b.splits.train.features.minCoeff(), 0.0);
  EXPECT_LE(b.splits.train.features.maxCoeff(), 1.0);
}

TEST(Benchmarks, HousePriceTestSize146) {
  TempDir dir;
  const auto b = load_manifest(stage_benchmark(dir, "hp"));
  EXPECT_EQ(b.splits.test.size(), 146u);
  EXPECT_EQ(b.splits.train.size(), 1168u);
  EXPECT_EQ(b.splits.test.feature_count(), 10u);
  EXPECT_EQ(b.splits.test.class_count, 2u);
}

TEST(Benchmarks, PimaDiabetesSizes) {
  TempDir dir;
  const auto b = load_manifest(stage_benchmark(dir, "pd"));
  EXPECT_EQ(b.splits.train.size(), 614u);
  EXPECT_EQ(b.splits.val.size(), 77u);
  EXPECT_EQ(b.splits.test.size(), 77u);
  EXPECT_EQ(b.splits.test.feature_count(), 8u);
}

TEST(Blobs, ShippedFileMatchesGenerator) {
  const std::string shipped = read_file(kSourceDir / "benchmarks/blobs/blobs.csv");
  EXPECT_EQ(format_csv(make_gaussian_blobs(BlobSpec{})), shipped);
}

TEST(Blobs, NoiseRateAndBalance) {
  const auto table = make_gaussian_blobs(BlobSpec{});
  ASSERT_EQ(table.rows.size(), 2000u);
  std::size_t flipped = 0;
  std::size_t ones = 0;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const int label = std::stoi(table.rows[r].back());
    ones += static_cast<std::size_t>(label);
    if (label != static_cast<int>(r % 2)) ++flipped;
  }
  EXPECT_NEAR(static_cast<double>(flipped) / 2000.0, 0.15, 0.025);
  EXPECT_NEAR(static_cast<double>(ones) / 2000.0, 0.5, 0.05);
}
