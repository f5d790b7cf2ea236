#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "test_support.hpp"
#include "trustmon/error.hpp"
#include "trustmon/selfchecker/kde.hpp"
#include "trustmon/selfchecker/selfchecker.hpp"

using namespace trustmon;
using namespace trustmon::selfchecker;
using namespace trustmon::testing;
using model::Activation;

namespace {

// Perfect classifier for sign(x0 + x1) with a sigmoid hidden layer.
model::Network diagonal_classifier() {
  return model::Network(
      2, 2,
      {dense(matrix({{1, 1}, {1, -1}, {0.5, 0.5}}), vec({0, 0, 0}), Activation::kSigmoid),
       dense(matrix({{-4, 0, -4}, {4, 0, 4}}), vec({4, -4}), Activation::kSoftmax)});
}

data::Dataset blob_dataset(std::size_t n, std::uint64_t seed, double center = 3.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  data::Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(n), 2);
  ds.class_count = 2;
  ds.feature_names = {"x0", "x1"};
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double c = label == 1 ? center : -center;
    ds.features(static_cast<Eigen::Index>(i), 0) = c + noise(rng);
    ds.features(static_cast<Eigen::Index>(i), 1) = c + noise(rng);
    ds.labels.push_back(label);
  }
  return ds;
}

Eigen::MatrixXd column(std::initializer_list<double> values) { return vec(values); }

}  // namespace

TEST(Kde, ScottFactor) {
  EXPECT_NEAR(scott_factor(100, 1), 0.3981071705534972, 1e-15);
  EXPECT_NEAR(scott_factor(16, 4), 0.7071067811865476, 1e-15);
}

TEST(Kde, SymmetricData) {
  const auto dm = fit_density(column({0, 0, 1, 1}));
  for (double t : {0.1, 0.3}) {
    EXPECT_NEAR(estimate_log_density(dm, vec({0.5 - t})), estimate_log_density(dm, vec({0.5 + t})),
                1e-12);
  }
}

TEST(Kde, TwoPointDirectSum) {
  const auto dm = fit_density(column({-1, 1}));
  const double h2 = std::pow(2.0, -2.0 / 5.0) * 2.0;  // factor^2 * var(ddof=1)
  const double expected =
      std::log(std::exp(-0.5 / h2) / std::sqrt(2 * std::numbers::pi * h2));  // both kernels equal
  EXPECT_NEAR(estimate_log_density(dm, vec({0})), expected, 1e-12);
  EXPECT_NEAR(estimate_log_density(dm, vec({0})), kde_log_density_oracle(column({-1, 1}), vec({0})),
              1e-12);
}

TEST(Kde, MatchesOracleIn3D) {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd samples = random_matrix(rng, 40, 3, 2.0);
  const auto dm = fit_density(samples);
  EXPECT_EQ(dm.regularization, 0.0);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd x = random_vector(rng, 3, 2.0);
    EXPECT_NEAR(estimate_log_density(dm, x), kde_log_density_oracle(samples, x), 1e-12);
  }
}

TEST(Kde, DuplicateColumnTakesRegularizedPath) {
  std::mt19937_64 rng(12);
  Eigen::MatrixXd samples(30, 2);
  samples.col(0) = random_vector(rng, 30);
  samples.col(1) = samples.col(0);
  const auto dm = fit_density(samples);
  EXPECT_EQ(dm.regularization, 0.01);
  EXPECT_EQ(dm.dims(), 2u);
  for (int t = 0; t < 10; ++t) {
    const Eigen::VectorXd x = random_vector(rng, 2);
    const double value = estimate_log_density(dm, x);
    EXPECT_TRUE(std::isfinite(value));
    EXPECT_NEAR(value, kde_log_density_oracle(samples, x, 1e-5, 0.01), 1e-12);
  }
}

TEST(Kde, VarianceScreening) {
  Eigen::MatrixXd samples(4, 3);
  samples << 0, 5, 1, 1, 5, 2, 2, 5, 2, 3, 5, 4;
  const auto dm = fit_density(samples);
  EXPECT_EQ(dm.kept_dims, (std::vector<std::size_t>{0, 2}));
  // The constant dimension is ignored entirely.
  EXPECT_EQ(estimate_log_density(dm, vec({1, 5, 2})), estimate_log_density(dm, vec({1, -100, 2})));
}

TEST(Kde, DegenerateInputs) {
  EXPECT_THROW(fit_density(column({0})), DegenerateData);
  EXPECT_THROW(fit_density(column({2, 2, 2})), DegenerateData);
  const auto dm = fit_density(column({0, 1, 2}));
  EXPECT_THROW(estimate_log_density(dm, vec({0, 1})), DimensionError);
}

TEST(Kde, UnimodalAndTranslationInvariant) {
  std::mt19937_64 rng(13);
  Eigen::MatrixXd samples = random_matrix(rng, 60, 2, 0.1);
  const auto dm = fit_density(samples);
  const Eigen::VectorXd mean = samples.colwise().mean().transpose();
  EXPECT_GE(estimate_log_density(dm, mean), estimate_log_density(dm, mean + vec({0.5, 0.5})));

  const Eigen::RowVectorXd shift = vec({3.5, -2.25}).transpose();
  const auto shifted = fit_density(samples.rowwise() + shift);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd x = random_vector(rng, 2, 0.2);
    EXPECT_NEAR(estimate_log_density(dm, x),
                estimate_log_density(shifted, x + shift.transpose()), 1e-9);
  }
}

TEST(Kde, CholeskyRejectsSingular) {
  EXPECT_FALSE(cholesky_factor(matrix({{1, 1}, {1, 1}})));
  const auto l = cholesky_factor(matrix({{4, 2}, {2, 3}}));
  ASSERT_TRUE(l);
  EXPECT_NEAR(((*l) * l->transpose() - matrix({{4, 2}, {2, 3}})).norm(), 0.0, 1e-14);
}

TEST(SelfCheckerVoting, MajorityRule) {
  using V = std::vector<std::size_t>;
  EXPECT_EQ(majority_alarm(V{1, 1, 1}, 1), Verdict::kCorrect);
  EXPECT_EQ(majority_alarm(V{0, 0, 1}, 1), Verdict::kIncorrect);
  EXPECT_EQ(majority_alarm(V{0, 1}, 1), Verdict::kCorrect);  // half is not a majority
  EXPECT_EQ(majority_alarm(V{0, 0}, 1), Verdict::kIncorrect);
}

TEST(SelfCheckerVoting, LayerClassArgmax) {
  const std::vector<double> scores{-3.0, -1.0, -1.0};
  EXPECT_EQ(infer_layer_class(scores), 1u);
  std::vector<double> shifted = scores;
  for (double& s : shifted) s += std::log(123.0);  // common positive density factor
  EXPECT_EQ(infer_layer_class(shifted), 1u);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(infer_layer_class(std::vector<double>{-inf, -50.0}), 1u);
}

TEST(SelfCheckerAnalyze, SeparatedBlobsMostlyCorrect) {
  const auto net = diagonal_classifier();
  const auto train = blob_dataset(400, 1);
  const auto val = blob_dataset(100, 2);
  const auto test = blob_dataset(200, 3);
  const auto art = analyze(net, train, val, SelfCheckerConfig{});
  EXPECT_EQ(art.candidate_layers, (std::vector<std::size_t>{0, 1}));
  // Softmax outputs saturate on well-separated blobs, so only the hidden
  // layer is guaranteed to keep both cells.
  EXPECT_EQ(art.kdes.count({0, 0}), 1u);
  EXPECT_EQ(art.kdes.count({0, 1}), 1u);
  EXPECT_FALSE(art.selected_layers.empty());

  std::size_t correct = 0;
  for (std::size_t r = 0; r < test.size(); ++r) {
    if (infer(art, net, test.row(r)) == Verdict::kCorrect) ++correct;
  }
  EXPECT_GE(correct, 190u);
}

TEST(SelfCheckerAnalyze, AbsentClassLeavesCellOut) {
  const auto net = diagonal_classifier();
  auto train = blob_dataset(200, 4);
  std::vector<std::size_t> zeros;
  for (std::size_t r = 0; r < train.size(); ++r) {
    if (train.labels[r] == 0) zeros.push_back(r);
  }
  train = train.subset(zeros);
  const auto art = analyze(net, train, blob_dataset(50, 5), SelfCheckerConfig{});
  EXPECT_EQ(art.kdes.count({0, 0}), 1u);
  EXPECT_EQ(art.kdes.count({0, 1}), 0u);
  EXPECT_FALSE(art.selected_layers.empty());
  // Class 1 scores -inf everywhere, so every layer infers class 0.
  EXPECT_EQ(infer(art, net, vec({3, 3})), Verdict::kIncorrect);
  EXPECT_EQ(infer(art, net, vec({-3, -3})), Verdict::kCorrect);
}

TEST(SelfCheckerAnalyze, BatchSizeDoesNotMatter) {
  const auto net = diagonal_classifier();
  const auto train = blob_dataset(300, 6, 1.0);
  const auto val = blob_dataset(100, 7, 1.0);
  SelfCheckerConfig small;
  small.batch_size = 7;
  auto batched = analyze(net, train, val, small);
  batched.config.batch_size = SelfCheckerConfig{}.batch_size;
  EXPECT_EQ(serialize(analyze(net, train, val, SelfCheckerConfig{})), serialize(batched));
}

TEST(SelfCheckerAnalyze, ConstantNeuronDoesNotChangeVerdicts) {
  const model::Network base(
      2, 2,
      {dense(matrix({{1, 0.5}, {0.3, -1}}), vec({0, 0}), Activation::kSigmoid),
       dense(matrix({{-3, 1}, {3, -1}}), vec({0.2, 0}), Activation::kSoftmax)});
  const model::Network padded(
      2, 2,
      {dense(matrix({{1, 0.5}, {0.3, -1}, {0, 0}}), vec({0, 0, 0.7}), Activation::kSigmoid),
       dense(matrix({{-3, 1, 0}, {3, -1, 0}}), vec({0.2, 0}), Activation::kSoftmax)});
  const auto train = blob_dataset(300, 8, 0.7);
  const auto val = blob_dataset(100, 9, 0.7);
  const auto a = analyze(base, train, val, SelfCheckerConfig{});
  const auto b = analyze(padded, train, val, SelfCheckerConfig{});
  const auto test = blob_dataset(300, 10, 0.7);
  for (std::size_t r = 0; r < test.size(); ++r) {
    EXPECT_EQ(infer(a, base, test.row(r)), infer(b, padded, test.row(r))) << r;
  }
}

TEST(SelfCheckerAnalyze, NoCandidateLayers) {
  const model::Network linear(2, 2, {dense(Eigen::MatrixXd::Identity(2, 2), vec({0, 0}), Activation::kLinear)});
  EXPECT_THROW(analyze(linear, blob_dataset(20, 1), blob_dataset(20, 2), SelfCheckerConfig{}),
               NoUsableLayers);
}

TEST(SelfCheckerArtifacts, RoundTrip) {
  const auto net = diagonal_classifier();
  const auto art = analyze(net, blob_dataset(200, 11, 1.0), blob_dataset(80, 12, 1.0), SelfCheckerConfig{});
  const std::string text = serialize(art);
  const auto back = deserialize(text);
  EXPECT_EQ(serialize(back), text);
  const auto test = blob_dataset(100, 13, 1.0);
  for (std::size_t r = 0; r < test.size(); ++r) {
    EXPECT_EQ(infer(art, net, test.row(r)), infer(back, net, test.row(r)));
  }
  EXPECT_THROW(deserialize("{}"), ParseError);
  EXPECT_THROW(deserialize(R"({"format_version":1,"tool":"prophecy"})"), ParseError);
}

TEST(SelfCheckerConfigKeys, DefaultsAndRejection) {
  const auto c = SelfCheckerConfig::from_json(nlohmann::json::parse(
      R"({"var_threshold":1e-5,"only_activation_layers":true,"only_dense_layers":true,"batch_size":128})"));
  EXPECT_EQ(c.var_threshold, 1e-5);
  EXPECT_EQ(c.batch_size, 128u);
  EXPECT_EQ(c.alpha, 0.01);
  EXPECT_THROW(SelfCheckerConfig::from_json(nlohmann::json::parse(R"({"bandwidth":1})")), ConfigError);
  EXPECT_THROW(SelfCheckerConfig::from_json(nlohmann::json::parse(R"({"batch_size":"big"})")), ConfigError);
  EXPECT_THROW(SelfCheckerConfig::from_json(nlohmann::json::parse(R"({"batch_size":0})")), ConfigError);
}
