#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "trustmon/deepinfer/deepinfer.hpp"
#include "trustmon/error.hpp"

using namespace trustmon;
using namespace trustmon::deepinfer;
using namespace trustmon::testing;
using model::Activation;

namespace {

data::Dataset make_dataset(const Eigen::MatrixXd& x) {
  data::Dataset ds;
  ds.features = x;
  ds.labels.assign(static_cast<std::size_t>(x.rows()), 0);
  ds.class_count = 2;
  return ds;
}

// sigmoid(x0 + x1): class 1 requires x0 + x1 >= logit(p).
model::Network sum_classifier() {
  return model::Network(2, 2, {dense(matrix({{1, 1}}), vec({0}), Activation::kSigmoid)});
}

const double kLogit95 = std::log(0.95 / 0.05);

}  // namespace

TEST(Halfspace, ScalingInvariance) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> lam(1e-3, 1e3);
  for (int t = 0; t < 50; ++t) {
    const Halfspace hs{random_vector(rng, 5), random_vector(rng, 1)(0),
                       t % 2 ? Relation::kGe : Relation::kLe};
    const Halfspace scaled = hs.scaled(lam(rng));
    for (int k = 0; k < 50; ++k) {
      const Eigen::VectorXd x = random_vector(rng, 5, 2.0);
      EXPECT_EQ(hs.satisfied(x), scaled.satisfied(x));
    }
  }
  EXPECT_THROW(Halfspace{}.scaled(0.0), DimensionError);
}

TEST(Wp, SingleLinearLayerExample) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd w = random_matrix(rng, 3, 4);
  const Eigen::VectorXd b = random_vector(rng, 3);
  const model::Network net(4, 3, {dense(w, b, Activation::kLinear)});
  const Halfspace post{Eigen::VectorXd::Ones(3), 0.7, Relation::kGe};
  const Halfspace pre = wp_backward(net, post, 0);
  EXPECT_NEAR((pre.weights - w.transpose() * Eigen::VectorXd::Ones(3)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(pre.offset, 0.7 - b.sum(), 1e-12);
  EXPECT_FALSE(wp_is_approximate(net, 0));
  for (int k = 0; k < 10000; ++k) {
    const Eigen::VectorXd x = random_vector(rng, 4, 3.0);
    const double forward_slack = post.slack(forward_trace(net, x).output());
    if (std::abs(forward_slack) < 1e-9) continue;
    EXPECT_EQ(pre.satisfied(x), forward_slack >= 0);
  }
}

TEST(Wp, IdentityLayersLeavePostUnchanged) {
  const model::Network net(
      3, 3,
      {dense(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), Activation::kLinear),
       model::Layer::flatten(),
       dense(Eigen::MatrixXd::Identity(3, 3), Eigen::VectorXd::Zero(3), Activation::kLinear)});
  const Halfspace post{vec({1, -2, 0.5}), 1.25, Relation::kLe};
  const Halfspace pre = wp_backward(net, post, 0);
  EXPECT_EQ(pre.weights, post.weights);
  EXPECT_EQ(pre.offset, post.offset);
  EXPECT_EQ(pre.relation, post.relation);
}

TEST(Wp, MatchesComposedAffineMap) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto net = random_network(rng, {5, 7, 4}, Activation::kLinear, Activation::kLinear, 4);
    const auto& l0 = net.layer(0);
    const auto& l1 = net.layer(1);
    const Eigen::MatrixXd a = l1.weights * l0.weights;
    const Eigen::VectorXd c = l1.weights * l0.bias + l1.bias;
    const Halfspace post{random_vector(rng, 4), 0.3, Relation::kGe};
    const Halfspace pre = wp_backward(net, post, 0);
    EXPECT_NEAR((pre.weights - a.transpose() * post.weights).norm(), 0.0, 1e-9);
    EXPECT_NEAR(pre.offset, post.offset - post.weights.dot(c), 1e-9);
  }
}

TEST(Wp, AffineSoundnessOnRandomNetworks) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> depth(1, 4);
  std::uniform_int_distribution<int> width(1, 16);
  for (int t = 0; t < 25; ++t) {
    std::vector<std::size_t> widths(static_cast<std::size_t>(depth(rng)) + 1);
    for (auto& w : widths) w = static_cast<std::size_t>(width(rng));
    const auto net = random_network(rng, widths, Activation::kLinear, Activation::kLinear,
                                    std::max<std::size_t>(widths.back(), 2));
    const Halfspace post{random_vector(rng, static_cast<Eigen::Index>(widths.back())), 0.1,
                         t % 2 ? Relation::kGe : Relation::kLe};
    const Halfspace pre = wp_backward(net, post, 0);
    for (int k = 0; k < 1000; ++k) {
      const Eigen::VectorXd x = random_vector(rng, static_cast<Eigen::Index>(widths.front()), 2.0);
      const double forward_slack = post.slack(forward_trace(net, x).output());
      EXPECT_NEAR(pre.slack(x), forward_slack, 1e-9);
    }
  }
}

TEST(Wp, ReluIsApproximateAndSigmoidBlocks) {
  std::mt19937_64 rng(5);
  const auto relu = random_network(rng, {3, 4, 2}, Activation::kRelu, Activation::kSoftmax, 2);
  EXPECT_EQ(default_anchor_layer(relu), 0u);
  EXPECT_TRUE(wp_is_approximate(relu, 0));
  EXPECT_FALSE(wp_is_approximate(relu, 1));

  const auto sig = random_network(rng, {3, 4, 4, 2}, Activation::kSigmoid, Activation::kSoftmax, 2);
  EXPECT_EQ(default_anchor_layer(sig), 2u);
  const Halfspace post = output_postcondition(sig, 0, 1, 0.95);
  EXPECT_THROW(wp_backward(sig, post, 0), UnsupportedActivation);
  EXPECT_NO_THROW(wp_backward(sig, post, 2));
  EXPECT_THROW(wp_backward(sig, post, 3), AnchorOutOfRange);
}

TEST(Wp, HeadInversion) {
  const double p = 0.95;
  const auto sig = sum_classifier();
  const Halfspace one = output_postcondition(sig, 1, 0, p);
  EXPECT_EQ(one.relation, Relation::kGe);
  EXPECT_NEAR(one.offset, kLogit95, 1e-15);
  const Halfspace zero = output_postcondition(sig, 0, 1, p);
  EXPECT_EQ(zero.relation, Relation::kLe);
  EXPECT_NEAR(zero.offset, -kLogit95, 1e-15);
  // sigma(z) >= p exactly when z >= logit(p).
  for (double z : {kLogit95 - 1e-6, kLogit95 + 1e-6}) {
    EXPECT_EQ(one.satisfied(vec({z})), 1.0 / (1.0 + std::exp(-z)) >= p);
  }

  const model::Network lin(2, 2, {dense(matrix({{1, 1}}), vec({0}), Activation::kLinear)});
  EXPECT_EQ(output_postcondition(lin, 1, 0, p).offset, p);
  EXPECT_NEAR(output_postcondition(lin, 0, 1, p).offset, 1 - p, 1e-15);

  std::mt19937_64 rng(6);
  const auto soft = random_network(rng, {2, 3}, Activation::kLinear, Activation::kSoftmax, 3);
  const Halfspace margin = output_postcondition(soft, 2, 0, p);
  EXPECT_EQ(margin.weights, vec({-1, 0, 1}));
  EXPECT_NEAR(margin.offset, kLogit95, 1e-15);
  EXPECT_THROW(output_postcondition(soft, 1, 1, p), DimensionError);
}

TEST(FeaturePreconditions, Examples) {
  auto pre = derive_feature_preconditions({vec({2, 0}), 4, Relation::kGe}, vec({7, -3}));
  EXPECT_FALSE(pre[0].vacuous);
  EXPECT_EQ(pre[0].bound, 2.0);
  EXPECT_EQ(pre[0].relation, Relation::kGe);
  EXPECT_TRUE(pre[1].vacuous);
  EXPECT_TRUE(pre[1].satisfied(-1e300));

  pre = derive_feature_preconditions({vec({-1}), -3, Relation::kGe}, vec({0}));
  EXPECT_EQ(pre[0].bound, 3.0);
  EXPECT_EQ(pre[0].relation, Relation::kLe);

  pre = derive_feature_preconditions({vec({1, 1}), 1, Relation::kGe}, vec({0.25, 0.25}));
  EXPECT_EQ(pre[0].bound, 0.75);
  EXPECT_EQ(pre[1].bound, 0.75);
  EXPECT_EQ(pre[1].relation, Relation::kGe);
  EXPECT_EQ(pre[1].feature_index, 1u);
}

TEST(FeaturePreconditions, MeanSitsOnTheBoundaryWhenItLiesOnTheHalfspace) {
  std::mt19937_64 rng(7);
  const Eigen::VectorXd w = random_vector(rng, 6);
  const Eigen::VectorXd mu = random_vector(rng, 6);
  const auto pre = derive_feature_preconditions({w, w.dot(mu), Relation::kGe}, mu);
  for (std::size_t j = 0; j < 6; ++j) {
    EXPECT_NEAR(pre[j].bound, mu(static_cast<Eigen::Index>(j)), 1e-12);
  }
}

TEST(DeepInferAnalyze, Thresholds) {
  const auto net = sum_classifier();
  const auto train = make_dataset(matrix({{-1, -1}, {1, 1}}));  // means (0, 0)
  // All four predict class 1; x0 violates once, x1 never.
  const auto val = make_dataset(matrix({{3, 5}, {3, 5}, {3, 5}, {1, 5}}));
  const auto art = analyze(net, train, val, DeepInferConfig{});
  EXPECT_EQ(art.anchor_layer, 0u);
  EXPECT_FALSE(art.approximate);
  const auto& set = art.conditions_for(1, 0);
  EXPECT_NEAR(set.preconditions[0].bound, kLogit95, 1e-12);
  EXPECT_EQ(set.validation_count, 4u);
  EXPECT_EQ(set.thresholds(0), 0.25);
  EXPECT_EQ(set.thresholds(1), 0.0);

  const auto all = analyze(net, train, make_dataset(matrix({{5, 1}, {6, 2}})), DeepInferConfig{});
  EXPECT_EQ(all.conditions_for(1, 0).thresholds(1), 1.0);
  EXPECT_EQ(all.conditions_for(1, 0).thresholds(0), 0.0);
  // Class 0 was never predicted on validation.
  EXPECT_EQ(all.conditions_for(0, 1).validation_count, 0u);
  EXPECT_EQ(all.conditions_for(0, 1).thresholds, vec({0.5, 0.5}));
  EXPECT_EQ(infer(all, net, vec({-5, -5})).verdict, Verdict::kUncertain);

  EXPECT_THROW(analyze(net, train, make_dataset(Eigen::MatrixXd(0, 2)), DeepInferConfig{}),
               EmptyTrainingSet);
}

TEST(DeepInferDecide, Examples) {
  const Eigen::VectorXd low = vec({0.1, 0.1, 0.1});
  auto r = decide({false, false, false}, low);
  EXPECT_EQ(r.verdict, Verdict::kCorrect);
  EXPECT_EQ(r.violations, 0u);
  EXPECT_EQ(r.satisfactions, 3u);

  EXPECT_EQ(decide({true, true, false}, low).verdict, Verdict::kIncorrect);
  EXPECT_EQ(decide({true, false}, vec({0.1, 0.2})).verdict, Verdict::kUncertain);
  // Uninformative features are counted but carry no evidence.
  r = decide({true, true, false}, vec({0.5, 0.9, 0.0}));
  EXPECT_EQ(r.verdict, Verdict::kCorrect);
  EXPECT_EQ(r.violations, 2u);
  EXPECT_THROW(decide({true}, low), DimensionError);
}

TEST(DeepInferDecide, TotalityAndMonotonicity) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto rank = [](Verdict v) { return v == Verdict::kCorrect ? 0 : v == Verdict::kUncertain ? 1 : 2; };
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 1 + static_cast<std::size_t>(t % 9);
    Eigen::VectorXd th(static_cast<Eigen::Index>(n));
    std::vector<bool> violated(n);
    for (std::size_t j = 0; j < n; ++j) {
      th(static_cast<Eigen::Index>(j)) = unit(rng);
      violated[j] = unit(rng) < 0.5;
    }
    const auto before = decide(violated, th);
    EXPECT_EQ(before.violations + before.satisfactions, n);
    for (std::size_t j = 0; j < n; ++j) {
      if (violated[j]) continue;
      auto flipped_flags = violated;
      flipped_flags[j] = true;
      EXPECT_GE(rank(decide(flipped_flags, th).verdict), rank(before.verdict));
    }
  }
}

TEST(DeepInferInfer, RunnerUpAndDimensionChecks) {
  EXPECT_EQ(runner_up_class(vec({0.2, 0.5, 0.3}), 1), 2u);
  EXPECT_EQ(runner_up_class(vec({0.4, 0.3, 0.3}), 0), 1u);
  EXPECT_EQ(runner_up_class(vec({0.9}), 1), 0u);

  const auto net = sum_classifier();
  const auto train = make_dataset(matrix({{-1, -1}, {1, 1}}));
  const auto art = analyze(net, train, make_dataset(matrix({{3, 5}, {-4, -2}})), DeepInferConfig{});
  EXPECT_THROW(infer(art, vec({1, 2, 3}), 1, 0), DimensionError);
  EXPECT_THROW(infer(art, vec({NAN, 1}), 1, 0), DimensionError);
  EXPECT_EQ(infer(art, net, vec({4, 4})).verdict, Verdict::kCorrect);
}

TEST(DeepInferArtifactsIo, RoundTrip) {
  std::mt19937_64 rng(9);
  const auto net = random_network(rng, {4, 6, 3}, Activation::kRelu, Activation::kSoftmax, 3);
  data::Dataset train = make_dataset(random_matrix(rng, 50, 4));
  data::Dataset val = make_dataset(random_matrix(rng, 30, 4));
  const auto art = analyze(net, train, val, DeepInferConfig{});
  EXPECT_TRUE(art.approximate);
  EXPECT_EQ(art.conditions.size(), 6u);
  const std::string text = serialize(art);
  EXPECT_EQ(serialize(deserialize(text)), text);
  EXPECT_EQ(serialize(analyze(net, train, val, DeepInferConfig{})), text);
  EXPECT_THROW(deserialize("[]"), ParseError);
}

TEST(DeepInferConfigKeys, Validation) {
  const auto c = DeepInferConfig::from_json(
      nlohmann::json::parse(R"({"condition":">=","prediction_interval":0.95})"));
  EXPECT_EQ(c.prediction_interval, 0.95);
  EXPECT_THROW(DeepInferConfig::from_json(nlohmann::json::parse(R"({"condition":"<="})")), ConfigError);
  EXPECT_THROW(DeepInferConfig::from_json(nlohmann::json::parse(R"({"prediction_interval":1})")),
               ConfigError);
  EXPECT_THROW(DeepInferConfig::from_json(nlohmann::json::parse(R"({"anchor":2})")), ConfigError);
}
