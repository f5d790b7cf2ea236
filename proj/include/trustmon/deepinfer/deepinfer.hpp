#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <json.hpp>
#include <string>
#include <string_view>
#include <vector>

#include "trustmon/data/dataset.hpp"
#include "trustmon/deepinfer/halfspace.hpp"
#include "trustmon/model/network.hpp"
#include "trustmon/verdict.hpp"

namespace trustmon::deepinfer {

struct DeepInferConfig {
  Relation condition = Relation::kGe;
  double prediction_interval = 0.95;

  /// Accepts exactly `condition` (only ">=") and `prediction_interval`
  /// (strictly between 0 and 1).
  static DeepInferConfig from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;
};

/// Preconditions and thresholds for one (predicted, runner-up) class pair.
///
/// The output condition depends on which two logits compete, so each pair
/// gets its own pullback. Scalar heads have the pairs (1, 0) and (0, 1).
struct ConditionSet {
  std::size_t predicted = 0;
  std::size_t runner_up = 0;
  Halfspace halfspace;  // over the anchor layer's input
  std::vector<FeaturePrecondition> preconditions;
  Eigen::VectorXd thresholds;  // validation violation rate per feature
  std::size_t validation_count = 0;
};

struct DeepInferArtifacts {
  DeepInferConfig config;
  std::size_t anchor_layer = 0;
  bool approximate = false;
  Eigen::VectorXd feature_means;
  std::vector<ConditionSet> conditions;

  std::size_t feature_count() const { return static_cast<std::size_t>(feature_means.size()); }
  const ConditionSet& conditions_for(std::size_t predicted, std::size_t runner_up) const;
};

struct InferResult {
  Verdict verdict = Verdict::kUncertain;
  std::size_t violations = 0;
  std::size_t satisfactions = 0;
};

/// Builds preconditions at the lowest supported anchor layer using training
/// means, then sets every threshold to the share of validation instances
/// (with the same class pair) that violate it. A pair never seen in
/// validation gets thresholds of 0.5, which makes every feature
/// uninformative.
DeepInferArtifacts analyze(const model::Network& net, const data::Dataset& train,
                           const data::Dataset& val, const DeepInferConfig& config);

/// Runner-up class of an output vector; 1 - predicted for scalar heads.
std::size_t runner_up_class(const Eigen::VectorXd& output, std::size_t predicted);

/// Features with a threshold below 0.5 are informative. Incorrect when more
/// informative features are violated than satisfied, Correct when fewer,
/// Uncertain on a tie.
InferResult decide(const std::vector<bool>& violated, const Eigen::VectorXd& thresholds);

/// `x` is the value vector entering the anchor layer.
InferResult infer(const DeepInferArtifacts& art, const Eigen::VectorXd& x, std::size_t predicted,
                  std::size_t runner_up);
InferResult infer(const DeepInferArtifacts& art, const model::Network& net,
                  const Eigen::VectorXd& input);

std::string serialize(const DeepInferArtifacts& art);
DeepInferArtifacts deserialize(std::string_view text);

}  // namespace trustmon::deepinfer
