#pragma once

#include <cstddef>
#include <json.hpp>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trustmon/data/dataset.hpp"
#include "trustmon/model/network.hpp"
#include "trustmon/prophecy/decision_tree.hpp"
#include "trustmon/verdict.hpp"

namespace trustmon::prophecy {

struct ProphecyConfig {
  bool only_activation_layers = true;
  bool only_dense_layers = true;
  std::uint64_t random_state = 42;
  bool skip_rules = true;
  std::optional<std::size_t> max_depth;
  std::size_t min_samples_leaf = 5;
  bool balanced = false;

  /// Accepts the fields above by name (max_depth may be null) and nothing else.
  static ProphecyConfig from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;

  model::LayerFilter layer_filter() const { return {only_activation_layers, only_dense_layers}; }
  TreeParams tree_params() const { return {max_depth, min_samples_leaf, random_state}; }
};

struct ProphecyArtifacts {
  ProphecyConfig config;
  std::vector<std::size_t> selected_layers;
  std::map<std::size_t, DecisionTree> trees;
  /// Filled only when rules are not skipped.
  std::map<std::size_t, std::vector<Rule>> rules;
  std::size_t training_rows = 0;
};

struct Votes {
  std::size_t pass = 0;
  std::size_t fail = 0;
};

/// Labels every analysis row pass or fail by comparing the model's
/// prediction with the ground truth, optionally balances pass and fail rows
/// to the minority count, then fits one tree per selected layer.
ProphecyArtifacts analyze(const model::Network& net, const data::Dataset& analysis,
                          const ProphecyConfig& config);

/// Pass/fail label of each row: fail when the model's prediction is wrong.
std::vector<Outcome> pass_fail_labels(const model::Network& net, const data::Dataset& ds);

/// Strict majority of fail votes is Incorrect, of pass votes Correct; a tie
/// is Uncertain.
Verdict vote_verdict(const Votes& votes);

Votes collect_votes(const ProphecyArtifacts& art, const model::ActivationTrace& trace);
Verdict infer(const ProphecyArtifacts& art, const model::ActivationTrace& trace);
Verdict infer(const ProphecyArtifacts& art, const model::Network& net, const Eigen::VectorXd& x);

std::string serialize(const ProphecyArtifacts& art);
ProphecyArtifacts deserialize(std::string_view text);

}  // namespace trustmon::prophecy
