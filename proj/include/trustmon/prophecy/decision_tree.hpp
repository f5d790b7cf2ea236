#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <cstdint>
#include <json.hpp>
#include <optional>
#include <span>
#include <vector>

namespace trustmon::prophecy {

enum class Outcome { kPass = 0, kFail = 1 };

struct TreeParams {
  std::optional<std::size_t> max_depth;  // unlimited when empty
  std::size_t min_samples_leaf = 5;
  std::uint64_t random_state = 42;
};

/// Internal nodes send x[feature] <= threshold left. Leaves have feature -1.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  Outcome label = Outcome::kPass;
  std::size_t pass_count = 0;
  std::size_t fail_count = 0;

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  TreeParams params;
  std::size_t feature_count = 0;

  std::size_t leaf_index(std::span<const double> x) const;
  Outcome predict(std::span<const double> x) const;
  Outcome predict(const Eigen::VectorXd& x) const;
  std::size_t depth() const;
  std::size_t leaf_count() const;
};

/// CART with Gini impurity.
///
/// Thresholds are midpoints between consecutive distinct values. The split
/// with the lowest weighted child impurity wins, compared exactly; ties go to
/// the lowest feature, then the lowest threshold. A split is only considered
/// when both children keep at least min_samples_leaf rows, and splits with no
/// impurity decrease are allowed (XOR needs one). Leaves take the majority
/// outcome, pass on ties. Throws EmptyTrainingSet on zero rows.
DecisionTree fit_tree(const Eigen::MatrixXd& x, std::span<const Outcome> y,
                      const TreeParams& params = {});

struct Constraint {
  std::size_t feature = 0;
  double threshold = 0.0;
  bool at_most = true;  // x <= threshold, otherwise x > threshold

  bool holds(std::span<const double> x) const;
};

/// Conjunction of the constraints on one root-to-leaf path.
struct Rule {
  std::vector<Constraint> constraints;
  Outcome label = Outcome::kPass;
  std::size_t leaf = 0;

  bool matches(std::span<const double> x) const;
};

/// One rule per leaf, in left-to-right leaf order.
std::vector<Rule> extract_rules(const DecisionTree& tree);

/// Label of the first matching rule. Rules from one tree partition the input
/// space, so exactly one matches.
Outcome evaluate_rules(std::span<const Rule> rules, std::span<const double> x);

nlohmann::ordered_json tree_to_json(const DecisionTree& tree);
DecisionTree tree_from_json(const nlohmann::json& doc);
nlohmann::ordered_json rules_to_json(std::span<const Rule> rules);
std::vector<Rule> rules_from_json(const nlohmann::json& doc);

}  // namespace trustmon::prophecy
