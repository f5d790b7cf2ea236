#include "trustmon/prophecy/decision_tree.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "trustmon/error.hpp"

namespace trustmon::prophecy {

namespace {

__extension__ typedef unsigned __int128 Wide;

// Weighted Gini impurity of a two-way split, scaled by 1/2, as an exact
// fraction num / den:  aL*bL/nL + aR*bR/nR.
struct SplitScore {
  Wide num = 0;
  Wide den = 1;

  bool operator<(const SplitScore& o) const { return num * o.den < o.num * den; }
};

SplitScore split_score(std::size_t pass_l, std::size_t fail_l, std::size_t pass_r,
                       std::size_t fail_r) {
  const Wide nl = pass_l + fail_l;
  const Wide nr = pass_r + fail_r;
  return {Wide(pass_l) * fail_l * nr + Wide(pass_r) * fail_r * nl, nl * nr};
}

struct Builder {
  const Eigen::MatrixXd& x;
  std::span<const Outcome> y;
  const TreeParams& params;
  std::vector<TreeNode> nodes;

  std::size_t build(std::vector<std::size_t>& rows, std::size_t depth) {
    TreeNode node;
    for (std::size_t r : rows) {
      (y[r] == Outcome::kFail ? node.fail_count : node.pass_count)++;
    }
    node.label = node.fail_count > node.pass_count ? Outcome::kFail : Outcome::kPass;
    const std::size_t index = nodes.size();
    nodes.push_back(node);

    const bool pure = node.pass_count == 0 || node.fail_count == 0;
    const bool depth_capped = params.max_depth && depth >= *params.max_depth;
    const std::size_t min_leaf = std::max<std::size_t>(params.min_samples_leaf, 1);
    if (pure || depth_capped || rows.size() < 2 * min_leaf) return index;

    bool found = false;
    SplitScore best;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::size_t> order(rows);
    for (Eigen::Index f = 0; f < x.cols(); ++f) {
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
      std::size_t pass_l = 0;
      std::size_t fail_l = 0;
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        (y[order[i]] == Outcome::kFail ? fail_l : pass_l)++;
        const double lo = x(order[i], f);
        const double hi = x(order[i + 1], f);
        if (!(lo < hi)) continue;
        const std::size_t n_left = i + 1;
        if (n_left < min_leaf || order.size() - n_left < min_leaf) continue;
        const SplitScore score = split_score(pass_l, fail_l, node.pass_count - pass_l,
                                             node.fail_count - fail_l);
        // Thresholds rise along the scan, so strict improvement keeps the lowest.
        if (!found || score < best) {
          found = true;
          best = score;
          best_feature = static_cast<int>(f);
          double mid = lo + (hi - lo) / 2.0;
          if (mid >= hi) mid = lo;
          best_threshold = mid;
        }
      }
    }
    if (!found) return index;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    for (std::size_t r : rows) {
      (x(r, best_feature) <= best_threshold ? left : right).push_back(r);
    }
    rows.clear();
    rows.shrink_to_fit();
    const std::size_t l = build(left, depth + 1);
    const std::size_t r = build(right, depth + 1);
    nodes[index].feature = best_feature;
    nodes[index].threshold = best_threshold;
    nodes[index].left = l;
    nodes[index].right = r;
    return index;
  }
};

Outcome parse_outcome(const std::string& text) {
  if (text == "pass") return Outcome::kPass;
  if (text == "fail") return Outcome::kFail;
  throw ParseError("unknown tree label '" + text + "'");
}

const char* outcome_name(Outcome o) { return o == Outcome::kPass ? "pass" : "fail"; }

}  // namespace

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  if (x.size() != feature_count) {
    throw DimensionError("tree expects " + std::to_string(feature_count) + " features, got " +
                         std::to_string(x.size()));
  }
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return i;
}

Outcome DecisionTree::predict(std::span<const double> x) const {
  return nodes[leaf_index(x)].label;
}

Outcome DecisionTree::predict(const Eigen::VectorXd& x) const {
  return predict(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (!nodes[i].is_leaf()) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

DecisionTree fit_tree(const Eigen::MatrixXd& x, std::span<const Outcome> y,
                      const TreeParams& params) {
  if (x.rows() == 0) throw EmptyTrainingSet("cannot fit a tree on zero rows");
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw LengthMismatch("tree features have " + std::to_string(x.rows()) + " rows but " +
                         std::to_string(y.size()) + " labels");
  }
  Builder builder{x, y, params, {}};
  std::vector<std::size_t> rows(y.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  builder.build(rows, 0);
  DecisionTree tree;
  tree.nodes = std::move(builder.nodes);
  tree.params = params;
  tree.feature_count = static_cast<std::size_t>(x.cols());
  return tree;
}

bool Constraint::holds(std::span<const double> x) const {
  return at_most ? x[feature] <= threshold : x[feature] > threshold;
}

bool Rule::matches(std::span<const double> x) const {
  return std::all_of(constraints.begin(), constraints.end(),
                     [&](const Constraint& c) { return c.holds(x); });
}

std::vector<Rule> extract_rules(const DecisionTree& tree) {
  std::vector<Rule> rules;
  std::vector<Constraint> path;
  auto walk = [&](auto&& self, std::size_t i) -> void {
    const TreeNode& n = tree.nodes[i];
    if (n.is_leaf()) {
      rules.push_back({path, n.label, i});
      return;
    }
    const auto f = static_cast<std::size_t>(n.feature);
    path.push_back({f, n.threshold, true});
    self(self, n.left);
    path.back().at_most = false;
    self(self, n.right);
    path.pop_back();
  };
  walk(walk, 0);
  return rules;
}

Outcome evaluate_rules(std::span<const Rule> rules, std::span<const double> x) {
  for (const Rule& rule : rules) {
    if (rule.matches(x)) return rule.label;
  }
  throw DimensionError("no rule matches the input");
}

nlohmann::ordered_json tree_to_json(const DecisionTree& tree) {
  nlohmann::ordered_json doc;
  doc["feature_count"] = tree.feature_count;
  doc["max_depth"] = tree.params.max_depth ? nlohmann::ordered_json(*tree.params.max_depth)
                                           : nlohmann::ordered_json(nullptr);
  doc["min_samples_leaf"] = tree.params.min_samples_leaf;
  doc["random_state"] = tree.params.random_state;
  auto nodes = nlohmann::ordered_json::array();
  for (const TreeNode& n : tree.nodes) {
    nlohmann::ordered_json item;
    if (n.is_leaf()) {
      item["label"] = outcome_name(n.label);
    } else {
      item["feature"] = n.feature;
      item["threshold"] = n.threshold;
      item["left"] = n.left;
      item["right"] = n.right;
    }
    item["pass"] = n.pass_count;
    item["fail"] = n.fail_count;
    nodes.push_back(std::move(item));
  }
  doc["nodes"] = std::move(nodes);
  return doc;
}

DecisionTree tree_from_json(const nlohmann::json& doc) {
  DecisionTree tree;
  tree.feature_count = doc.at("feature_count").get<std::size_t>();
  if (!doc.at("max_depth").is_null()) tree.params.max_depth = doc["max_depth"].get<std::size_t>();
  tree.params.min_samples_leaf = doc.at("min_samples_leaf").get<std::size_t>();
  tree.params.random_state = doc.at("random_state").get<std::uint64_t>();
  for (const auto& item : doc.at("nodes")) {
    TreeNode n;
    n.pass_count = item.at("pass").get<std::size_t>();
    n.fail_count = item.at("fail").get<std::size_t>();
    if (item.contains("label")) {
      n.label = parse_outcome(item["label"].get<std::string>());
    } else {
      n.feature = item.at("feature").get<int>();
      n.threshold = item.at("threshold").get<double>();
      n.left = item.at("left").get<std::size_t>();
      n.right = item.at("right").get<std::size_t>();
      n.label = n.fail_count > n.pass_count ? Outcome::kFail : Outcome::kPass;
    }
    tree.nodes.push_back(n);
  }
  const std::size_t count = tree.nodes.size();
  if (count == 0) throw ParseError("tree has no nodes");
  for (std::size_t i = 0; i < count; ++i) {
    const TreeNode& n = tree.nodes[i];
    if (n.is_leaf()) continue;
    if (n.left <= i || n.right <= i || n.left >= count || n.right >= count ||
        static_cast<std::size_t>(n.feature) >= tree.feature_count) {
      throw ParseError("tree node " + std::to_string(i) + " has bad links");
    }
  }
  return tree;
}

nlohmann::ordered_json rules_to_json(std::span<const Rule> rules) {
  auto out = nlohmann::ordered_json::array();
  for (const Rule& rule : rules) {
    auto cs = nlohmann::ordered_json::array();
    for (const Constraint& c : rule.constraints) {
      cs.push_back({{"feature", c.feature}, {"op", c.at_most ? "<=" : ">"}, {"threshold", c.threshold}});
    }
    out.push_back({{"leaf", rule.leaf}, {"label", outcome_name(rule.label)}, {"if", std::move(cs)}});
  }
  return out;
}

std::vector<Rule> rules_from_json(const nlohmann::json& doc) {
  std::vector<Rule> rules;
  for (const auto& item : doc) {
    Rule rule;
    rule.leaf = item.at("leaf").get<std::size_t>();
    rule.label = parse_outcome(item.at("label").get<std::string>());
    for (const auto& c : item.at("if")) {
      const auto op = c.at("op").get<std::string>();
      if (op != "<=" && op != ">") throw ParseError("unknown rule operator '" + op + "'");
      rule.constraints.push_back(
          {c.at("feature").get<std::size_t>(), c.at("threshold").get<double>(), op == "<="});
    }
    rules.push_back(std::move(rule));
  }
  return rules;
}

}  // namespace trustmon::prophecy
