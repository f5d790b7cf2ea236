#include "trustmon/prophecy/prophecy.hpp"

#include "trustmon/error.hpp"
#include "trustmon/json_util.hpp"

namespace trustmon::prophecy {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;
constexpr std::string_view kWhere = "prophecy config";

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace

ProphecyConfig ProphecyConfig::from_json(const json& doc) {
  ProphecyConfig config;
  if (doc.is_null()) return config;
  check_config_keys(doc,
                    {"only_activation_layers", "only_dense_layers", "random_state", "skip_rules",
                     "max_depth", "min_samples_leaf", "balanced"},
                    kWhere);
  config.only_activation_layers =
      config_value(doc, "only_activation_layers", config.only_activation_layers, kWhere);
  config.only_dense_layers =
      config_value(doc, "only_dense_layers", config.only_dense_layers, kWhere);
  config.random_state = config_value(doc, "random_state", config.random_state, kWhere);
  config.skip_rules = config_value(doc, "skip_rules", config.skip_rules, kWhere);
  if (auto it = doc.find("max_depth"); it != doc.end() && !it->is_null()) {
    config.max_depth = config_value<std::size_t>(doc, "max_depth", 0, kWhere);
    if (*config.max_depth == 0) throw ConfigError("max_depth must be positive or null");
  }
  config.min_samples_leaf = config_value(doc, "min_samples_leaf", config.min_samples_leaf, kWhere);
  if (config.min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be positive");
  config.balanced = config_value(doc, "balanced", config.balanced, kWhere);
  return config;
}

ordered_json ProphecyConfig::to_json() const {
  return {{"only_activation_layers", only_activation_layers},
          {"only_dense_layers", only_dense_layers},
          {"random_state", random_state},
          {"skip_rules", skip_rules},
          {"max_depth", max_depth ? ordered_json(*max_depth) : ordered_json(nullptr)},
          {"min_samples_leaf", min_samples_leaf},
          {"balanced", balanced}};
}

std::vector<Outcome> pass_fail_labels(const model::Network& net, const data::Dataset& ds) {
  std::vector<Outcome> out;
  out.reserve(ds.size());
  for (std::size_t r = 0; r < ds.size(); ++r) {
    const auto trace = model::forward_trace(net, ds.row(r));
    out.push_back(static_cast<int>(trace.predicted_class) == ds.labels[r] ? Outcome::kPass
                                                                          : Outcome::kFail);
  }
  return out;
}

ProphecyArtifacts analyze(const model::Network& net, const data::Dataset& analysis,
                          const ProphecyConfig& config) {
  if (analysis.size() == 0) throw EmptyTrainingSet("prophecy needs analysis rows");
  ProphecyArtifacts art;
  art.config = config;
  art.selected_layers = model::select_layers(net, config.layer_filter());
  if (art.selected_layers.empty()) throw NoUsableLayers("the layer filter selects no layers");

  const auto acts = model::collect_activations(net, analysis.features, art.selected_layers);
  std::vector<Outcome> labels;
  labels.reserve(analysis.size());
  for (std::size_t r = 0; r < analysis.size(); ++r) {
    labels.push_back(acts.predictions[r] == analysis.labels[r] ? Outcome::kPass : Outcome::kFail);
  }

  std::vector<std::size_t> rows(analysis.size());
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
  if (config.balanced) {
    std::vector<int> flags(labels.size());
    for (std::size_t r = 0; r < labels.size(); ++r) flags[r] = static_cast<int>(labels[r]);
    try {
      rows = data::balanced_rows(flags, 2, config.random_state);
    } catch (const EmptyClass&) {
      throw EmptyTrainingSet("balancing needs both pass and fail rows");
    }
  }
  std::vector<Outcome> y;
  y.reserve(rows.size());
  for (std::size_t r : rows) y.push_back(labels[r]);
  art.training_rows = rows.size();

  for (std::size_t layer : art.selected_layers) {
    const Eigen::MatrixXd& all = acts.by_layer.at(layer);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), all.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      x.row(static_cast<Eigen::Index>(i)) = all.row(static_cast<Eigen::Index>(rows[i]));
    }
    auto tree = fit_tree(x, y, config.tree_params());
    if (!config.skip_rules) art.rules.emplace(layer, extract_rules(tree));
    art.trees.emplace(layer, std::move(tree));
  }
  return art;
}

Verdict vote_verdict(const Votes& votes) {
  if (votes.fail > votes.pass) return Verdict::kIncorrect;
  if (votes.pass > votes.fail) return Verdict::kCorrect;
  return Verdict::kUncertain;
}

Votes collect_votes(const ProphecyArtifacts& art, const model::ActivationTrace& trace) {
  Votes votes;
  for (std::size_t layer : art.selected_layers) {
    const auto x = as_span(trace.per_layer.at(layer));
    const Outcome outcome = art.config.skip_rules ? art.trees.at(layer).predict(x)
                                                  : evaluate_rules(art.rules.at(layer), x);
    (outcome == Outcome::kPass ? votes.pass : votes.fail)++;
  }
  return votes;
}

Verdict infer(const ProphecyArtifacts& art, const model::ActivationTrace& trace) {
  return vote_verdict(collect_votes(art, trace));
}

Verdict infer(const ProphecyArtifacts& art, const model::Network& net, const Eigen::VectorXd& x) {
  return infer(art, model::forward_trace(net, x));
}

std::string serialize(const ProphecyArtifacts& art) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["tool"] = "prophecy";
  doc["config"] = art.config.to_json();
  doc["selected_layers"] = art.selected_layers;
  doc["training_rows"] = art.training_rows;
  ordered_json layers = ordered_json::array();
  for (std::size_t layer : art.selected_layers) {
    ordered_json item;
    item["layer"] = layer;
    item["tree"] = tree_to_json(art.trees.at(layer));
    if (!art.config.skip_rules) item["rules"] = rules_to_json(art.rules.at(layer));
    layers.push_back(std::move(item));
  }
  doc["layers"] = std::move(layers);
  return doc.dump() + "\n";
}

ProphecyArtifacts deserialize(std::string_view text) {
  ProphecyArtifacts art;
  try {
    const json doc = json::parse(text);
    if (doc.at("format_version").get<int>() != kFormatVersion ||
        doc.at("tool").get<std::string>() != "prophecy") {
      throw ParseError("not a version 1 prophecy artifact");
    }
    art.config = ProphecyConfig::from_json(doc.at("config"));
    art.selected_layers = doc.at("selected_layers").get<std::vector<std::size_t>>();
    art.training_rows = doc.at("training_rows").get<std::size_t>();
    for (const auto& item : doc.at("layers")) {
      const auto layer = item.at("layer").get<std::size_t>();
      art.trees.emplace(layer, tree_from_json(item.at("tree")));
      if (!art.config.skip_rules) art.rules.emplace(layer, rules_from_json(item.at("rules")));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed prophecy artifact: ") + e.what());
  }
  if (art.selected_layers.empty()) throw ParseError("prophecy artifact selects no layers");
  for (std::size_t layer : art.selected_layers) {
    if (!art.trees.count(layer)) {
      throw ParseError("prophecy artifact has no tree for layer " + std::to_string(layer));
    }
  }
  return art;
}

}  // namespace trustmon::prophecy
