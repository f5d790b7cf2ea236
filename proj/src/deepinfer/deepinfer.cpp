#include "trustmon/deepinfer/deepinfer.hpp"

#include <algorithm>
#include <string>

#include "trustmon/error.hpp"
#include "trustmon/json_util.hpp"

namespace trustmon::deepinfer {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;
constexpr std::string_view kWhere = "deepinfer config";

std::vector<std::pair<std::size_t, std::size_t>> class_pairs(const model::Network& net) {
  if (net.has_scalar_head()) return {{0, 1}, {1, 0}};
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < net.output_dim(); ++a) {
    for (std::size_t b = 0; b < net.output_dim(); ++b) {
      if (a != b) pairs.emplace_back(a, b);
    }
  }
  return pairs;
}

std::vector<bool> violations_of(const ConditionSet& set, const Eigen::VectorXd& x) {
  std::vector<bool> violated(set.preconditions.size());
  for (std::size_t j = 0; j < set.preconditions.size(); ++j) {
    violated[j] = !set.preconditions[j].satisfied(x(static_cast<Eigen::Index>(j)));
  }
  return violated;
}

Eigen::VectorXd anchor_input(const model::Network& net, const Eigen::VectorXd& input,
                             std::size_t anchor, model::ActivationTrace& trace) {
  trace = model::forward_trace(net, input);
  return model::layer_input(trace, input, anchor);
}

}  // namespace

DeepInferConfig DeepInferConfig::from_json(const json& doc) {
  DeepInferConfig config;
  if (doc.is_null()) return config;
  check_config_keys(doc, {"condition", "prediction_interval"}, kWhere);
  const auto condition = config_value<std::string>(doc, "condition", ">=", kWhere);
  if (condition != ">=") throw ConfigError("condition must be \">=\", got \"" + condition + "\"");
  config.prediction_interval =
      config_value(doc, "prediction_interval", config.prediction_interval, kWhere);
  if (!(config.prediction_interval > 0.0 && config.prediction_interval < 1.0)) {
    throw ConfigError("prediction_interval must lie strictly between 0 and 1");
  }
  return config;
}

ordered_json DeepInferConfig::to_json() const {
  return {{"condition", std::string(deepinfer::to_string(condition))},
          {"prediction_interval", prediction_interval}};
}

const ConditionSet& DeepInferArtifacts::conditions_for(std::size_t predicted,
                                                       std::size_t runner_up) const {
  for (const auto& set : conditions) {
    if (set.predicted == predicted && set.runner_up == runner_up) return set;
  }
  throw DimensionError("no conditions for predicted class " + std::to_string(predicted) +
                       " against " + std::to_string(runner_up));
}

std::size_t runner_up_class(const Eigen::VectorXd& output, std::size_t predicted) {
  if (output.size() == 1) return predicted == 1 ? 0 : 1;
  std::size_t best = predicted == 0 ? 1 : 0;
  for (Eigen::Index c = 0; c < output.size(); ++c) {
    const auto k = static_cast<std::size_t>(c);
    if (k != predicted && output(c) > output(static_cast<Eigen::Index>(best))) best = k;
  }
  return best;
}

DeepInferArtifacts analyze(const model::Network& net, const data::Dataset& train,
                           const data::Dataset& val, const DeepInferConfig& config) {
  if (train.size() == 0) throw EmptyTrainingSet("deepinfer needs training rows for feature means");
  if (val.size() == 0) throw EmptyTrainingSet("deepinfer needs a nonempty validation set");

  DeepInferArtifacts art;
  art.config = config;
  art.anchor_layer = default_anchor_layer(net);
  art.approximate = wp_is_approximate(net, art.anchor_layer);

  const auto width = static_cast<Eigen::Index>(net.input_width(art.anchor_layer));
  art.feature_means = Eigen::VectorXd::Zero(width);
  model::ActivationTrace trace;
  for (std::size_t r = 0; r < train.size(); ++r) {
    art.feature_means += anchor_input(net, train.row(r), art.anchor_layer, trace);
  }
  art.feature_means /= static_cast<double>(train.size());

  for (const auto& [predicted, runner_up] : class_pairs(net)) {
    ConditionSet set;
    set.predicted = predicted;
    set.runner_up = runner_up;
    const Halfspace post =
        output_postcondition(net, predicted, runner_up, config.prediction_interval);
    set.halfspace = wp_backward(net, post, art.anchor_layer);
    set.preconditions = derive_feature_preconditions(set.halfspace, art.feature_means);
    set.thresholds = Eigen::VectorXd::Zero(width);
    art.conditions.push_back(std::move(set));
  }

  for (std::size_t r = 0; r < val.size(); ++r) {
    const Eigen::VectorXd x = anchor_input(net, val.row(r), art.anchor_layer, trace);
    const std::size_t predicted = trace.predicted_class;
    const std::size_t runner_up = runner_up_class(trace.output(), predicted);
    auto& set = *std::find_if(art.conditions.begin(), art.conditions.end(), [&](const auto& c) {
      return c.predicted == predicted && c.runner_up == runner_up;
    });
    const auto violated = violations_of(set, x);
    for (std::size_t j = 0; j < violated.size(); ++j) {
      if (violated[j]) set.thresholds(static_cast<Eigen::Index>(j)) += 1.0;
    }
    ++set.validation_count;
  }
  for (auto& set : art.conditions) {
    if (set.validation_count == 0) {
      set.thresholds.setConstant(0.5);
    } else {
      set.thresholds /= static_cast<double>(set.validation_count);
    }
  }
  return art;
}

InferResult decide(const std::vector<bool>& violated, const Eigen::VectorXd& thresholds) {
  if (static_cast<Eigen::Index>(violated.size()) != thresholds.size()) {
    throw DimensionError("violation flags do not match the thresholds");
  }
  InferResult result;
  std::size_t strong_violations = 0;
  std::size_t strong_satisfactions = 0;
  for (std::size_t j = 0; j < violated.size(); ++j) {
    const bool informative = thresholds(static_cast<Eigen::Index>(j)) < 0.5;
    if (violated[j]) {
      ++result.violations;
      if (informative) ++strong_violations;
    } else {
      ++result.satisfactions;
      if (informative) ++strong_satisfactions;
    }
  }
  if (strong_violations > strong_satisfactions) {
    result.verdict = Verdict::kIncorrect;
  } else if (strong_satisfactions > strong_violations) {
    result.verdict = Verdict::kCorrect;
  } else {
    result.verdict = Verdict::kUncertain;
  }
  return result;
}

InferResult infer(const DeepInferArtifacts& art, const Eigen::VectorXd& x, std::size_t predicted,
                  std::size_t runner_up) {
  if (x.size() != art.feature_means.size()) {
    throw DimensionError("expected " + std::to_string(art.feature_means.size()) +
                         " anchor values, got " + std::to_string(x.size()));
  }
  if (!x.allFinite()) throw DimensionError("anchor values must be finite");
  const ConditionSet& set = art.conditions_for(predicted, runner_up);
  return decide(violations_of(set, x), set.thresholds);
}

InferResult infer(const DeepInferArtifacts& art, const model::Network& net,
                  const Eigen::VectorXd& input) {
  model::ActivationTrace trace;
  const Eigen::VectorXd x = anchor_input(net, input, art.anchor_layer, trace);
  return infer(art, x, trace.predicted_class,
               runner_up_class(trace.output(), trace.predicted_class));
}

std::string serialize(const DeepInferArtifacts& art) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["tool"] = "deepinfer";
  doc["config"] = art.config.to_json();
  doc["anchor_layer"] = art.anchor_layer;
  doc["approximate"] = art.approximate;
  doc["feature_means"] = vector_to_json(art.feature_means);
  ordered_json sets = ordered_json::array();
  for (const auto& set : art.conditions) {
    ordered_json pres = ordered_json::array();
    for (const auto& pre : set.preconditions) {
      pres.push_back({{"feature", pre.feature_index},
                      {"vacuous", pre.vacuous},
                      {"relation", std::string(to_string(pre.relation))},
                      {"bound", pre.bound}});
    }
    sets.push_back({{"predicted", set.predicted},
                    {"runner_up", set.runner_up},
                    {"halfspace",
                     {{"weights", vector_to_json(set.halfspace.weights)},
                      {"relation", std::string(to_string(set.halfspace.relation))},
                      {"offset", set.halfspace.offset}}},
                    {"preconditions", std::move(pres)},
                    {"thresholds", vector_to_json(set.thresholds)},
                    {"validation_count", set.validation_count}});
  }
  doc["conditions"] = std::move(sets);
  return doc.dump() + "\n";
}

DeepInferArtifacts deserialize(std::string_view text) {
  DeepInferArtifacts art;
  try {
    const json doc = json::parse(text);
    if (doc.at("format_version").get<int>() != kFormatVersion ||
        doc.at("tool").get<std::string>() != "deepinfer") {
      throw ParseError("not a version 1 deepinfer artifact");
    }
    art.config = DeepInferConfig::from_json(doc.at("config"));
    art.anchor_layer = doc.at("anchor_layer").get<std::size_t>();
    art.approximate = doc.at("approximate").get<bool>();
    art.feature_means = vector_from_json(doc.at("feature_means"));
    for (const auto& item : doc.at("conditions")) {
      ConditionSet set;
      set.predicted = item.at("predicted").get<std::size_t>();
      set.runner_up = item.at("runner_up").get<std::size_t>();
      const auto& hs = item.at("halfspace");
      set.halfspace.weights = vector_from_json(hs.at("weights"));
      set.halfspace.relation = parse_relation(hs.at("relation").get<std::string>());
      set.halfspace.offset = hs.at("offset").get<double>();
      for (const auto& p : item.at("preconditions")) {
        FeaturePrecondition pre;
        pre.feature_index = p.at("feature").get<std::size_t>();
        pre.vacuous = p.at("vacuous").get<bool>();
        pre.relation = parse_relation(p.at("relation").get<std::string>());
        pre.bound = p.at("bound").get<double>();
        set.preconditions.push_back(pre);
      }
      set.thresholds = vector_from_json(item.at("thresholds"));
      set.validation_count = item.at("validation_count").get<std::size_t>();
      if (set.preconditions.size() != art.feature_count() ||
          static_cast<std::size_t>(set.thresholds.size()) != art.feature_count()) {
        throw ParseError("deepinfer condition set does not cover every feature");
      }
      art.conditions.push_back(std::move(set));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed deepinfer artifact: ") + e.what());
  }
  return art;
}

}  // namespace trustmon::deepinfer
