#include "trustmon/selfchecker/selfchecker.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include "trustmon/error.hpp"
#include "trustmon/json_util.hpp"
#include "trustmon/metrics/metrics.hpp"

namespace trustmon::selfchecker {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;
constexpr std::string_view kWhere = "selfchecker config";

struct ValidationTable {
  // inferred[layer position][instance]
  std::vector<std::vector<std::size_t>> inferred;
  std::vector<int> predictions;
  std::vector<bool> misclassified;
};

double alarm_f1(const ValidationTable& table, std::span<const std::size_t> positions) {
  metrics::ConfusionMatrix cm;
  std::vector<std::size_t> votes(positions.size());
  for (std::size_t i = 0; i < table.predictions.size(); ++i) {
    for (std::size_t k = 0; k < positions.size(); ++k) votes[k] = table.inferred[positions[k]][i];
    const bool alarm = majority_alarm(votes, static_cast<std::size_t>(table.predictions[i])) ==
                       Verdict::kIncorrect;
    const bool wrong = table.misclassified[i];
    if (alarm && wrong) {
      ++cm.tp;
    } else if (alarm) {
      ++cm.fp;
    } else if (wrong) {
      ++cm.fn;
    } else {
      ++cm.tn;
    }
  }
  return cm.total() == 0 ? 0.0 : metrics::compute_metrics(cm).f1;
}

std::vector<double> class_log_densities(const SelfCheckerArtifacts& art, std::size_t layer,
                                        const Eigen::VectorXd& activation) {
  std::vector<double> scores(art.class_count, -std::numeric_limits<double>::infinity());
  for (std::size_t c = 0; c < art.class_count; ++c) {
    auto it = art.kdes.find({layer, c});
    if (it != art.kdes.end()) scores[c] = estimate_log_density(it->second, activation);
  }
  return scores;
}

}  // namespace

SelfCheckerConfig SelfCheckerConfig::from_json(const json& doc) {
  SelfCheckerConfig config;
  if (doc.is_null()) return config;
  check_config_keys(doc,
                    {"var_threshold", "only_activation_layers", "only_dense_layers",
                     "batch_size", "alpha", "covariance_alpha"},
                    kWhere);
  config.var_threshold = config_value(doc, "var_threshold", config.var_threshold, kWhere);
  config.only_activation_layers =
      config_value(doc, "only_activation_layers", config.only_activation_layers, kWhere);
  config.only_dense_layers =
      config_value(doc, "only_dense_layers", config.only_dense_layers, kWhere);
  config.batch_size = config_value(doc, "batch_size", config.batch_size, kWhere);
  config.alpha = config_value(doc, "alpha", config.alpha, kWhere);
  config.covariance_alpha = config_value(doc, "covariance_alpha", config.covariance_alpha, kWhere);
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  if (config.var_threshold < 0 || config.alpha < 0 || config.covariance_alpha < 0) {
    throw ConfigError("var_threshold, alpha and covariance_alpha must be non-negative");
  }
  return config;
}

ordered_json SelfCheckerConfig::to_json() const {
  return {{"var_threshold", var_threshold},
          {"only_activation_layers", only_activation_layers},
          {"only_dense_layers", only_dense_layers},
          {"batch_size", batch_size},
          {"alpha", alpha},
          {"covariance_alpha", covariance_alpha}};
}

std::size_t infer_layer_class(std::span<const double> log_densities) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < log_densities.size(); ++c) {
    if (log_densities[c] > log_densities[best]) best = c;
  }
  return best;
}

Verdict majority_alarm(std::span<const std::size_t> inferred, std::size_t predicted) {
  const auto disagreeing = static_cast<std::size_t>(
      std::count_if(inferred.begin(), inferred.end(),
                    [predicted](std::size_t c) { return c != predicted; }));
  return 2 * disagreeing > inferred.size() ? Verdict::kIncorrect : Verdict::kCorrect;
}

SelfCheckerArtifacts analyze(const model::Network& net, const data::Dataset& train,
                             const data::Dataset& val, const SelfCheckerConfig& config) {
  SelfCheckerArtifacts art;
  art.config = config;
  art.class_count = net.class_count();
  art.candidate_layers = model::select_layers(net, config.layer_filter());
  if (art.candidate_layers.empty()) {
    throw NoUsableLayers("the layer filter selects no layers");
  }

  const auto train_acts =
      model::collect_activations(net, train.features, art.candidate_layers, config.batch_size);
  std::vector<std::vector<Eigen::Index>> rows_of_class(art.class_count);
  for (std::size_t r = 0; r < train.size(); ++r) {
    const auto label = static_cast<std::size_t>(train.labels[r]);
    if (label < art.class_count) rows_of_class[label].push_back(static_cast<Eigen::Index>(r));
  }

  std::vector<std::size_t> usable;
  for (std::size_t layer : art.candidate_layers) {
    const Eigen::MatrixXd& acts = train_acts.by_layer.at(layer);
    bool any_cell = false;
    for (std::size_t c = 0; c < art.class_count; ++c) {
      const auto& rows = rows_of_class[c];
      Eigen::MatrixXd samples(static_cast<Eigen::Index>(rows.size()), acts.cols());
      for (std::size_t i = 0; i < rows.size(); ++i) {
        samples.row(static_cast<Eigen::Index>(i)) = acts.row(rows[i]);
      }
      try {
        art.kdes.emplace(CellKey{layer, c}, fit_density(samples, config.density_options()));
        any_cell = true;
      } catch (const DegenerateData&) {
        // Cell stays absent and scores -inf for this class.
      }
    }
    if (any_cell) usable.push_back(layer);
  }
  if (usable.empty()) throw NoUsableLayers("no candidate layer has a fitted density");

  ValidationTable table;
  const auto val_acts = model::collect_activations(net, val.features, usable, config.batch_size);
  table.predictions = val_acts.predictions;
  for (std::size_t i = 0; i < val.size(); ++i) {
    table.misclassified.push_back(table.predictions[i] != val.labels[i]);
  }
  for (std::size_t layer : usable) {
    const Eigen::MatrixXd& acts = val_acts.by_layer.at(layer);
    std::vector<std::size_t> column(val.size());
    for (std::size_t i = 0; i < val.size(); ++i) {
      const auto scores =
          class_log_densities(art, layer, acts.row(static_cast<Eigen::Index>(i)).transpose());
      column[i] = infer_layer_class(scores);
    }
    table.inferred.push_back(std::move(column));
  }

  std::vector<std::size_t> chosen;  // positions into `usable`
  std::vector<bool> taken(usable.size(), false);
  double best_f1 = 0.0;
  while (true) {
    std::optional<std::size_t> best_candidate;
    double candidate_f1 = best_f1;
    for (std::size_t k = 0; k < usable.size(); ++k) {
      if (taken[k]) continue;
      auto trial = chosen;
      trial.push_back(k);
      const double f1 = alarm_f1(table, trial);
      if (f1 > candidate_f1) {
        candidate_f1 = f1;
        best_candidate = k;
      }
    }
    if (!best_candidate) break;
    taken[*best_candidate] = true;
    chosen.push_back(*best_candidate);
    best_f1 = candidate_f1;
  }
  if (chosen.empty()) {
    for (std::size_t k = 0; k < usable.size(); ++k) chosen.push_back(k);
    best_f1 = val.size() ? alarm_f1(table, chosen) : 0.0;
  }
  std::sort(chosen.begin(), chosen.end());
  for (std::size_t k : chosen) art.selected_layers.push_back(usable[k]);
  art.validation_f1 = best_f1;
  return art;
}

std::vector<std::size_t> layer_classes(const SelfCheckerArtifacts& art,
                                       const model::ActivationTrace& trace) {
  std::vector<std::size_t> inferred;
  inferred.reserve(art.selected_layers.size());
  for (std::size_t layer : art.selected_layers) {
    inferred.push_back(
        infer_layer_class(class_log_densities(art, layer, trace.per_layer.at(layer))));
  }
  return inferred;
}

Verdict infer(const SelfCheckerArtifacts& art, const model::ActivationTrace& trace) {
  return majority_alarm(layer_classes(art, trace), trace.predicted_class);
}

Verdict infer(const SelfCheckerArtifacts& art, const model::Network& net,
              const Eigen::VectorXd& x) {
  return infer(art, model::forward_trace(net, x));
}

std::string serialize(const SelfCheckerArtifacts& art) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["tool"] = "selfchecker";
  doc["config"] = art.config.to_json();
  doc["class_count"] = art.class_count;
  doc["candidate_layers"] = art.candidate_layers;
  doc["selected_layers"] = art.selected_layers;
  doc["validation_f1"] = art.validation_f1;
  ordered_json cells = ordered_json::array();
  for (const auto& [key, kde] : art.kdes) {
    ordered_json cell;
    cell["layer"] = key.first;
    cell["class"] = key.second;
    cell["input_width"] = kde.input_width;
    cell["kept_dims"] = kde.kept_dims;
    cell["bandwidth_factor"] = kde.bandwidth_factor;
    cell["regularization"] = kde.regularization;
    cell["cholesky"] = matrix_to_json(kde.cholesky);
    cell["samples"] = matrix_to_json(kde.samples);
    cells.push_back(std::move(cell));
  }
  doc["cells"] = std::move(cells);
  return doc.dump() + "\n";
}

SelfCheckerArtifacts deserialize(std::string_view text) {
  SelfCheckerArtifacts art;
  try {
    const json doc = json::parse(text);
    if (doc.at("format_version").get<int>() != kFormatVersion ||
        doc.at("tool").get<std::string>() != "selfchecker") {
      throw ParseError("not a version 1 selfchecker artifact");
    }
    art.config = SelfCheckerConfig::from_json(doc.at("config"));
    art.class_count = doc.at("class_count").get<std::size_t>();
    art.candidate_layers = doc.at("candidate_layers").get<std::vector<std::size_t>>();
    art.selected_layers = doc.at("selected_layers").get<std::vector<std::size_t>>();
    art.validation_f1 = doc.at("validation_f1").get<double>();
    for (const auto& cell : doc.at("cells")) {
      DensityModel kde;
      kde.input_width = cell.at("input_width").get<std::size_t>();
      kde.kept_dims = cell.at("kept_dims").get<std::vector<std::size_t>>();
      const auto d = static_cast<Eigen::Index>(kde.kept_dims.size());
      kde.bandwidth_factor = cell.at("bandwidth_factor").get<double>();
      kde.regularization = cell.at("regularization").get<double>();
      kde.cholesky = matrix_from_json(cell.at("cholesky"), d);
      kde.samples = matrix_from_json(cell.at("samples"), d);
      kde.finalize();
      art.kdes.emplace(CellKey{cell.at("layer").get<std::size_t>(),
                               cell.at("class").get<std::size_t>()},
                       std::move(kde));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed selfchecker artifact: ") + e.what());
  }
  if (art.selected_layers.empty()) throw ParseError("selfchecker artifact selects no layers");
  return art;
}

}  // namespace trustmon::selfchecker
