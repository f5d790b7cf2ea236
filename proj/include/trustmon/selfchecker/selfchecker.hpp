#pragma once

#include <cstddef>
#include <json.hpp>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "trustmon/data/dataset.hpp"
#include "trustmon/model/network.hpp"
#include "trustmon/selfchecker/kde.hpp"
#include "trustmon/verdict.hpp"

namespace trustmon::selfchecker {

struct SelfCheckerConfig {
  double var_threshold = 1e-5;
  bool only_activation_layers = true;
  bool only_dense_layers = true;
  std::size_t batch_size = 128;
  double alpha = 0.01;
  double covariance_alpha = 0.1;

  /// Accepts var_threshold, only_activation_layers, only_dense_layers,
  /// batch_size, alpha and covariance_alpha; rejects anything else.
  static SelfCheckerConfig from_json(const nlohmann::json& doc);
  nlohmann::ordered_json to_json() const;

  model::LayerFilter layer_filter() const { return {only_activation_layers, only_dense_layers}; }
  DensityOptions density_options() const { return {var_threshold, alpha, covariance_alpha}; }
};

/// Key of one density cell: (layer index, class).
using CellKey = std::pair<std::size_t, std::size_t>;

struct SelfCheckerArtifacts {
  SelfCheckerConfig config;
  std::size_t class_count = 0;
  std::map<CellKey, DensityModel> kdes;
  std::vector<std::size_t> candidate_layers;
  std::vector<std::size_t> selected_layers;
  double validation_f1 = 0.0;
};

/// Fits per-(layer, class) KDEs on training activations grouped by ground
/// truth, then picks layers greedily by validation alarm F1.
///
/// A cell whose data is degenerate is left out; it scores -inf at inference.
/// Selection starts empty and repeatedly adds the layer that most improves
/// F1 (lowest index on ties), stopping when nothing improves. If no layer
/// ever improves F1 (for instance, a validation set without errors) every
/// usable layer is kept.
SelfCheckerArtifacts analyze(const model::Network& net, const data::Dataset& train,
                             const data::Dataset& val, const SelfCheckerConfig& config);

/// Argmax over per-class log densities; lowest class on ties.
std::size_t infer_layer_class(std::span<const double> log_densities);

/// Class inferred at every selected layer.
std::vector<std::size_t> layer_classes(const SelfCheckerArtifacts& art,
                                       const model::ActivationTrace& trace);

/// Incorrect when strictly more than half the layers disagree with the
/// prediction, Correct otherwise.
Verdict majority_alarm(std::span<const std::size_t> inferred, std::size_t predicted);

Verdict infer(const SelfCheckerArtifacts& art, const model::ActivationTrace& trace);
Verdict infer(const SelfCheckerArtifacts& art, const model::Network& net,
              const Eigen::VectorXd& x);

std::string serialize(const SelfCheckerArtifacts& art);
SelfCheckerArtifacts deserialize(std::string_view text);

}  // namespace trustmon::selfchecker
