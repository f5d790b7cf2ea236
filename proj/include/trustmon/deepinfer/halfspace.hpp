#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <string_view>
#include <vector>

#include "trustmon/model/network.hpp"

namespace trustmon::deepinfer {

enum class Relation { kGe, kLe };

std::string_view to_string(Relation relation);
Relation parse_relation(std::string_view text);
Relation flipped(Relation relation);

/// The set { x : w . x (>= | <=) c }.
struct Halfspace {
  Eigen::VectorXd weights;
  double offset = 0.0;
  Relation relation = Relation::kGe;

  /// Signed distance in units of w: positive inside, negative outside.
  double slack(const Eigen::VectorXd& x) const;
  bool satisfied(const Eigen::VectorXd& x) const;
  /// The same set described by (lambda w, lambda c); lambda must be positive.
  Halfspace scaled(double lambda) const;
};

/// A bound on one feature, or a vacuous condition every value satisfies.
struct FeaturePrecondition {
  std::size_t feature_index = 0;
  double bound = 0.0;
  Relation relation = Relation::kGe;
  bool vacuous = false;

  bool satisfied(double value) const;
};

/// Halfspace over the final layer's pre-activation values equivalent to the
/// head saying "predicted with probability at least p".
///
/// Vector heads use the margin z_pred - z_runner_up >= log(p / (1 - p)).
/// Scalar sigmoid heads use z >= logit(p) for class 1 and z <= -logit(p) for
/// class 0; scalar linear heads use z >= p and z <= 1 - p.
Halfspace output_postcondition(const model::Network& net, std::size_t predicted,
                               std::size_t runner_up, double p);

/// Pulls `post` (over the final pre-activation) back to the values entering
/// layer `anchor_layer`. Dense layers map (w, c) to (W^T w, c - w . b); relu
/// and flatten are treated as identity. Throws AnchorOutOfRange when the anchor
/// is not a layer index and UnsupportedActivation when a hidden sigmoid or
/// softmax lies in between.
Halfspace wp_backward(const model::Network& net, const Halfspace& post, std::size_t anchor_layer);

/// True when the pullback to `anchor_layer` crosses a relu, i.e. the result
/// is an approximation rather than exact.
bool wp_is_approximate(const model::Network& net, std::size_t anchor_layer);

/// Lowest anchor from which every hidden layer up to the head can be pulled
/// back through.
std::size_t default_anchor_layer(const model::Network& net);

/// One bound per feature by fixing all other features at their means:
/// bound_j = (c - sum_{k != j} w_k mu_k) / w_j, relation flipped for w_j < 0.
std::vector<FeaturePrecondition> derive_feature_preconditions(const Halfspace& hs,
                                                              const Eigen::VectorXd& means);

}  // namespace trustmon::deepinfer
