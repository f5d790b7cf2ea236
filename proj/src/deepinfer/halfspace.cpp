#include "trustmon/deepinfer/halfspace.hpp"

#include <cmath>
#include <string>

#include "trustmon/error.hpp"

namespace trustmon::deepinfer {

std::string_view to_string(Relation relation) { return relation == Relation::kGe ? ">=" : "<="; }

Relation parse_relation(std::string_view text) {
  if (text == ">=") return Relation::kGe;
  if (text == "<=") return Relation::kLe;
  throw ParseError("unknown relation '" + std::string(text) + "'");
}

Relation flipped(Relation relation) {
  return relation == Relation::kGe ? Relation::kLe : Relation::kGe;
}

double Halfspace::slack(const Eigen::VectorXd& x) const {
  if (x.size() != weights.size()) {
    throw DimensionError("halfspace over " + std::to_string(weights.size()) +
                         " values given " + std::to_string(x.size()));
  }
  const double lhs = weights.dot(x);
  return relation == Relation::kGe ? lhs - offset : offset - lhs;
}

bool Halfspace::satisfied(const Eigen::VectorXd& x) const { return slack(x) >= 0.0; }

Halfspace Halfspace::scaled(double lambda) const {
  if (!(lambda > 0.0)) throw DimensionError("halfspace scale must be positive");
  return {weights * lambda, offset * lambda, relation};
}

bool FeaturePrecondition::satisfied(double value) const {
  if (vacuous) return true;
  return relation == Relation::kGe ? value >= bound : value <= bound;
}

Halfspace output_postcondition(const model::Network& net, std::size_t predicted,
                               std::size_t runner_up, double p) {
  const model::Layer& head = net.layers().back();
  const auto width = static_cast<Eigen::Index>(net.output_dim());
  Halfspace post{Eigen::VectorXd::Zero(width), 0.0, Relation::kGe};
  const double log_odds = std::log(p / (1.0 - p));

  if (net.has_scalar_head()) {
    post.weights(0) = 1.0;
    const bool linear = head.activation == model::Activation::kLinear;
    if (predicted == 1) {
      post.offset = linear ? p : log_odds;
    } else {
      post.relation = Relation::kLe;
      post.offset = linear ? 1.0 - p : -log_odds;
    }
    return post;
  }

  if (predicted >= net.output_dim() || runner_up >= net.output_dim() || predicted == runner_up) {
    throw DimensionError("bad class pair for the output postcondition");
  }
  post.weights(static_cast<Eigen::Index>(predicted)) = 1.0;
  post.weights(static_cast<Eigen::Index>(runner_up)) = -1.0;
  post.offset = log_odds;
  return post;
}

Halfspace wp_backward(const model::Network& net, const Halfspace& post, std::size_t anchor_layer) {
  const std::size_t last = net.layers().size() - 1;
  if (anchor_layer > last) {
    throw AnchorOutOfRange("anchor layer " + std::to_string(anchor_layer) + " but the network has " +
                           std::to_string(last + 1) + " layers");
  }
  if (post.weights.size() != static_cast<Eigen::Index>(net.output_dim())) {
    throw DimensionError("postcondition width does not match the output layer");
  }

  Halfspace hs = post;
  for (std::size_t i = last + 1; i-- > anchor_layer;) {
    const model::Layer& layer = net.layer(i);
    if (i != last && (layer.activation == model::Activation::kSigmoid ||
                      layer.activation == model::Activation::kSoftmax) &&
        layer.is_dense()) {
      throw UnsupportedActivation("layer " + std::to_string(i) + " has a " +
                                  std::string(model::to_string(layer.activation)) +
                                  " activation; move the anchor past it");
    }
    if (!layer.is_dense()) continue;
    hs.offset -= hs.weights.dot(layer.bias);
    hs.weights = layer.weights.transpose() * hs.weights;
  }
  return hs;
}

bool wp_is_approximate(const model::Network& net, std::size_t anchor_layer) {
  const std::size_t last = net.layers().size() - 1;
  for (std::size_t i = anchor_layer; i < last; ++i) {
    const model::Layer& layer = net.layer(i);
    if (layer.is_dense() && layer.activation == model::Activation::kRelu) return true;
  }
  return false;
}

std::size_t default_anchor_layer(const model::Network& net) {
  std::size_t anchor = 0;
  const std::size_t last = net.layers().size() - 1;
  for (std::size_t i = 0; i < last; ++i) {
    const model::Layer& layer = net.layer(i);
    if (layer.is_dense() && (layer.activation == model::Activation::kSigmoid ||
                             layer.activation == model::Activation::kSoftmax)) {
      anchor = i + 1;
    }
  }
  return anchor;
}

std::vector<FeaturePrecondition> derive_feature_preconditions(const Halfspace& hs,
                                                              const Eigen::VectorXd& means) {
  if (means.size() != hs.weights.size()) {
    throw DimensionError("feature means do not match the halfspace width");
  }
  std::vector<FeaturePrecondition> out;
  out.reserve(static_cast<std::size_t>(hs.weights.size()));
  for (Eigen::Index j = 0; j < hs.weights.size(); ++j) {
    FeaturePrecondition pre;
    pre.feature_index = static_cast<std::size_t>(j);
    const double w = hs.weights(j);
    if (w == 0.0) {
      pre.vacuous = true;
    } else {
      double others = 0.0;
      for (Eigen::Index k = 0; k < hs.weights.size(); ++k) {
        if (k != j) others += hs.weights(k) * means(k);
      }
      pre.bound = (hs.offset - others) / w;
      pre.relation = w < 0.0 ? flipped(hs.relation) : hs.relation;
    }
    out.push_back(pre);
  }
  return out;
}

}  // namespace trustmon::deepinfer
