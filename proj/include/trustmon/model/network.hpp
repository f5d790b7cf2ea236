#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace trustmon::model {

enum class LayerKind { kDense, kFlatten };
enum class Activation { kLinear, kRelu, kSigmoid, kSoftmax };

std::string_view to_string(Activation activation);
std::string_view to_string(LayerKind kind);

/// One stage of a feedforward classifier.
///
/// Dense layers compute activation(W * x + b) with W stored as an
/// out_width x in_width matrix. Flatten layers pass their input through
/// unchanged; they exist so heads exported from vision models can be loaded.
struct Layer {
  LayerKind kind = LayerKind::kDense;
  Activation activation = Activation::kLinear;
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;

  static Layer dense(Eigen::MatrixXd weights, Eigen::VectorXd bias,
                     Activation activation);
  static Layer flatten();

  bool is_dense() const { return kind == LayerKind::kDense; }
  bool has_nonlinear_activation() const {
    return is_dense() && activation != Activation::kLinear;
  }
};

/// An immutable, validated dense/flatten classifier.
///
/// Construction checks that layer widths chain, that every weight is finite
/// and that the head matches class_count. Scalar heads (width 1) are binary
/// classifiers thresholded at 0.5.
class Network {
 public:
  Network(std::size_t input_dim, std::size_t class_count,
          std::vector<Layer> layers);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t class_count() const { return class_count_; }
  std::size_t layer_count() const { return layers_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t index) const { return layers_.at(index); }

  std::size_t input_width(std::size_t layer) const;
  std::size_t output_width(std::size_t layer) const;
  std::size_t output_dim() const { return output_width(layers_.size() - 1); }
  bool has_scalar_head() const { return output_dim() == 1; }

  std::size_t parameter_count() const;

 private:
  std::size_t input_dim_;
  std::size_t class_count_;
  std::vector<Layer> layers_;
  std::vector<std::size_t> widths_;  // widths_[i] = input width of layer i
};

/// Post-activation values of every layer for one input.
struct ActivationTrace {
  std::vector<Eigen::VectorXd> per_layer;
  std::size_t predicted_class = 0;

  const Eigen::VectorXd& output() const { return per_layer.back(); }
};

/// Which layers a detector should look at.
///
/// only_activation_layers keeps dense layers with a nonlinear activation,
/// only_dense_layers keeps dense layers. Setting both keeps dense layers
/// coupled with a nonlinear activation; setting neither keeps everything.
struct LayerFilter {
  bool only_activation_layers = false;
  bool only_dense_layers = false;
};

Network load_model(const std::filesystem::path& path);
Network parse_model(std::string_view json_text);
std::string serialize_model(const Network& net);
void save_model(const Network& net, const std::filesystem::path& path);

ActivationTrace forward_trace(const Network& net, std::span<const double> x);
ActivationTrace forward_trace(const Network& net, const Eigen::VectorXd& x);

/// Class decided by an output vector: argmax (lowest index on ties) for
/// vector heads, 1[output >= 0.5] for scalar heads.
std::size_t decide_class(const Eigen::VectorXd& output);

/// Values entering layer `layer`: the network input for layer 0, otherwise
/// the previous layer's post-activation values.
const Eigen::VectorXd& layer_input(const ActivationTrace& trace,
                                   const Eigen::VectorXd& x, std::size_t layer);

std::vector<std::size_t> select_layers(const Network& net,
                                       const LayerFilter& filter);

Eigen::VectorXd softmax(const Eigen::VectorXd& z);

/// Post-activation values of selected layers for many inputs.
struct LayerActivations {
  /// layer index -> (rows x layer width) matrix.
  std::map<std::size_t, Eigen::MatrixXd> by_layer;
  std::vector<int> predictions;
};

/// Runs forward_trace over every row of `inputs`, batch_size rows at a time,
/// keeping only the requested layers. Batching never changes the values.
LayerActivations collect_activations(const Network& net, const Eigen::MatrixXd& inputs,
                                     std::span<const std::size_t> layers,
                                     std::size_t batch_size = 128);

}  // namespace trustmon::model
