#include "trustmon/model/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "trustmon/error.hpp"

namespace trustmon::model {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kFormatVersion = 1;

Activation parse_activation(const std::string& name) {
  if (name == "linear") return Activation::kLinear;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  if (name == "softmax") return Activation::kSoftmax;
  throw ParseError("unknown activation '" + name + "'");
}

void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, value] : object.items()) {
    if (!allowed.contains(key)) {
      throw ParseError("unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T required(const json& object, const char* key, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) {
    throw ParseError("missing key '" + std::string(key) + "' in " + where);
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError("bad value for '" + std::string(key) + "' in " + where +
                     ": " + e.what());
  }
}

double as_number(const json& value, const std::string& where) {
  if (!value.is_number()) throw ParseError("non-numeric entry in " + where);
  return value.get<double>();
}

Layer parse_layer(const json& spec, std::size_t index) {
  const std::string where = "layer " + std::to_string(index);
  if (!spec.is_object()) throw ParseError(where + " is not an object");
  const auto kind = required<std::string>(spec, "kind", where);

  if (kind == "flatten") {
    reject_unknown_keys(spec, {"kind"}, where);
    return Layer::flatten();
  }
  if (kind != "dense") {
    throw UnsupportedLayer(where + " has kind '" + kind +
                           "'; only dense and flatten layers are supported");
  }
  reject_unknown_keys(spec, {"kind", "activation", "weights", "bias"}, where);

  const auto activation =
      parse_activation(required<std::string>(spec, "activation", where));
  const json& rows = spec.at("weights");
  const json& bias = spec.at("bias");
  if (!rows.is_array() || rows.empty() || !bias.is_array()) {
    throw ParseError(where + ": weights must be a non-empty matrix and bias a vector");
  }
  const std::size_t out = rows.size();
  if (!rows[0].is_array() || rows[0].empty()) {
    throw ParseError(where + ": weight rows must be non-empty arrays");
  }
  const std::size_t in = rows[0].size();

  Eigen::MatrixXd weights(out, in);
  for (std::size_t r = 0; r < out; ++r) {
    if (!rows[r].is_array() || rows[r].size() != in) {
      throw ShapeError(index, "weight row " + std::to_string(r) +
                                  " has a different width than row 0");
    }
    for (std::size_t c = 0; c < in; ++c) {
      weights(r, c) = as_number(rows[r][c], where);
    }
  }
  if (bias.size() != out) {
    throw ShapeError(index, "bias has " + std::to_string(bias.size()) +
                                " entries, expected " + std::to_string(out));
  }
  Eigen::VectorXd b(out);
  for (std::size_t r = 0; r < out; ++r) b(r) = as_number(bias[r], where);
  return Layer::dense(std::move(weights), std::move(b), activation);
}

ordered_json layer_to_json(const Layer& layer) {
  ordered_json out;
  out["kind"] = std::string(to_string(layer.kind));
  if (!layer.is_dense()) return out;
  out["activation"] = std::string(to_string(layer.activation));
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
      row.push_back(layer.weights(r, c));
    }
    rows.push_back(std::move(row));
  }
  out["weights"] = std::move(rows);
  ordered_json bias = ordered_json::array();
  for (Eigen::Index r = 0; r < layer.bias.size(); ++r) bias.push_back(layer.bias(r));
  out["bias"] = std::move(bias);
  return out;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kLinear:
      return "linear";
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
    case Activation::kSoftmax:
      return "softmax";
  }
  return "linear";
}

std::string_view to_string(LayerKind kind) {
  return kind == LayerKind::kDense ? "dense" : "flatten";
}

Layer Layer::dense(Eigen::MatrixXd weights, Eigen::VectorXd bias,
                   Activation activation) {
  Layer layer;
  layer.kind = LayerKind::kDense;
  layer.activation = activation;
  layer.weights = std::move(weights);
  layer.bias = std::move(bias);
  return layer;
}

Layer Layer::flatten() {
  Layer layer;
  layer.kind = LayerKind::kFlatten;
  return layer;
}

Network::Network(std::size_t input_dim, std::size_t class_count,
                 std::vector<Layer> layers)
    : input_dim_(input_dim), class_count_(class_count), layers_(std::move(layers)) {
  if (input_dim_ == 0) throw ParseError("input_dim must be positive");
  if (class_count_ == 0) throw ParseError("class_count must be positive");
  if (layers_.empty()) throw ParseError("network has no layers");

  std::size_t width = input_dim_;
  widths_.reserve(layers_.size() + 1);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    widths_.push_back(width);
    const Layer& layer = layers_[i];
    if (!layer.is_dense()) continue;
    if (layer.weights.size() == 0) throw ShapeError(i, "dense layer has no weights");
    if (static_cast<std::size_t>(layer.weights.cols()) != width) {
      throw ShapeError(i, "input width " + std::to_string(layer.weights.cols()) +
                              " does not match preceding width " +
                              std::to_string(width));
    }
    if (layer.bias.size() != layer.weights.rows()) {
      throw ShapeError(i, "bias length does not match output width");
    }
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      throw NonFiniteWeight("layer " + std::to_string(i) +
                            " contains NaN or infinite parameters");
    }
    width = static_cast<std::size_t>(layer.weights.rows());
  }
  widths_.push_back(width);

  const Layer& head = layers_.back();
  if (!head.is_dense()) {
    throw UnsupportedLayer("the final layer must be dense");
  }
  if (head.activation == Activation::kRelu) {
    throw UnsupportedLayer("final layer activation must be softmax, sigmoid or linear");
  }
  if (width == 1) {
    if (head.activation == Activation::kSoftmax) {
      throw ShapeError(layers_.size() - 1, "softmax head needs at least two outputs");
    }
    if (class_count_ != 2) {
      throw ShapeError(layers_.size() - 1, "scalar head requires class_count 2");
    }
  } else if (width != class_count_) {
    throw ShapeError(layers_.size() - 1,
                     "head width " + std::to_string(width) +
                         " differs from class_count " + std::to_string(class_count_));
  }
}

std::size_t Network::input_width(std::size_t layer) const { return widths_.at(layer); }

std::size_t Network::output_width(std::size_t layer) const {
  return widths_.at(layer + 1);
}

std::size_t Network::parameter_count() const {
  std::size_t total = 0;
  for (const auto& layer : layers_) {
    if (layer.is_dense()) {
      total += static_cast<std::size_t>(layer.weights.size() + layer.bias.size());
    }
  }
  return total;
}

Network parse_model(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::out_of_range& e) {
    // A literal too large for a double, such as 1e999.
    throw NonFiniteWeight(std::string("number out of range: ") + e.what());
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("model file must be a JSON object");
  reject_unknown_keys(doc, {"format_version", "input_dim", "class_count", "layers"},
                      "model");
  const int version = required<int>(doc, "format_version", "model");
  if (version != kFormatVersion) {
    throw ParseError("unsupported format_version " + std::to_string(version));
  }
  const auto input_dim = required<std::size_t>(doc, "input_dim", "model");
  const auto class_count = required<std::size_t>(doc, "class_count", "model");
  const json& specs = doc.at("layers");
  if (!specs.is_array()) throw ParseError("'layers' must be an array");

  std::vector<Layer> layers;
  layers.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) layers.push_back(parse_layer(specs[i], i));
  return Network(input_dim, class_count, std::move(layers));
}

Network load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_model(buffer.str());
}

std::string serialize_model(const Network& net) {
  ordered_json doc;
  doc["format_version"] = kFormatVersion;
  doc["input_dim"] = net.input_dim();
  doc["class_count"] = net.class_count();
  ordered_json layers = ordered_json::array();
  for (const auto& layer : net.layers()) layers.push_back(layer_to_json(layer));
  doc["layers"] = std::move(layers);
  return doc.dump() + "\n";
}

void save_model(const Network& net, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write model file " + path.string());
  out << serialize_model(net);
}

Eigen::VectorXd softmax(const Eigen::VectorXd& z) {
  const double peak = z.maxCoeff();
  Eigen::VectorXd e = (z.array() - peak).exp().matrix();
  return e / e.sum();
}

ActivationTrace forward_trace(const Network& net, const Eigen::VectorXd& x) {
  if (static_cast<std::size_t>(x.size()) != net.input_dim()) {
    throw DimensionError("input has " + std::to_string(x.size()) +
                         " values, network expects " + std::to_string(net.input_dim()));
  }
  if (!x.allFinite()) throw DimensionError("input contains non-finite values");

  ActivationTrace trace;
  trace.per_layer.reserve(net.layer_count());
  const Eigen::VectorXd* current = &x;
  for (const auto& layer : net.layers()) {
    if (!layer.is_dense()) {
      trace.per_layer.push_back(*current);
      current = &trace.per_layer.back();
      continue;
    }
    Eigen::VectorXd z = layer.weights * *current + layer.bias;
    switch (layer.activation) {
      case Activation::kLinear:
        break;
      case Activation::kRelu:
        z = z.cwiseMax(0.0);
        break;
      case Activation::kSigmoid:
        z = z.unaryExpr([](double v) { return sigmoid(v); });
        break;
      case Activation::kSoftmax:
        z = softmax(z);
        break;
    }
    trace.per_layer.push_back(std::move(z));
    current = &trace.per_layer.back();
  }
  trace.predicted_class = decide_class(trace.output());
  return trace;
}

ActivationTrace forward_trace(const Network& net, std::span<const double> x) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) v(static_cast<Eigen::Index>(i)) = x[i];
  return forward_trace(net, v);
}

std::size_t decide_class(const Eigen::VectorXd& output) {
  if (output.size() == 1) return output(0) >= 0.5 ? 1 : 0;
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < output.size(); ++i) {
    if (output(i) > output(best)) best = i;
  }
  return static_cast<std::size_t>(best);
}

const Eigen::VectorXd& layer_input(const ActivationTrace& trace,
                                   const Eigen::VectorXd& x, std::size_t layer) {
  return layer == 0 ? x : trace.per_layer.at(layer - 1);
}

std::vector<std::size_t> select_layers(const Network& net, const LayerFilter& filter) {
  std::vector<std::size_t> selected;
  for (std::size_t i = 0; i < net.layer_count(); ++i) {
    const Layer& layer = net.layer(i);
    if (filter.only_dense_layers && !layer.is_dense()) continue;
    if (filter.only_activation_layers && !layer.has_nonlinear_activation()) continue;
    selected.push_back(i);
  }
  return selected;
}

LayerActivations collect_activations(const Network& net, const Eigen::MatrixXd& inputs,
                                     std::span<const std::size_t> layers,
                                     std::size_t batch_size) {
  const Eigen::Index n = inputs.rows();
  LayerActivations out;
  for (std::size_t layer : layers) {
    out.by_layer[layer].resize(n, static_cast<Eigen::Index>(net.output_width(layer)));
  }
  out.predictions.resize(static_cast<std::size_t>(n));
  const Eigen::Index step = static_cast<Eigen::Index>(std::max<std::size_t>(batch_size, 1));
  for (Eigen::Index begin = 0; begin < n; begin += step) {
    const Eigen::Index end = std::min(n, begin + step);
    for (Eigen::Index r = begin; r < end; ++r) {
      const ActivationTrace trace = forward_trace(net, Eigen::VectorXd(inputs.row(r).transpose()));
      out.predictions[static_cast<std::size_t>(r)] = static_cast<int>(trace.predicted_class);
      for (auto& [layer, matrix] : out.by_layer) {
        matrix.row(r) = trace.per_layer[layer].transpose();
      }
    }
  }
  return out;
}

}  // namespace trustmon::model
