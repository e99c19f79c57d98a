// Copyright 2026 The xailab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "xailab/mlp.hpp"

#include <cmath>

#include <fmt/format.h>
#include <json.hpp>

#include "csv_util.hpp"
#include "xailab/error.hpp"
#include "xailab/rng.hpp"

namespace xailab {

namespace {

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow.
double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

int OutputUnitsFor(OutputHead head, int classes) {
  return head == OutputHead::kLogistic ? 1 : classes;
}

Matrix AsColumn(const Vector& x) { return Matrix(x); }

}  // namespace

std::string_view ToString(OutputHead head) {
  switch (head) {
    case OutputHead::kLogistic: return "logistic";
    case OutputHead::kSoftmax: return "softmax";
    case OutputHead::kLinear: return "linear";
  }
  return "unknown";
}

OutputHead ParseOutputHead(std::string_view name) {
  if (name == "logistic") return OutputHead::kLogistic;
  if (name == "softmax") return OutputHead::kSoftmax;
  if (name == "linear") return OutputHead::kLinear;
  throw Error(ErrorClass::kConfiguration, fmt::format("unknown output head '{}'", name));
}

Matrix Classifier::BatchProbabilities(const Matrix& rows) const {
  Matrix out(rows.rows(), num_classes());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    out.row(i) = Probabilities(rows.row(i).transpose()).transpose();
  }
  return out;
}

int Classifier::Predict(const Vector& x) const {
  Eigen::Index best = 0;
  Probabilities(x).maxCoeff(&best);
  return static_cast<int>(best);
}

// ---------------------------------------------------------------------------

Mlp Mlp::Create(const std::vector<int>& layer_dims, uint64_t seed,
                std::optional<OutputHead> head) {
  if (layer_dims.size() < 2) {
    throw Error(ErrorClass::kConfiguration,
                fmt::format("need at least 2 layer sizes, got {}", layer_dims.size()));
  }
  for (int dim : layer_dims) {
    if (dim < 1) throw Error(ErrorClass::kConfiguration, fmt::format("layer size {} < 1", dim));
  }
  const int classes = layer_dims.back();
  OutputHead chosen = head.value_or(classes == 2   ? OutputHead::kLogistic
                                    : classes == 1 ? OutputHead::kLinear
                                                   : OutputHead::kSoftmax);
  RngStream rng(seed);
  std::vector<DenseLayer> layers;
  for (size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int out = l + 2 == layer_dims.size() ? OutputUnitsFor(chosen, classes) : layer_dims[l + 1];
    const double scale = std::sqrt(2.0 / fan_in);
    DenseLayer layer{Matrix(out, fan_in), Vector::Zero(out)};
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < fan_in; ++c) layer.weights(r, c) = scale * rng.Normal();
    }
    layers.push_back(std::move(layer));
  }
  return Mlp(layer_dims, chosen, std::move(layers));
}

Mlp::Mlp(std::vector<int> layer_dims, OutputHead head, std::vector<DenseLayer> layers)
    : layer_dims_(std::move(layer_dims)), head_(head), layers_(std::move(layers)) {
  if (layer_dims_.size() < 2 || layers_.size() != layer_dims_.size() - 1) {
    throw Error(ErrorClass::kConfiguration, "layer list does not match layer_dims");
  }
  if (head_ == OutputHead::kLogistic && layer_dims_.back() != 2) {
    throw Error(ErrorClass::kConfiguration, "logistic head requires exactly 2 classes");
  }
  for (size_t l = 0; l < layers_.size(); ++l) {
    const int in = layer_dims_[l];
    const int out = l + 1 == layers_.size() ? OutputUnitsFor(head_, layer_dims_.back())
                                            : layer_dims_[l + 1];
    if (layers_[l].weights.rows() != out || layers_[l].weights.cols() != in ||
        layers_[l].bias.size() != out) {
      throw Error(ErrorClass::kShape,
                  fmt::format("layer {} is {}x{} (bias {}), expected {}x{}", l,
                              layers_[l].weights.rows(), layers_[l].weights.cols(),
                              layers_[l].bias.size(), out, in));
    }
  }
}

int Mlp::output_units() const { return OutputUnitsFor(head_, layer_dims_.back()); }

void Mlp::CheckInput(const Vector& x) const {
  if (x.size() != input_dim()) {
    throw Error(ErrorClass::kShape,
                fmt::format("input has {} features, model expects {}", x.size(), input_dim()));
  }
  if (!x.allFinite()) throw Error(ErrorClass::kInput, "input has non-finite values");
}

ForwardCache Mlp::Forward(const Matrix& inputs) const {
  if (inputs.rows() != input_dim()) {
    throw Error(ErrorClass::kShape,
                fmt::format("input has {} features, model expects {}", inputs.rows(), input_dim()));
  }
  ForwardCache cache;
  cache.pre.reserve(layers_.size());
  cache.post.reserve(layers_.size() + 1);
  cache.post.push_back(inputs);
  for (size_t l = 0; l < layers_.size(); ++l) {
    Matrix z = layers_[l].weights * cache.post.back();
    z.colwise() += layers_[l].bias;
    cache.pre.push_back(z);
    if (l + 1 < layers_.size()) {
      cache.post.push_back(z.cwiseMax(0.0));
    } else {
      cache.post.push_back(std::move(z));
    }
  }
  return cache;
}

Matrix Mlp::Backward(const ForwardCache& cache, const Matrix& d_logits, MlpGradients* grads) const {
  Matrix dz = d_logits;
  for (size_t l = layers_.size(); l-- > 0;) {
    if (grads != nullptr) {
      grads->weights[l].noalias() += dz * cache.post[l].transpose();
      grads->biases[l].noalias() += dz.rowwise().sum();
    }
    Matrix d_input = layers_[l].weights.transpose() * dz;
    if (l == 0) return d_input;
    // Rectifier derivative; 0 at the kink.
    dz = d_input.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return dz;
}

Vector Mlp::Logits(const Vector& x) const {
  CheckInput(x);
  return Forward(AsColumn(x)).logits().col(0);
}

Vector Mlp::Probabilities(const Vector& x) const {
  return HeadProbabilities(head_, AsColumn(Logits(x))).col(0);
}

Matrix Mlp::BatchProbabilities(const Matrix& rows) const {
  return HeadProbabilities(head_, Forward(rows.transpose()).logits()).transpose();
}

Vector Mlp::ProbabilityVjp(const Vector& x, const Vector& upstream) const {
  CheckInput(x);
  const ForwardCache cache = Forward(AsColumn(x));
  const Matrix d_logits = HeadProbabilityVjp(head_, cache.logits(), AsColumn(upstream));
  return Backward(cache, d_logits, nullptr).col(0);
}

double Mlp::Loss(const Vector& x, int target) const {
  CheckInput(x);
  const int t[1] = {target};
  return HeadCrossEntropy(head_, Forward(AsColumn(x)).logits(), t);
}

Vector Mlp::InputGradient(const Vector& x, int target) const {
  CheckInput(x);
  const int t[1] = {target};
  const ForwardCache cache = Forward(AsColumn(x));
  return Backward(cache, HeadCrossEntropyGrad(head_, cache.logits(), t), nullptr).col(0);
}

Matrix Mlp::InputGradients(const Matrix& rows, std::span<const int> targets) const {
  const ForwardCache cache = Forward(rows.transpose());
  return Backward(cache, HeadCrossEntropyGrad(head_, cache.logits(), targets), nullptr).transpose();
}

MlpGradients Mlp::LossGradients(const Vector& x, int target) const {
  CheckInput(x);
  const int t[1] = {target};
  MlpGradients grads = ZeroGradients();
  const ForwardCache cache = Forward(AsColumn(x));
  Backward(cache, HeadCrossEntropyGrad(head_, cache.logits(), t), &grads);
  return grads;
}

MlpGradients Mlp::ZeroGradients() const {
  MlpGradients g;
  for (const auto& layer : layers_) {
    g.weights.push_back(Matrix::Zero(layer.weights.rows(), layer.weights.cols()));
    g.biases.push_back(Vector::Zero(layer.bias.size()));
  }
  return g;
}

bool Mlp::AllFinite() const {
  for (const auto& layer : layers_) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

Matrix HeadProbabilities(OutputHead head, const Matrix& logits) {
  switch (head) {
    case OutputHead::kLogistic: {
      Matrix p(2, logits.cols());
      for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        p(0, c) = Sigmoid(-logits(0, c));
        p(1, c) = Sigmoid(logits(0, c));
      }
      return p;
    }
    case OutputHead::kSoftmax: {
      Matrix p(logits.rows(), logits.cols());
      for (Eigen::Index c = 0; c < logits.cols(); ++c) {
        const double m = logits.col(c).maxCoeff();
        const Eigen::ArrayXd e = (logits.col(c).array() - m).exp();
        p.col(c) = e / e.sum();
      }
      return p;
    }
    case OutputHead::kLinear:
      break;
  }
  throw Error(ErrorClass::kConfiguration, "linear head has no class probabilities");
}

double HeadCrossEntropy(OutputHead head, const Matrix& logits, std::span<const int> targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.cols()) {
    throw Error(ErrorClass::kShape, "target count does not match batch size");
  }
  double total = 0.0;
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const int t = targets[static_cast<size_t>(c)];
    if (head == OutputHead::kLogistic) {
      if (t != 0 && t != 1) throw Error(ErrorClass::kInput, fmt::format("invalid target {}", t));
      const double z = logits(0, c);
      total += t == 1 ? Softplus(-z) : Softplus(z);
    } else if (head == OutputHead::kSoftmax) {
      if (t < 0 || t >= logits.rows()) {
        throw Error(ErrorClass::kInput, fmt::format("invalid target {}", t));
      }
      const double m = logits.col(c).maxCoeff();
      const double lse = m + std::log((logits.col(c).array() - m).exp().sum());
      total += lse - logits(t, c);
    } else {
      throw Error(ErrorClass::kConfiguration, "linear head has no cross-entropy");
    }
  }
  return logits.cols() > 0 ? total / static_cast<double>(logits.cols()) : 0.0;
}

Matrix HeadCrossEntropyGrad(OutputHead head, const Matrix& logits, std::span<const int> targets) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.cols()) {
    throw Error(ErrorClass::kShape, "target count does not match batch size");
  }
  Matrix grad = HeadProbabilities(head, logits);
  if (head == OutputHead::kLogistic) {
    Matrix g(1, logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      const int t = targets[static_cast<size_t>(c)];
      if (t != 0 && t != 1) throw Error(ErrorClass::kInput, fmt::format("invalid target {}", t));
      g(0, c) = grad(1, c) - t;
    }
    return g;
  }
  for (Eigen::Index c = 0; c < logits.cols(); ++c) {
    const int t = targets[static_cast<size_t>(c)];
    if (t < 0 || t >= logits.rows()) throw Error(ErrorClass::kInput, fmt::format("invalid target {}", t));
    grad(t, c) -= 1.0;
  }
  return grad;
}

Matrix HeadProbabilityVjp(OutputHead head, const Matrix& logits, const Matrix& upstream) {
  const Matrix p = HeadProbabilities(head, logits);
  if (upstream.rows() != p.rows() || upstream.cols() != p.cols()) {
    throw Error(ErrorClass::kShape, "upstream gradient does not match probabilities");
  }
  if (head == OutputHead::kLogistic) {
    // p1 = s(z), p0 = s(-z); dp1/dz = s(z)s(-z) = -dp0/dz.
    Matrix g(1, logits.cols());
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      g(0, c) = (upstream(1, c) - upstream(0, c)) * p(0, c) * p(1, c);
    }
    return g;
  }
  Matrix g(p.rows(), p.cols());
  for (Eigen::Index c = 0; c < p.cols(); ++c) {
    const double dot = p.col(c).dot(upstream.col(c));
    g.col(c) = p.col(c).cwiseProduct((upstream.col(c).array() - dot).matrix());
  }
  return g;
}

// ---------------------------------------------------------------------------

double BalancedAccuracy(std::span<const int> predicted, std::span<const int> labels, int num_classes) {
  if (predicted.size() != labels.size()) {
    throw Error(ErrorClass::kShape, "prediction and label counts differ");
  }
  std::vector<int> total(static_cast<size_t>(num_classes), 0);
  std::vector<int> correct(static_cast<size_t>(num_classes), 0);
  for (size_t i = 0; i < labels.size(); ++i) {
    const int y = labels[i];
    if (y < 0 || y >= num_classes) {
      throw Error(ErrorClass::kMetric, fmt::format("label {} outside [0, {})", y, num_classes));
    }
    ++total[static_cast<size_t>(y)];
    if (predicted[i] == y) ++correct[static_cast<size_t>(y)];
  }
  double sum = 0.0;
  for (int c = 0; c < num_classes; ++c) {
    if (total[static_cast<size_t>(c)] == 0) {
      throw Error(ErrorClass::kMetric, fmt::format("class {} has no instances", c));
    }
    sum += static_cast<double>(correct[static_cast<size_t>(c)]) / total[static_cast<size_t>(c)];
  }
  return sum / num_classes;
}

double BalancedAccuracy(const Classifier& model, const FeatureMatrix& data) {
  const Matrix probs = model.BatchProbabilities(data.data);
  std::vector<int> predicted(data.rows());
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    Eigen::Index best = 0;
    probs.row(i).maxCoeff(&best);
    predicted[static_cast<size_t>(i)] = static_cast<int>(best);
  }
  return BalancedAccuracy(predicted, data.labels, model.num_classes());
}

// ---------------------------------------------------------------------------

namespace {
constexpr const char* kModelFormatName = "xailab-mlp";
}

std::string SerializeModel(const Mlp& model) {
  nlohmann::json doc;
  doc["format"] = kModelFormatName;
  doc["format_version"] = kModelFormatVersion;
  doc["layer_dims"] = model.layer_dims();
  doc["hidden_activation"] = "relu";
  doc["output_head"] = std::string(ToString(model.head()));
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : model.layers()) {
    std::vector<double> w;
    w.reserve(static_cast<size_t>(layer.weights.size()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) w.push_back(layer.weights(r, c));
    }
    layers.push_back({{"rows", layer.weights.rows()},
                      {"cols", layer.weights.cols()},
                      {"weights", w},
                      {"bias", std::vector<double>(layer.bias.data(),
                                                   layer.bias.data() + layer.bias.size())}});
  }
  doc["layers"] = std::move(layers);
  return doc.dump(1);
}

Mlp DeserializeModel(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorClass::kLoad, fmt::format("model file is not valid JSON: {}", e.what()));
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kModelFormatName) {
      throw Error(ErrorClass::kLoad, "not an xailab model file");
    }
    const int version = doc.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw Error(ErrorClass::kVersion, fmt::format("model format version {} is not supported (expected {})",
                                                    version, kModelFormatVersion));
    }
    if (doc.at("hidden_activation").get<std::string>() != "relu") {
      throw Error(ErrorClass::kLoad, "unsupported hidden activation");
    }
    auto dims = doc.at("layer_dims").get<std::vector<int>>();
    const OutputHead head = ParseOutputHead(doc.at("output_head").get<std::string>());
    std::vector<DenseLayer> layers;
    for (const auto& jl : doc.at("layers")) {
      const auto rows = jl.at("rows").get<Eigen::Index>();
      const auto cols = jl.at("cols").get<Eigen::Index>();
      const auto w = jl.at("weights").get<std::vector<double>>();
      const auto b = jl.at("bias").get<std::vector<double>>();
      if (rows < 1 || cols < 1 || static_cast<Eigen::Index>(w.size()) != rows * cols ||
          static_cast<Eigen::Index>(b.size()) != rows) {
        throw Error(ErrorClass::kLoad, "layer array sizes are inconsistent");
      }
      DenseLayer layer{Matrix(rows, cols), Vector(rows)};
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) layer.weights(r, c) = w[static_cast<size_t>(r * cols + c)];
        layer.bias(r) = b[static_cast<size_t>(r)];
      }
      layers.push_back(std::move(layer));
    }
    Mlp model(std::move(dims), head, std::move(layers));
    if (!model.AllFinite()) throw Error(ErrorClass::kLoad, "model has non-finite parameters");
    return model;
  } catch (const Error& e) {
    if (e.error_class() == ErrorClass::kVersion || e.error_class() == ErrorClass::kLoad) throw;
    throw Error(ErrorClass::kLoad, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorClass::kLoad, fmt::format("malformed model file: {}", e.what()));
  }
}

void SaveModel(const Mlp& model, const std::string& path) {
  WriteTextFile(path, SerializeModel(model));
}

Mlp LoadModel(const std::string& path) {
  std::string text;
  try {
    text = ReadTextFile(path);
  } catch (const Error& e) {
    throw Error(ErrorClass::kLoad, e.what());
  }
  return DeserializeModel(text);
}

}  // namespace xailab
