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

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xailab/classifier.hpp"
#include "xailab/dataset.hpp"

namespace xailab {

// kLogistic: one output unit, p(class 1) = sigmoid(z).
// kSoftmax:  one output unit per class.
// kLinear:   raw outputs, no probability semantics (gating discriminator).
enum class OutputHead { kLogistic, kSoftmax, kLinear };

std::string_view ToString(OutputHead head);
OutputHead ParseOutputHead(std::string_view name);

struct DenseLayer {
  Matrix weights;  // out x in
  Vector bias;     // out
};

// Per-layer activations of a batched forward pass; columns are samples.
// pre[l] is the pre-activation of layer l; post[0] is the input and
// post[l + 1] the output of layer l (the logits for the last layer).
struct ForwardCache {
  std::vector<Matrix> pre;
  std::vector<Matrix> post;
  const Matrix& logits() const { return post.back(); }
};

struct MlpGradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

// Dense feed-forward classifier: rectifier hidden layers, logistic/softmax
// head, 64-bit parameters.
class Mlp : public Classifier {
 public:
  // layer_dims = {input, hidden..., classes}. Without an explicit head, two
  // classes use the logistic head, three or more softmax, and a single
  // output is linear. Weights ~ N(0, 2 / fan_in); biases are zero.
  static Mlp Create(const std::vector<int>& layer_dims, uint64_t seed,
                    std::optional<OutputHead> head = std::nullopt);

  Mlp(std::vector<int> layer_dims, OutputHead head, std::vector<DenseLayer> layers);

  const std::vector<int>& layer_dims() const { return layer_dims_; }
  OutputHead head() const { return head_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  int output_units() const;

  int input_dim() const override { return layer_dims_.front(); }
  int num_classes() const override { return layer_dims_.back(); }

  Vector Logits(const Vector& x) const;
  Vector Probabilities(const Vector& x) const override;
  Vector ProbabilityVjp(const Vector& x, const Vector& upstream) const override;
  Matrix BatchProbabilities(const Matrix& rows) const override;

  // Batched pass; `inputs` is input_dim x batch.
  ForwardCache Forward(const Matrix& inputs) const;
  // Backpropagates d_logits (output_units x batch). Accumulates parameter
  // gradients into `grads` when non-null and returns d inputs.
  Matrix Backward(const ForwardCache& cache, const Matrix& d_logits,
                  MlpGradients* grads) const;

  // Cross-entropy of one instance.
  double Loss(const Vector& x, int target) const;
  // d Loss / d x.
  Vector InputGradient(const Vector& x, int target) const;
  // Row-wise input gradients for a batch (rows = instances).
  Matrix InputGradients(const Matrix& rows, std::span<const int> targets) const;
  MlpGradients LossGradients(const Vector& x, int target) const;

  MlpGradients ZeroGradients() const;
  bool AllFinite() const;

 private:
  void CheckInput(const Vector& x) const;

  std::vector<int> layer_dims_;
  OutputHead head_;
  std::vector<DenseLayer> layers_;
};

// Helpers shared by every model that ends in an Mlp head. Logit matrices
// are units x batch.
Matrix HeadProbabilities(OutputHead head, const Matrix& logits);
// Mean cross-entropy over the batch.
double HeadCrossEntropy(OutputHead head, const Matrix& logits, std::span<const int> targets);
// d (sum of per-sample cross-entropy) / d logits.
Matrix HeadCrossEntropyGrad(OutputHead head, const Matrix& logits, std::span<const int> targets);
// Maps an upstream gradient on probabilities to one on logits.
Matrix HeadProbabilityVjp(OutputHead head, const Matrix& logits, const Matrix& upstream);

double BalancedAccuracy(std::span<const int> predicted, std::span<const int> labels, int num_classes);
double BalancedAccuracy(const Classifier& model, const FeatureMatrix& data);

inline constexpr int kModelFormatVersion = 1;

void SaveModel(const Mlp& model, const std::string& path);
Mlp LoadModel(const std::string& path);
std::string SerializeModel(const Mlp& model);
Mlp DeserializeModel(const std::string& text);

}  // namespace xailab
