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
#include <string>
#include <vector>

#include "xailab/classifier.hpp"
#include "xailab/explanation.hpp"
#include "xailab/mlp.hpp"
#include "xailab/rng.hpp"
#include "xailab/train.hpp"

namespace xailab {

// sigmoid((logit + g1 - g2) / tau) with g1, g2 ~ Gumbel(0, 1).
double GumbelSigmoid(double logit, double tau, RngStream& rng);
double GumbelSigmoid(double logit, double tau, double g1, double g2);

enum class GateMode { kTrain, kInfer };

struct GatingConfig {
  std::vector<int> discriminator_hidden{32};
  std::vector<int> predictor_hidden{32};
  double tau = 1.0;
  double threshold = 0.5;
  double l1_weight = 0.05;

  void Validate() const;
};

struct GatingOutput {
  Vector probabilities;
  Vector mask;  // 0/1
  Vector soft;  // sigma_i
  bool all_zero_mask = false;
};

struct GatingGradients {
  MlpGradients discriminator;
  MlpGradients predictor;
};

// Feature gating: a discriminator emits one logit per feature, a
// Gumbel-sigmoid gate thresholds it into a hard mask, and the predictor
// sees only x * mask. Training uses the straight-through estimator; the
// inference gate is the noiseless sigmoid(a / tau).
class GatingModel : public Classifier {
 public:
  static GatingModel Create(int n_features, int n_classes, const GatingConfig& cfg, uint64_t seed);

  GatingModel(Mlp discriminator, Mlp predictor, double tau, double threshold, double l1_weight);

  const Mlp& discriminator() const { return discriminator_; }
  const Mlp& predictor() const { return predictor_; }
  Mlp& discriminator() { return discriminator_; }
  Mlp& predictor() { return predictor_; }
  double tau() const { return tau_; }
  double threshold() const { return threshold_; }
  double l1_weight() const { return l1_weight_; }

  int input_dim() const override { return predictor_.input_dim(); }
  int num_classes() const override { return predictor_.num_classes(); }

  // kTrain requires an rng for the Gumbel draws; kInfer ignores it.
  GatingOutput Forward(const Vector& x, GateMode mode, RngStream* rng = nullptr) const;
  Vector Mask(const Vector& x) const;

  Vector Probabilities(const Vector& x) const override;
  // The mask is piecewise constant in x, so only the predictor path carries
  // gradient.
  Vector ProbabilityVjp(const Vector& x, const Vector& upstream) const override;
  Matrix BatchProbabilities(const Matrix& rows) const override;

  // Loss and straight-through gradients for a batch (inputs are columns).
  // `gumbel_noise` holds g1 - g2 per gate (d x batch); pass a zero matrix
  // for the noiseless gate.
  double BatchLossGradients(const Matrix& inputs, std::span<const int> targets,
                            const Matrix& gumbel_noise, GatingGradients* grads) const;

  // Mean of inference-mode active fractions over the rows of `data`.
  double ActiveFraction(const Matrix& rows) const;

 private:
  Mlp discriminator_;
  Mlp predictor_;
  double tau_;
  double threshold_;
  double l1_weight_;
};

TrainHistory TrainGating(GatingModel& model, const FeatureMatrix& data, const TrainConfig& cfg);

// Scores are the inference mask.
Explanation GatingExplain(const GatingModel& model, const Vector& x);

// Header file at `path` plus `<path>.discriminator.json` and
// `<path>.predictor.json` model files.
inline constexpr int kGatingFormatVersion = 1;
void SaveGatingModel(const GatingModel& model, const std::string& path);
GatingModel LoadGatingModel(const std::string& path);

}  // namespace xailab
