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
#include <vector>

#include "xailab/dataset.hpp"
#include "xailab/mlp.hpp"
#include "xailab/rng.hpp"

namespace xailab {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double learning_rate = 1e-3;
  uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Epochs without validation improvement before stopping; 0 disables.
  int patience = 0;

  void Validate() const;
};

struct TrainHistory {
  // Full-data mean loss before the first update.
  double initial_loss = 0.0;
  // Full-data mean loss after each completed epoch.
  std::vector<double> losses;
  std::vector<double> validation_losses;
  int best_epoch = -1;
};

// Adam over a list of parameter tensors laid out like MlpGradients.
class AdamState {
 public:
  AdamState(const Mlp& model, const TrainConfig& cfg);
  void Step(std::vector<DenseLayer>& layers, const MlpGradients& grads);

 private:
  double lr_, beta1_, beta2_, epsilon_;
  int64_t step_ = 0;
  MlpGradients m_, v_;
};

// Owns the optimizer state and the shuffling stream for one training run,
// so plain and adversarial training share the same epoch mechanics.
class MlpTrainer {
 public:
  MlpTrainer(Mlp& model, const TrainConfig& cfg);

  // One shuffled pass of minibatch updates over `data`.
  void RunEpoch(const FeatureMatrix& data);

 private:
  Mlp& model_;
  TrainConfig cfg_;
  AdamState adam_;
  RngStream rng_;
};

double MeanLoss(const Mlp& model, const FeatureMatrix& data);

// Minibatch Adam on mean cross-entropy. With `validation` and
// cfg.patience > 0, stops early and restores the best-validation weights.
TrainHistory Train(Mlp& model, const FeatureMatrix& data, const TrainConfig& cfg,
                   const FeatureMatrix* validation = nullptr);

}  // namespace xailab
