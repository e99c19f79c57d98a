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

#include "xailab/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "xailab/error.hpp"

namespace xailab {

void TrainConfig::Validate() const {
  if (epochs < 1) throw Error(ErrorClass::kConfiguration, fmt::format("epochs = {} < 1", epochs));
  if (batch_size < 1) {
    throw Error(ErrorClass::kConfiguration, fmt::format("batch_size = {} < 1", batch_size));
  }
  if (!(learning_rate > 0)) {
    throw Error(ErrorClass::kConfiguration, fmt::format("learning_rate = {} must be > 0", learning_rate));
  }
  if (!(beta1 >= 0 && beta1 < 1 && beta2 >= 0 && beta2 < 1 && epsilon > 0)) {
    throw Error(ErrorClass::kConfiguration, "invalid Adam moment settings");
  }
  if (patience < 0) throw Error(ErrorClass::kConfiguration, "patience must be >= 0");
}

AdamState::AdamState(const Mlp& model, const TrainConfig& cfg)
    : lr_(cfg.learning_rate),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      epsilon_(cfg.epsilon),
      m_(model.ZeroGradients()),
      v_(model.ZeroGradients()) {}

void AdamState::Step(std::vector<DenseLayer>& layers, const MlpGradients& grads) {
  ++step_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    m = beta1_ * m + (1.0 - beta1_) * g;
    v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
    param.array() -= lr_ * (m.array() / c1) / ((v.array() / c2).sqrt() + epsilon_);
  };
  for (size_t l = 0; l < layers.size(); ++l) {
    update(layers[l].weights, grads.weights[l], m_.weights[l], v_.weights[l]);
    update(layers[l].bias, grads.biases[l], m_.biases[l], v_.biases[l]);
  }
}

MlpTrainer::MlpTrainer(Mlp& model, const TrainConfig& cfg)
    : model_(model), cfg_(cfg), adam_(model, cfg), rng_(cfg.seed) {
  cfg_.Validate();
}

void MlpTrainer::RunEpoch(const FeatureMatrix& data) {
  std::vector<size_t> order(data.rows());
  std::iota(order.begin(), order.end(), size_t{0});
  rng_.Shuffle(order.begin(), order.end());
  const auto batch = static_cast<size_t>(cfg_.batch_size);
  const Eigen::Index d = data.data.cols();
  for (size_t start = 0; start < order.size(); start += batch) {
    const size_t end = std::min(order.size(), start + batch);
    const auto n = static_cast<Eigen::Index>(end - start);
    Matrix inputs(d, n);
    std::vector<int> targets(static_cast<size_t>(n));
    for (Eigen::Index b = 0; b < n; ++b) {
      const size_t row = order[start + static_cast<size_t>(b)];
      inputs.col(b) = data.data.row(static_cast<Eigen::Index>(row)).transpose();
      targets[static_cast<size_t>(b)] = data.labels[row];
    }
    const ForwardCache cache = model_.Forward(inputs);
    Matrix d_logits = HeadCrossEntropyGrad(model_.head(), cache.logits(), targets);
    d_logits /= static_cast<double>(n);
    MlpGradients grads = model_.ZeroGradients();
    model_.Backward(cache, d_logits, &grads);
    adam_.Step(model_.layers(), grads);
  }
}

double MeanLoss(const Mlp& model, const FeatureMatrix& data) {
  if (data.rows() == 0) return 0.0;
  const ForwardCache cache = model.Forward(data.data.transpose());
  return HeadCrossEntropy(model.head(), cache.logits(), data.labels);
}

TrainHistory Train(Mlp& model, const FeatureMatrix& data, const TrainConfig& cfg,
                   const FeatureMatrix* validation) {
  cfg.Validate();
  if (data.rows() == 0) throw Error(ErrorClass::kInput, "training data is empty");
  data.Validate();
  for (int label : data.labels) {
    if (label >= model.num_classes()) {
      throw Error(ErrorClass::kInput,
                  fmt::format("label {} outside model's {} classes", label, model.num_classes()));
    }
  }
  TrainHistory history;
  history.initial_loss = MeanLoss(model, data);
  MlpTrainer trainer(model, cfg);
  const bool early_stop = validation != nullptr && cfg.patience > 0;
  double best_val = INFINITY;
  std::vector<DenseLayer> best_layers;
  int since_best = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    trainer.RunEpoch(data);
    const double loss = MeanLoss(model, data);
    if (!std::isfinite(loss) || !model.AllFinite()) {
      throw DivergenceError(epoch, fmt::format("training loss became non-finite at epoch {}", epoch));
    }
    history.losses.push_back(loss);
    if (validation != nullptr) {
      const double val = MeanLoss(model, *validation);
      history.validation_losses.push_back(val);
      if (val < best_val) {
        best_val = val;
        history.best_epoch = epoch;
        since_best = 0;
        if (early_stop) best_layers = model.layers();
      } else if (early_stop && ++since_best >= cfg.patience) {
        break;
      }
    }
  }
  if (early_stop && !best_layers.empty()) model.layers() = std::move(best_layers);
  return history;
}

}  // namespace xailab
