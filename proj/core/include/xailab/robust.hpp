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

#include <span>
#include <string_view>

#include "xailab/dataset.hpp"
#include "xailab/mlp.hpp"
#include "xailab/train.hpp"

namespace xailab {

enum class AttackMethod { kFgsm, kPgd };

std::string_view ToString(AttackMethod method);
AttackMethod ParseAttackMethod(std::string_view name);

struct AttackConfig {
  AttackMethod method = AttackMethod::kPgd;
  double epsilon = 0.05;
  double alpha = 0.01;
  int iterations = 40;
  double lower = 0.0;
  double upper = 1.0;

  void Validate() const;
};

// clip(x + epsilon * sign(grad_x loss)).
Vector FgsmPerturb(const Mlp& model, const Vector& x, int label, double epsilon,
                   double lower = 0.0, double upper = 1.0);

// Iterated sign steps of size alpha, each projected onto the epsilon
// L-inf ball around x and the box.
Vector PgdPerturb(const Mlp& model, const Vector& x, int label, const AttackConfig& cfg);

// Batched attack on every row; rows of the result are adversarial copies.
Matrix PerturbRows(const Mlp& model, const Matrix& rows, std::span<const int> labels,
                   const AttackConfig& cfg);

FeatureMatrix PerturbDataset(const Mlp& model, const FeatureMatrix& data, const AttackConfig& cfg);

// Balanced accuracy on attacked copies of `data`.
double AdversarialBalancedAccuracy(const Mlp& model, const FeatureMatrix& data,
                                   const AttackConfig& cfg);

// Each epoch regenerates adversarial copies from the current model and runs
// one pass over [clean; adversarial].
TrainHistory AdversarialTrain(Mlp& model, const FeatureMatrix& data, const AttackConfig& attack,
                              const TrainConfig& cfg);

}  // namespace xailab
