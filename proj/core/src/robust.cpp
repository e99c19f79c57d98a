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

#include "xailab/robust.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "xailab/error.hpp"

namespace xailab {

namespace {

double Sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

std::string_view ToString(AttackMethod method) {
  return method == AttackMethod::kFgsm ? "fgsm" : "pgd";
}

AttackMethod ParseAttackMethod(std::string_view name) {
  if (name == "fgsm") return AttackMethod::kFgsm;
  if (name == "pgd") return AttackMethod::kPgd;
  throw Error(ErrorClass::kConfiguration, fmt::format("unknown attack method '{}'", name));
}

void AttackConfig::Validate() const {
  if (!(epsilon >= 0)) throw Error(ErrorClass::kConfiguration, "epsilon must be >= 0");
  if (!(alpha > 0)) throw Error(ErrorClass::kConfiguration, "alpha must be > 0");
  if (iterations < 1) throw Error(ErrorClass::kConfiguration, "iterations must be >= 1");
  if (!(lower < upper)) throw Error(ErrorClass::kConfiguration, "feature bounds are empty");
}

Vector FgsmPerturb(const Mlp& model, const Vector& x, int label, double epsilon, double lower,
                   double upper) {
  if (!(epsilon >= 0)) throw Error(ErrorClass::kConfiguration, "epsilon must be >= 0");
  const Vector grad = model.InputGradient(x, label);
  return (x + epsilon * grad.unaryExpr(&Sign)).cwiseMax(lower).cwiseMin(upper);
}

Vector PgdPerturb(const Mlp& model, const Vector& x, int label, const AttackConfig& cfg) {
  cfg.Validate();
  const Vector lo = (x.array() - cfg.epsilon).max(cfg.lower).matrix();
  const Vector hi = (x.array() + cfg.epsilon).min(cfg.upper).matrix();
  Vector cur = x;
  for (int it = 0; it < cfg.iterations; ++it) {
    const Vector grad = model.InputGradient(cur, label);
    cur = (cur + cfg.alpha * grad.unaryExpr(&Sign)).cwiseMax(lo).cwiseMin(hi);
  }
  return cur;
}

Matrix PerturbRows(const Mlp& model, const Matrix& rows, std::span<const int> labels,
                   const AttackConfig& cfg) {
  cfg.Validate();
  if (static_cast<Eigen::Index>(labels.size()) != rows.rows()) {
    throw Error(ErrorClass::kShape, "one label per row is required");
  }
  if (rows.rows() == 0) return rows;
  if (cfg.method == AttackMethod::kFgsm) {
    const Matrix grad = model.InputGradients(rows, labels);
    return (rows + cfg.epsilon * grad.unaryExpr(&Sign)).cwiseMax(cfg.lower).cwiseMin(cfg.upper);
  }
  const Matrix lo = (rows.array() - cfg.epsilon).max(cfg.lower).matrix();
  const Matrix hi = (rows.array() + cfg.epsilon).min(cfg.upper).matrix();
  Matrix cur = rows;
  for (int it = 0; it < cfg.iterations; ++it) {
    const Matrix grad = model.InputGradients(cur, labels);
    cur = (cur + cfg.alpha * grad.unaryExpr(&Sign)).cwiseMax(lo).cwiseMin(hi);
  }
  return cur;
}

FeatureMatrix PerturbDataset(const Mlp& model, const FeatureMatrix& data, const AttackConfig& cfg) {
  FeatureMatrix out = data;
  out.data = PerturbRows(model, data.data, data.labels, cfg);
  return out;
}

double AdversarialBalancedAccuracy(const Mlp& model, const FeatureMatrix& data, const AttackConfig& cfg) {
  return BalancedAccuracy(model, PerturbDataset(model, data, cfg));
}

TrainHistory AdversarialTrain(Mlp& model, const FeatureMatrix& data, const AttackConfig& attack,
                              const TrainConfig& cfg) {
  cfg.Validate();
  attack.Validate();
  if (data.rows() == 0) throw Error(ErrorClass::kInput, "training data is empty");
  data.Validate();
  TrainHistory history;
  history.initial_loss = MeanLoss(model, Concat(data, data));
  MlpTrainer trainer(model, cfg);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const FeatureMatrix combined = Concat(data, PerturbDataset(model, data, attack));
    trainer.RunEpoch(combined);
    const double loss = MeanLoss(model, combined);
    if (!std::isfinite(loss) || !model.AllFinite()) {
      throw DivergenceError(epoch, fmt::format("adversarial training diverged at epoch {}", epoch));
    }
    history.losses.push_back(loss);
  }
  return history;
}

}  // namespace xailab
