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

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "xailab/error.hpp"
#include "xailab/explainers.hpp"

namespace xailab {

namespace {

struct Margin {
  double value;  // P_orig - max_{j != orig} P_j
  int runner_up;
  int predicted;
};

Margin ComputeMargin(const Vector& probs, int original) {
  Margin m{0.0, -1, 0};
  double best_other = -INFINITY;
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    if (j != original && probs(j) > best_other) {
      best_other = probs(j);
      m.runner_up = static_cast<int>(j);
    }
  }
  probs.maxCoeff(&m.predicted);
  m.value = probs(original) - best_other;
  return m;
}

}  // namespace

void CemConfig::Validate() const {
  if (!(beta >= 0)) throw Error(ErrorClass::kConfiguration, "beta must be >= 0");
  if (c_steps < 1) throw Error(ErrorClass::kConfiguration, "c_steps must be >= 1");
  if (max_iterations < 1) throw Error(ErrorClass::kConfiguration, "max_iterations must be >= 1");
  if (!(kappa >= 0)) throw Error(ErrorClass::kConfiguration, "kappa must be >= 0");
  if (!(c_init > 0)) throw Error(ErrorClass::kConfiguration, "c_init must be > 0");
  if (!(learning_rate > 0)) throw Error(ErrorClass::kConfiguration, "learning_rate must be > 0");
  if (!(gradient_clip > 0)) throw Error(ErrorClass::kConfiguration, "gradient_clip must be > 0");
  if (!(lower < upper)) throw Error(ErrorClass::kConfiguration, "feature bounds are empty");
}

CemResult CemPertinentNegative(const Classifier& model, const Vector& x,
                               const FeatureStats& train_stats, const CemConfig& cfg) {
  cfg.Validate();
  const int d = model.input_dim();
  if (x.size() != d || train_stats.std.size() != d) {
    throw Error(ErrorClass::kShape, "instance or training statistics do not match the model width");
  }
  CemResult result;
  result.original_class = model.Predict(x);
  result.new_class = result.original_class;
  result.perturbed = x;
  const int orig = result.original_class;
  const int classes = model.num_classes();

  auto shrink = [&](const Vector& z) {
    Vector out(d);
    for (int i = 0; i < d; ++i) {
      const double diff = z(i) - x(i);
      double v = x(i);
      if (diff > cfg.beta) {
        v = z(i) - cfg.beta;
      } else if (diff < -cfg.beta) {
        v = z(i) + cfg.beta;
      }
      out(i) = std::clamp(v, cfg.lower, cfg.upper);
    }
    return out;
  };
  auto attack_succeeds = [&](const Vector& probs) {
    const Margin m = ComputeMargin(probs, orig);
    return m.predicted != orig && m.value <= -cfg.kappa;
  };

  double c = cfg.c_init;
  double c_lower = 0.0;
  double c_upper = 1e10;
  double best_overall = INFINITY;
  for (int c_step = 0; c_step < cfg.c_steps; ++c_step) {
    bool found = false;
    Vector adv = x;
    Vector slack = x;
    for (int it = 0; it < cfg.max_iterations; ++it) {
      const Vector probs = model.Probabilities(slack);
      const Margin m = ComputeMargin(probs, orig);
      Vector grad = 2.0 * (slack - x);
      if (m.value > -cfg.kappa && classes > 1) {
        Vector upstream = Vector::Zero(classes);
        upstream(orig) = c;
        upstream(m.runner_up) -= c;
        grad += model.ProbabilityVjp(slack, upstream);
      }
      grad = grad.cwiseMax(-cfg.gradient_clip).cwiseMin(cfg.gradient_clip);
      const Vector next = shrink(slack - cfg.learning_rate * grad);
      const double momentum = static_cast<double>(it) / (it + 3.0);
      slack = (next + momentum * (next - adv)).cwiseMax(cfg.lower).cwiseMin(cfg.upper);
      adv = next;
      if (!adv.allFinite() || !slack.allFinite()) {
        throw Error(ErrorClass::kExplanation, "CEM optimization produced non-finite values");
      }

      const Vector adv_probs = model.Probabilities(adv);
      if (!adv_probs.allFinite()) {
        throw Error(ErrorClass::kExplanation, "CEM optimization produced non-finite probabilities");
      }
      if (attack_succeeds(adv_probs)) {
        found = true;
        const Vector delta = adv - x;
        const double loss = cfg.beta * delta.lpNorm<1>() + delta.squaredNorm();
        if (loss < best_overall) {
          best_overall = loss;
          result.success = true;
          result.perturbed = adv;
          result.best_c = c;
          adv_probs.maxCoeff(&result.new_class);
        }
      }
    }
    if (found) {
      c_upper = std::min(c_upper, c);
      c = 0.5 * (c_lower + c_upper);
    } else {
      c_lower = std::max(c_lower, c);
      c = c_upper < 1e9 ? 0.5 * (c_lower + c_upper) : c * 10.0;
    }
  }

  Vector raw = Vector::Zero(d);
  if (result.success) raw = ((result.perturbed - x).array() * train_stats.std.array()).matrix();
  result.explanation = MakeExplanation(std::move(raw), Method::kCem, 0);
  return result;
}

}  // namespace xailab
