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
#include <numeric>

#include <fmt/format.h>

#include "xailab/error.hpp"
#include "xailab/explainers.hpp"

namespace xailab {

namespace {

constexpr double kProbFloor = 1e-300;

int StrongestOther(const Vector& probs, int excluded) {
  int best = -1;
  for (Eigen::Index j = 0; j < probs.size(); ++j) {
    if (j != excluded && (best < 0 || probs(j) > probs(best))) best = static_cast<int>(j);
  }
  return best;
}

Matrix KernelMatrix(const std::vector<Vector>& candidates) {
  const auto k = static_cast<Eigen::Index>(candidates.size());
  Matrix kernel(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    kernel(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double dist = (candidates[static_cast<size_t>(i)] - candidates[static_cast<size_t>(j)]).lpNorm<1>();
      kernel(i, j) = kernel(j, i) = 1.0 / (1.0 + dist);
    }
  }
  return kernel;
}

double Sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

}  // namespace

void DiceConfig::Validate() const {
  if (k < 1) throw Error(ErrorClass::kConfiguration, "k must be >= 1");
  if (!(proximity_weight >= 0) || !(diversity_weight >= 0)) {
    throw Error(ErrorClass::kConfiguration, "DiCE weights must be >= 0");
  }
  if (max_steps < 1 || min_steps < 0) throw Error(ErrorClass::kConfiguration, "invalid DiCE step budget");
  if (!(learning_rate > 0)) throw Error(ErrorClass::kConfiguration, "learning_rate must be > 0");
  if (!(change_tolerance >= 0) || !(posthoc_sparsity >= 0) || !(init_radius >= 0)) {
    throw Error(ErrorClass::kConfiguration, "DiCE tolerances must be >= 0");
  }
  if (!(lower < upper)) throw Error(ErrorClass::kConfiguration, "feature bounds are empty");
}

double DppDiversity(const std::vector<Vector>& candidates) {
  if (candidates.empty()) return 0.0;
  return KernelMatrix(candidates).determinant();
}

DiceResult DiceCounterfactuals(const Classifier& model, const Vector& x, const DiceConfig& cfg,
                               RngStream& rng) {
  cfg.Validate();
  const int d = model.input_dim();
  if (x.size() != d) throw Error(ErrorClass::kShape, "instance does not match the model width");
  const int classes = model.num_classes();
  if (classes < 2) throw Error(ErrorClass::kConfiguration, "counterfactuals need at least two classes");

  DiceResult result;
  const Vector p0 = model.Probabilities(x);
  p0.maxCoeff(&result.original_class);
  result.desired_class = StrongestOther(p0, result.original_class);
  const int desired = result.desired_class;
  const auto k = static_cast<size_t>(cfg.k);

  auto is_valid = [&](const Vector& c) { return model.Predict(c) == desired; };

  std::vector<Vector> cand(k, x);
  for (auto& c : cand) {
    for (int i = 0; i < d; ++i) {
      c(i) = std::clamp(x(i) + rng.Uniform(-cfg.init_radius, cfg.init_radius), cfg.lower, cfg.upper);
    }
  }

  std::vector<Vector> m(k, Vector::Zero(d));
  std::vector<Vector> v(k, Vector::Zero(d));
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  double prev_loss = INFINITY;
  const double inv_k = 1.0 / static_cast<double>(k);
  int step = 0;
  for (; step < cfg.max_steps; ++step) {
    std::vector<Vector> grads(k, Vector::Zero(d));
    double loss = 0.0;
    bool all_valid = true;
    for (size_t i = 0; i < k; ++i) {
      const Vector p = model.Probabilities(cand[i]);
      const int other = StrongestOther(p, desired);
      const double pd = std::max(p(desired), kProbFloor);
      const double po = std::max(p(other), kProbFloor);
      const double margin = std::log(pd) - std::log(po);
      if (margin <= 0) all_valid = false;
      if (margin < 1.0) {
        loss += inv_k * (1.0 - margin);
        Vector upstream = Vector::Zero(classes);
        upstream(desired) = -inv_k / pd;
        upstream(other) = inv_k / po;
        grads[i] += model.ProbabilityVjp(cand[i], upstream);
      }
      const Vector diff = cand[i] - x;
      loss += cfg.proximity_weight * inv_k * diff.lpNorm<1>();
      grads[i] += cfg.proximity_weight * inv_k * diff.unaryExpr(&Sign);
    }
    if (k > 1 && cfg.diversity_weight > 0) {
      const Matrix kernel = KernelMatrix(cand);
      Eigen::FullPivLU<Matrix> lu(kernel);
      const double det = lu.determinant();
      loss -= cfg.diversity_weight * det;
      if (lu.isInvertible()) {
        // d det / d K = det * K^-1 (K symmetric).
        const Matrix g = det * lu.inverse();
        for (size_t i = 0; i < k; ++i) {
          for (size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            const auto ii = static_cast<Eigen::Index>(i);
            const auto jj = static_cast<Eigen::Index>(j);
            const double kij = kernel(ii, jj);
            const Vector s = (cand[i] - cand[j]).unaryExpr(&Sign);
            // loss term is -lambda2 * det; dK_ij / dc_i = -K_ij^2 * sign(c_i - c_j).
            grads[i] += cfg.diversity_weight * 2.0 * g(ii, jj) * kij * kij * s;
          }
        }
      }
    }
    if (!std::isfinite(loss)) throw Error(ErrorClass::kExplanation, "DiCE loss became non-finite");
    if (step >= cfg.min_steps && all_valid && std::abs(prev_loss - loss) < cfg.convergence_tolerance) break;
    prev_loss = loss;

    const double c1 = 1.0 - std::pow(kBeta1, step + 1);
    const double c2 = 1.0 - std::pow(kBeta2, step + 1);
    for (size_t i = 0; i < k; ++i) {
      m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * grads[i];
      v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * grads[i].cwiseProduct(grads[i]);
      cand[i].array() -= cfg.learning_rate * (m[i].array() / c1) / ((v[i].array() / c2).sqrt() + kEps);
      cand[i] = cand[i].cwiseMax(cfg.lower).cwiseMin(cfg.upper);
    }
  }
  result.steps = step;

  if (cfg.posthoc_sparsity > 0) {
    for (auto& c : cand) {
      if (!is_valid(c)) continue;
      std::vector<int> order(static_cast<size_t>(d));
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return std::abs(c(a) - x(a)) < std::abs(c(b) - x(b));
      });
      for (int i : order) {
        const double change = std::abs(c(i) - x(i));
        if (change == 0.0) continue;
        if (change >= cfg.posthoc_sparsity) break;
        const double kept = c(i);
        c(i) = x(i);
        if (!is_valid(c)) c(i) = kept;
      }
    }
  }

  result.candidates = cand;
  for (const auto& c : cand) {
    if (is_valid(c)) result.counterfactuals.push_back(c);
  }
  result.success = !result.counterfactuals.empty();
  Vector freq = Vector::Zero(d);
  for (const auto& c : result.counterfactuals) {
    for (int i = 0; i < d; ++i) {
      if (std::abs(c(i) - x(i)) > cfg.change_tolerance) freq(i) += 1.0;
    }
  }
  if (result.success) freq /= static_cast<double>(result.counterfactuals.size());
  result.explanation = MakeExplanation(std::move(freq), Method::kDice, rng.seed());
  return result;
}

}  // namespace xailab
