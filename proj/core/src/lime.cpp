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
#include "xailab/metrics.hpp"

namespace xailab {

void LimeConfig::Validate(int n_features) const {
  if (max_features < 1) throw Error(ErrorClass::kConfiguration, "max_features must be >= 1");
  if (n_samples < 10 * max_features) {
    throw Error(ErrorClass::kConfiguration,
                fmt::format("n_samples = {} is below 10 x max_features = {}", n_samples, 10 * max_features));
  }
  if (kernel_width && !(*kernel_width > 0)) {
    throw Error(ErrorClass::kConfiguration, "kernel width must be > 0");
  }
  if (!(noise_scale > 0)) throw Error(ErrorClass::kConfiguration, "noise_scale must be > 0");
  if (!(ridge >= 0)) throw Error(ErrorClass::kConfiguration, "ridge must be >= 0");
  if (n_features < 1) throw Error(ErrorClass::kConfiguration, "need at least one feature");
}

double LimeConfig::KernelWidth(int n_features) const {
  return kernel_width.value_or(0.75 * std::sqrt(static_cast<double>(n_features)));
}

Explanation LimeExplain(const Classifier& model, const Vector& x, const FeatureStats& train_stats,
                        const LimeConfig& cfg, RngStream& rng) {
  const int d = model.input_dim();
  cfg.Validate(d);
  if (x.size() != d || train_stats.std.size() != d) {
    throw Error(ErrorClass::kShape, "instance or training statistics do not match the model width");
  }
  const Eigen::Index n = cfg.n_samples;
  const double width = cfg.KernelWidth(d);

  // Row 0 is the instance itself.
  Matrix samples(n, d);
  samples.row(0) = x.transpose();
  for (Eigen::Index i = 1; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double v = x(j) + cfg.noise_scale * train_stats.std(j) * rng.Normal();
      samples(i, j) = std::clamp(v, 0.0, 1.0);
    }
  }
  const Matrix probs = model.BatchProbabilities(samples);
  Eigen::Index target = 0;
  probs.row(0).maxCoeff(&target);
  const Vector y = probs.col(target);

  Vector w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double dist2 = (samples.row(i) - x.transpose()).squaredNorm();
    w(i) = std::exp(-dist2 / (width * width));
  }
  const double w_sum = w.sum();

  if (y.maxCoeff() - y.minCoeff() < 1e-15) {
    Explanation e = MakeExplanation(Vector::Zero(d), Method::kLime, rng.seed());
    e.degenerate = true;
    return e;
  }

  // Weighted ridge with an unpenalized intercept: center by weighted means.
  const Vector z_mean = (samples.transpose() * w) / w_sum;
  const double y_mean = w.dot(y) / w_sum;
  Matrix zc = samples.rowwise() - z_mean.transpose();
  const Vector yc = y.array() - y_mean;
  const Matrix zw = zc.array().colwise() * w.array();
  Matrix normal = zw.transpose() * zc;
  normal.diagonal().array() += cfg.ridge;
  const Vector rhs = zw.transpose() * yc;

  Eigen::LDLT<Matrix> ldlt(normal);
  const Vector diag = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || diag.minCoeff() <= 1e-12 * std::max(1.0, diag.maxCoeff())) {
    throw Error(ErrorClass::kExplanation, "LIME normal equations are singular");
  }
  const Vector coef = ldlt.solve(rhs);
  if (!coef.allFinite()) throw Error(ErrorClass::kExplanation, "LIME regression produced non-finite weights");

  Vector raw = Vector::Zero(d);
  for (size_t j : TopK(coef.cwiseAbs(), static_cast<size_t>(std::min(cfg.max_features, d)))) {
    raw(static_cast<Eigen::Index>(j)) = coef(static_cast<Eigen::Index>(j));
  }
  return MakeExplanation(std::move(raw), Method::kLime, rng.seed());
}

}  // namespace xailab
