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
#include <bit>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "xailab/error.hpp"
#include "xailab/explainers.hpp"

namespace xailab {

namespace {

// v(S) = mean over background rows r of p_t(x_S, r_{not S}).
class CoalitionValue {
 public:
  CoalitionValue(const Classifier& model, const Vector& x, const Background& background)
      : model_(model), x_(x), background_(background.rows) {
    if (x.size() != model.input_dim()) {
      throw Error(ErrorClass::kShape,
                  fmt::format("instance has {} features, model expects {}", x.size(), model.input_dim()));
    }
    if (background_.rows() < 1 || background_.cols() != x.size()) {
      throw Error(ErrorClass::kShape, "background rows do not match the instance width");
    }
    target_ = model.Predict(x);
  }

  int target() const { return target_; }

  // `masks` is n x d with 1 = feature taken from x.
  Vector Evaluate(const Matrix& masks) const {
    const Eigen::Index n = masks.rows();
    const Eigen::Index d = x_.size();
    const Eigen::Index r = background_.rows();
    Vector out = Vector::Zero(n);
    constexpr Eigen::Index kChunkRows = 8192;
    const Eigen::Index masks_per_chunk = std::max<Eigen::Index>(1, kChunkRows / r);
    for (Eigen::Index start = 0; start < n; start += masks_per_chunk) {
      const Eigen::Index m = std::min(masks_per_chunk, n - start);
      Matrix rows(m * r, d);
      for (Eigen::Index i = 0; i < m; ++i) {
        const auto mask = masks.row(start + i).array();
        for (Eigen::Index b = 0; b < r; ++b) {
          rows.row(i * r + b) =
              (mask * x_.transpose().array() + (1.0 - mask) * background_.row(b).array()).matrix();
        }
      }
      const Matrix probs = model_.BatchProbabilities(rows);
      for (Eigen::Index i = 0; i < m; ++i) {
        out(start + i) = probs.col(target_).segment(i * r, r).mean();
      }
    }
    return out;
  }

 private:
  const Classifier& model_;
  const Vector& x_;
  const Matrix& background_;
  int target_ = 0;
};

double Binomial(int n, int k) {
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}

}  // namespace

Background Background::Mean(const FeatureStats& stats) {
  return Background{stats.mean.transpose()};
}

Background Background::Sample(const FeatureMatrix& data, size_t n, RngStream& rng) {
  if (data.rows() == 0) throw Error(ErrorClass::kSampling, "cannot sample a background from no data");
  n = std::min(n, data.rows());
  std::vector<size_t> idx(data.rows());
  std::iota(idx.begin(), idx.end(), size_t{0});
  rng.Shuffle(idx.begin(), idx.end());
  Background bg{Matrix(static_cast<Eigen::Index>(n), data.data.cols())};
  for (size_t i = 0; i < n; ++i) {
    bg.rows.row(static_cast<Eigen::Index>(i)) = data.data.row(static_cast<Eigen::Index>(idx[i]));
  }
  return bg;
}

double ShapKernelWeight(int n_features, int coalition_size) {
  if (coalition_size <= 0 || coalition_size >= n_features) return INFINITY;
  return (n_features - 1) /
         (Binomial(n_features, coalition_size) * coalition_size * (n_features - coalition_size));
}

Explanation KernelShapExplain(const Classifier& model, const Vector& x, const Background& background,
                              const KernelShapConfig& cfg, RngStream& rng) {
  const int d = model.input_dim();
  if (d < 2) throw Error(ErrorClass::kConfiguration, "KernelSHAP needs at least 2 features");
  if (cfg.n_samples < 2) throw Error(ErrorClass::kConfiguration, "KernelSHAP needs n_samples >= 2");
  const CoalitionValue value(model, x, background);
  const bool enumerate = cfg.enumerate_all || (d < 31 && (1LL << d) - 2 <= cfg.n_samples);
  if (enumerate && d > 20) {
    throw Error(ErrorClass::kConfiguration, "full coalition enumeration is limited to 20 features");
  }

  Matrix masks;
  Vector weights;
  if (enumerate) {
    const int64_t count = (int64_t{1} << d) - 2;
    masks.resize(count, d);
    weights.resize(count);
    for (int64_t code = 1; code <= count; ++code) {
      int size = 0;
      for (int j = 0; j < d; ++j) {
        const bool on = ((code >> j) & 1) != 0;
        masks(code - 1, j) = on ? 1.0 : 0.0;
        size += on ? 1 : 0;
      }
      weights(code - 1) = ShapKernelWeight(d, size);
    }
  } else {
    // Sizes are drawn in proportion to their total kernel mass, so each
    // sample then carries equal weight. Samples come in complement pairs.
    std::vector<double> size_cdf(static_cast<size_t>(d - 1));
    double total = 0.0;
    for (int s = 1; s < d; ++s) {
      total += static_cast<double>(d - 1) / (s * (d - s));
      size_cdf[static_cast<size_t>(s - 1)] = total;
    }
    const int pairs = (cfg.n_samples + 1) / 2;
    masks = Matrix::Zero(2 * pairs, d);
    weights = Vector::Ones(2 * pairs);
    std::vector<int> coords(static_cast<size_t>(d));
    for (int p = 0; p < pairs; ++p) {
      const double u = rng.Uniform() * total;
      const int size = 1 + static_cast<int>(std::lower_bound(size_cdf.begin(), size_cdf.end(), u) -
                                            size_cdf.begin());
      std::iota(coords.begin(), coords.end(), 0);
      for (int i = 0; i < size; ++i) {
        const auto j = static_cast<size_t>(i) + rng.UniformIndex(static_cast<uint64_t>(d - i));
        std::swap(coords[static_cast<size_t>(i)], coords[j]);
        masks(2 * p, coords[static_cast<size_t>(i)]) = 1.0;
      }
      masks.row(2 * p + 1) = (1.0 - masks.row(2 * p).array()).matrix();
    }
  }

  Matrix ends(2, d);
  ends.row(0).setZero();
  ends.row(1).setOnes();
  const Vector end_values = value.Evaluate(ends);
  const double base = end_values(0);
  const double delta = end_values(1) - base;
  const Vector v = value.Evaluate(masks);

  // Efficiency is enforced by eliminating the last feature:
  // phi_last = delta - sum(phi_rest).
  const Eigen::Index m = d - 1;
  const Matrix design = masks.leftCols(m).colwise() - masks.col(m);
  const Vector y = (v.array() - base - masks.col(m).array() * delta).matrix();
  const Matrix weighted = design.array().colwise() * weights.array();
  const Matrix normal = weighted.transpose() * design;
  const Vector rhs = weighted.transpose() * y;
  Eigen::LDLT<Matrix> ldlt(normal);
  const Vector diag = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || diag.minCoeff() <= 1e-12 * std::max(1e-300, diag.maxCoeff())) {
    throw Error(ErrorClass::kExplanation, "KernelSHAP weighted least-squares system is singular");
  }
  const Vector phi_rest = ldlt.solve(rhs);
  Vector phi(d);
  phi.head(m) = phi_rest;
  phi(m) = delta - phi_rest.sum();
  if (!phi.allFinite()) throw Error(ErrorClass::kExplanation, "KernelSHAP produced non-finite values");
  return MakeExplanation(std::move(phi), Method::kKernelShap, rng.seed());
}

Explanation PermShapExplain(const Classifier& model, const Vector& x, const Background& background,
                            const PermShapConfig& cfg, RngStream& rng) {
  const int d = model.input_dim();
  const CoalitionValue value(model, x, background);
  std::vector<std::vector<int>> walks;
  std::vector<int> perm(static_cast<size_t>(d));
  std::iota(perm.begin(), perm.end(), 0);
  if (cfg.exhaustive) {
    if (d > 9) throw Error(ErrorClass::kConfiguration, "exhaustive permutations are limited to 9 features");
    // Reversed orders are themselves in the set, so each is walked once.
    do {
      walks.push_back(perm);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    if (cfg.n_permutations < 1) throw Error(ErrorClass::kConfiguration, "n_permutations must be >= 1");
    for (int p = 0; p < cfg.n_permutations; ++p) {
      std::iota(perm.begin(), perm.end(), 0);
      rng.Shuffle(perm.begin(), perm.end());
      walks.push_back(perm);
      walks.emplace_back(perm.rbegin(), perm.rend());
    }
  }

  // Coalitions along a walk: step k has the first k features switched on.
  const auto steps = static_cast<Eigen::Index>(d + 1);
  Vector phi = Vector::Zero(d);
  constexpr size_t kWalksPerBatch = 256;
  for (size_t start = 0; start < walks.size(); start += kWalksPerBatch) {
    const size_t count = std::min(kWalksPerBatch, walks.size() - start);
    Matrix masks = Matrix::Zero(static_cast<Eigen::Index>(count) * steps, d);
    for (size_t w = 0; w < count; ++w) {
      const auto& order = walks[start + w];
      const auto base = static_cast<Eigen::Index>(w) * steps;
      for (Eigen::Index k = 1; k < steps; ++k) {
        masks.row(base + k) = masks.row(base + k - 1);
        masks(base + k, order[static_cast<size_t>(k - 1)]) = 1.0;
      }
    }
    const Vector v = value.Evaluate(masks);
    for (size_t w = 0; w < count; ++w) {
      const auto& order = walks[start + w];
      const auto base = static_cast<Eigen::Index>(w) * steps;
      for (Eigen::Index k = 1; k < steps; ++k) {
        phi(order[static_cast<size_t>(k - 1)]) += v(base + k) - v(base + k - 1);
      }
    }
  }
  phi /= static_cast<double>(walks.size());
  return MakeExplanation(std::move(phi), Method::kPermShap, rng.seed());
}

Explanation ExactShapley(const Classifier& model, const Vector& x, const Background& background) {
  const int d = model.input_dim();
  if (d > kExactShapleyMaxFeatures) {
    throw Error(ErrorClass::kRefusal, fmt::format("exact Shapley refuses d = {} > {}", d,
                                                  kExactShapleyMaxFeatures));
  }
  const CoalitionValue value(model, x, background);
  const int64_t count = int64_t{1} << d;
  Matrix masks(count, d);
  for (int64_t code = 0; code < count; ++code) {
    for (int j = 0; j < d; ++j) masks(code, j) = ((code >> j) & 1) != 0 ? 1.0 : 0.0;
  }
  const Vector v = value.Evaluate(masks);
  // |S|! (d - |S| - 1)! / d!
  std::vector<double> weight(static_cast<size_t>(d));
  for (int s = 0; s < d; ++s) weight[static_cast<size_t>(s)] = 1.0 / (d * Binomial(d - 1, s));
  Vector phi = Vector::Zero(d);
  for (int64_t code = 0; code < count; ++code) {
    const int size = std::popcount(static_cast<uint64_t>(code));
    for (int i = 0; i < d; ++i) {
      if (((code >> i) & 1) != 0) continue;
      phi(i) += weight[static_cast<size_t>(size)] * (v(code | (int64_t{1} << i)) - v(code));
    }
  }
  return MakeExplanation(std::move(phi), Method::kExactShapley, 0);
}

}  // namespace xailab
