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
#include "xailab/metrics.hpp"

namespace xailab {

namespace {

void Orthogonalize(Vector& v, const Matrix& basis, Eigen::Index count) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index c = 0; c < count; ++c) v -= basis.col(c).dot(v) * basis.col(c);
  }
}

// Any unit vector orthogonal to the first `count` columns of `basis`.
Vector OrthogonalUnit(const Matrix& basis, Eigen::Index count, Eigen::Index d) {
  for (Eigen::Index i = 0; i < d; ++i) {
    Vector v = Vector::Unit(d, i);
    Orthogonalize(v, basis, count);
    if (v.norm() > 1e-6) return v.normalized();
  }
  throw Error(ErrorClass::kNumeric, "cannot complete an orthonormal basis");
}

}  // namespace

PcaResult PcaProject(const Matrix& rows, int n_components, const PcaOptions& options) {
  const Eigen::Index n = rows.rows();
  const Eigen::Index d = rows.cols();
  if (n < 2) throw Error(ErrorClass::kConfiguration, "PCA needs at least two vectors");
  if (n_components < 1 || n_components > d) {
    throw Error(ErrorClass::kConfiguration, fmt::format("n_components = {} must be in [1, {}]", n_components, d));
  }
  PcaResult out;
  out.mean = rows.colwise().mean().transpose();
  const Matrix centered = rows.rowwise() - out.mean.transpose();
  const Matrix cov = centered.transpose() * centered / static_cast<double>(n - 1);
  const double trace = cov.trace();
  const double scale = std::max(1e-300, cov.cwiseAbs().maxCoeff());

  out.components = Matrix::Zero(d, n_components);
  out.eigenvalues = Vector::Zero(n_components);
  Matrix deflated = cov;
  for (Eigen::Index c = 0; c < n_components; ++c) {
    Vector v = Vector::Ones(d);
    for (Eigen::Index i = 0; i < d; ++i) v(i) += 1e-3 * static_cast<double>(i + 1);
    Orthogonalize(v, out.components, c);
    if (v.norm() < 1e-12) v = OrthogonalUnit(out.components, c, d);
    v.normalize();
    double lambda = 0.0;
    bool converged = false;
    for (int it = 0; it < options.max_iterations; ++it) {
      Vector w = deflated * v;
      Orthogonalize(w, out.components, c);
      lambda = v.dot(w);
      const double residual = (w - lambda * v).norm();
      if (residual <= options.tolerance * scale) {
        converged = true;
        break;
      }
      const double norm = w.norm();
      if (norm <= options.tolerance * scale) {
        // Remaining spectrum is zero.
        lambda = 0.0;
        converged = true;
        break;
      }
      v = w / norm;
    }
    if (!converged) {
      throw Error(ErrorClass::kNumeric, fmt::format("power iteration did not converge for component {}", c));
    }
    lambda = std::max(lambda, 0.0);
    Eigen::Index peak = 0;
    v.cwiseAbs().maxCoeff(&peak);
    if (v(peak) < 0) v = -v;
    out.components.col(c) = v;
    out.eigenvalues(c) = lambda;
    deflated -= lambda * v * v.transpose();
  }
  out.explained_variance_ratio = trace > 0 ? Vector(out.eigenvalues / trace) : Vector::Zero(n_components);
  out.projected = centered * out.components;
  return out;
}

}  // namespace xailab
