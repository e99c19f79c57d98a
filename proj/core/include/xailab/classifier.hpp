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

#include "xailab/dataset.hpp"

namespace xailab {

// What the explainers need from a model: class probabilities and the
// vector-Jacobian product of those probabilities with respect to the input.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual int input_dim() const = 0;
  virtual int num_classes() const = 0;
  virtual Vector Probabilities(const Vector& x) const = 0;

  // d(upstream . p(x)) / dx.
  virtual Vector ProbabilityVjp(const Vector& x, const Vector& upstream) const = 0;

  // One probability row per input row. The default loops over rows.
  virtual Matrix BatchProbabilities(const Matrix& rows) const;

  int Predict(const Vector& x) const;
};

}  // namespace xailab
