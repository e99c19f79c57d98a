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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace xailab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Instances x named features with one class label per row.
struct FeatureMatrix {
  Matrix data;
  std::vector<int> labels;
  std::vector<std::string> feature_names;

  size_t rows() const { return static_cast<size_t>(data.rows()); }
  size_t cols() const { return static_cast<size_t>(data.cols()); }
  Vector Row(size_t i) const { return data.row(static_cast<Eigen::Index>(i)).transpose(); }

  // Largest label + 1 (0 when empty).
  int NumClasses() const;
  // Throws kInput on non-finite values, negative labels, or name/column
  // count mismatch.
  void Validate() const;
  FeatureMatrix Subset(std::span<const size_t> indices) const;
  std::vector<size_t> IndicesOfClass(int label) const;
};

FeatureMatrix Concat(const FeatureMatrix& a, const FeatureMatrix& b);

// "f00", "f01", ...
std::vector<std::string> DefaultFeatureNames(size_t n_features);

// Per-column summary statistics. std is the population standard deviation.
struct FeatureStats {
  Vector mean;
  Vector std;

  static FeatureStats FromData(const FeatureMatrix& data);
};

// CSV with header = feature names + "label". Values are written in
// shortest round-trip form.
void WriteCsv(const FeatureMatrix& data, const std::string& path);
FeatureMatrix ReadCsv(const std::string& path);

}  // namespace xailab
