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

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "xailab/dataset.hpp"

namespace xailab {

enum class MaskScope { kPerCluster, kPerInstance };

// Which features generated the label. `weights`, when present, is nonzero
// exactly on the relevant features.
struct GroundTruthMask {
  std::vector<bool> relevant;
  std::optional<Vector> weights;
  MaskScope scope = MaskScope::kPerInstance;

  size_t size() const { return relevant.size(); }
  std::vector<size_t> RelevantIndices() const;
  void Validate() const;
};

// Isotropic Gaussian clusters. Each cluster's center is offset by
// +/- separation on `relevant_per_cluster` randomly chosen coordinates
// and zero elsewhere; the class label is the cluster index parity.
struct SynthGaussSpec {
  int n_clusters = 5;
  int points_per_cluster = 1000;
  int n_features = 20;
  int relevant_per_cluster = 5;
  double separation = 3.0;
  double noise = 0.5;
  uint64_t seed = 0;

  void Validate() const;
};

struct SynthGaussData {
  FeatureMatrix data;
  std::vector<int> cluster;                    // per instance
  std::vector<GroundTruthMask> cluster_masks;  // per cluster
  Matrix centers;                              // n_clusters x n_features

  const GroundTruthMask& MaskFor(size_t instance) const {
    return cluster_masks[static_cast<size_t>(cluster[instance])];
  }
};

SynthGaussData SynthGauss(const SynthGaussSpec& spec);

// x ~ U[0,1]^d, label ~ Bernoulli(sigmoid(w.x + b + noise * N(0,1))).
// When `weights` is absent, w_j = +/- weight_scale * U[0.5, 1.5] on the
// support; b centers the logit at x = 0.5.
struct SynthLogisticSpec {
  int n_features = 20;
  std::vector<int> support{0, 1, 2, 3, 4};
  int n_instances = 2000;
  double noise = 0.0;
  double weight_scale = 10.0;
  std::optional<Vector> weights;
  uint64_t seed = 0;

  void Validate() const;
};

struct SynthLogisticData {
  FeatureMatrix data;
  GroundTruthMask mask;
  Vector weights;
  double bias = 0.0;
};

SynthLogisticData SynthLogistic(const SynthLogisticSpec& spec);

struct MinMaxTransform {
  Vector min;
  Vector max;

  // Constant columns map to 0.
  FeatureMatrix Apply(const FeatureMatrix& data) const;
  Vector Apply(const Vector& x) const;
};

struct Normalized {
  FeatureMatrix data;
  MinMaxTransform transform;
};

Normalized NormalizeMinMax(const FeatureMatrix& data);

struct DataSplit {
  FeatureMatrix train;
  FeatureMatrix validation;
  FeatureMatrix test;
  std::vector<size_t> train_indices;
  std::vector<size_t> validation_indices;
  std::vector<size_t> test_indices;
};

// Per-class shuffled split. Train/validation counts are rounded per class;
// the test split takes the remainder.
DataSplit SplitStratified(const FeatureMatrix& data, std::array<double, 3> fractions,
                          uint64_t seed);

// Sidecar listing, per mask, feature name -> {relevant, weight}. When
// `assignment` is non-empty it maps each instance to a mask index.
struct MaskFile {
  std::vector<std::string> feature_names;
  std::vector<GroundTruthMask> masks;
  std::vector<int> assignment;
};

void WriteMasks(const MaskFile& masks, const std::string& path);
MaskFile ReadMasks(const std::string& path);

}  // namespace xailab
