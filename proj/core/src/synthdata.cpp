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

#include "xailab/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <fmt/format.h>
#include <json.hpp>

#include "csv_util.hpp"
#include "xailab/error.hpp"
#include "xailab/rng.hpp"

namespace xailab {

std::vector<size_t> GroundTruthMask::RelevantIndices() const {
  std::vector<size_t> out;
  for (size_t j = 0; j < relevant.size(); ++j) {
    if (relevant[j]) out.push_back(j);
  }
  return out;
}

void GroundTruthMask::Validate() const {
  if (std::none_of(relevant.begin(), relevant.end(), [](bool b) { return b; })) {
    throw Error(ErrorClass::kConfiguration, "ground-truth mask has no relevant feature");
  }
  if (weights) {
    if (static_cast<size_t>(weights->size()) != relevant.size()) {
      throw Error(ErrorClass::kShape, "mask weights and relevance flags differ in length");
    }
    for (size_t j = 0; j < relevant.size(); ++j) {
      const bool nonzero = (*weights)(static_cast<Eigen::Index>(j)) != 0.0;
      if (nonzero != relevant[j]) {
        throw Error(ErrorClass::kConfiguration,
                    fmt::format("mask weight of feature {} disagrees with its relevance flag", j));
      }
    }
  }
}

// ---------------------------------------------------------------------------

void SynthGaussSpec::Validate() const {
  if (n_clusters < 2) throw Error(ErrorClass::kConfiguration, "n_clusters must be >= 2");
  if (points_per_cluster < 1) throw Error(ErrorClass::kConfiguration, "points_per_cluster must be >= 1");
  if (n_features < 1) throw Error(ErrorClass::kConfiguration, "n_features must be >= 1");
  if (relevant_per_cluster < 1) {
    throw Error(ErrorClass::kConfiguration, "relevant_per_cluster must be >= 1");
  }
  if (relevant_per_cluster > n_features) {
    throw Error(ErrorClass::kConfiguration, "relevant_per_cluster exceeds n_features");
  }
  if (!(noise >= 0) || !(separation > 0)) {
    throw Error(ErrorClass::kConfiguration, "noise must be >= 0 and separation > 0");
  }
  if (separation < 3.0 * noise) {
    throw Error(ErrorClass::kConfiguration,
                fmt::format("separation {} is below 3x the within-cluster std {}", separation, noise));
  }
  // Distinct (coordinate set, sign) patterns must exist for every cluster.
  double patterns = std::pow(2.0, relevant_per_cluster);
  for (int i = 0; i < relevant_per_cluster; ++i) {
    patterns *= static_cast<double>(n_features - i) / (i + 1);
  }
  if (patterns < n_clusters) {
    throw Error(ErrorClass::kConfiguration, "too few distinct cluster patterns for n_clusters");
  }
}

SynthGaussData SynthGauss(const SynthGaussSpec& spec) {
  spec.Validate();
  RngStream rng(spec.seed);
  const int d = spec.n_features;
  SynthGaussData out;
  out.centers = Matrix::Zero(spec.n_clusters, d);
  std::set<std::vector<int>> seen;
  for (int c = 0; c < spec.n_clusters; ++c) {
    std::vector<int> pattern(static_cast<size_t>(d), 0);
    do {
      std::fill(pattern.begin(), pattern.end(), 0);
      std::vector<int> coords(static_cast<size_t>(d));
      std::iota(coords.begin(), coords.end(), 0);
      // Partial Fisher-Yates picks the relevant coordinates.
      for (int i = 0; i < spec.relevant_per_cluster; ++i) {
        const auto j = static_cast<size_t>(i) + rng.UniformIndex(static_cast<uint64_t>(d - i));
        std::swap(coords[static_cast<size_t>(i)], coords[j]);
        pattern[static_cast<size_t>(coords[static_cast<size_t>(i)])] = rng.Bernoulli(0.5) ? 1 : -1;
      }
    } while (seen.count(pattern) > 0);
    seen.insert(pattern);
    GroundTruthMask mask;
    mask.scope = MaskScope::kPerCluster;
    mask.relevant.assign(static_cast<size_t>(d), false);
    Vector w = Vector::Zero(d);
    for (int j = 0; j < d; ++j) {
      if (pattern[static_cast<size_t>(j)] != 0) {
        mask.relevant[static_cast<size_t>(j)] = true;
        w(j) = pattern[static_cast<size_t>(j)] * spec.separation;
        out.centers(c, j) = w(j);
      }
    }
    mask.weights = w;
    out.cluster_masks.push_back(std::move(mask));
  }
  const int n = spec.n_clusters * spec.points_per_cluster;
  out.data.feature_names = DefaultFeatureNames(static_cast<size_t>(d));
  out.data.data.resize(n, d);
  out.data.labels.reserve(static_cast<size_t>(n));
  out.cluster.reserve(static_cast<size_t>(n));
  int row = 0;
  for (int c = 0; c < spec.n_clusters; ++c) {
    for (int p = 0; p < spec.points_per_cluster; ++p, ++row) {
      for (int j = 0; j < d; ++j) out.data.data(row, j) = out.centers(c, j) + spec.noise * rng.Normal();
      out.data.labels.push_back(c % 2);
      out.cluster.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void SynthLogisticSpec::Validate() const {
  if (n_features < 1) throw Error(ErrorClass::kConfiguration, "n_features must be >= 1");
  if (support.empty()) throw Error(ErrorClass::kConfiguration, "support must be non-empty");
  std::set<int> unique;
  for (int j : support) {
    if (j < 0 || j >= n_features) {
      throw Error(ErrorClass::kConfiguration, fmt::format("support index {} outside [0, {})", j, n_features));
    }
    unique.insert(j);
  }
  if (unique.size() != support.size()) {
    throw Error(ErrorClass::kConfiguration, "support has duplicate indices");
  }
  if (n_instances < 1) throw Error(ErrorClass::kConfiguration, "n_instances must be >= 1");
  if (!(noise >= 0)) throw Error(ErrorClass::kConfiguration, "noise must be >= 0");
  if (weights) {
    if (weights->size() != n_features) {
      throw Error(ErrorClass::kShape, "explicit weights must have n_features entries");
    }
    for (int j = 0; j < n_features; ++j) {
      const bool in_support = unique.count(j) > 0;
      if (in_support != ((*weights)(j) != 0.0)) {
        throw Error(ErrorClass::kConfiguration,
                    fmt::format("weight of feature {} must be nonzero exactly on the support", j));
      }
    }
  } else if (!(weight_scale > 0)) {
    throw Error(ErrorClass::kConfiguration, "weight_scale must be > 0");
  }
}

SynthLogisticData SynthLogistic(const SynthLogisticSpec& spec) {
  spec.Validate();
  RngStream rng(spec.seed);
  const int d = spec.n_features;
  SynthLogisticData out;
  if (spec.weights) {
    out.weights = *spec.weights;
  } else {
    out.weights = Vector::Zero(d);
    for (int j : spec.support) {
      const double sign = rng.Bernoulli(0.5) ? 1.0 : -1.0;
      out.weights(j) = sign * spec.weight_scale * rng.Uniform(0.5, 1.5);
    }
  }
  out.bias = -0.5 * out.weights.sum();
  out.mask.scope = MaskScope::kPerInstance;
  out.mask.relevant.assign(static_cast<size_t>(d), false);
  for (int j : spec.support) out.mask.relevant[static_cast<size_t>(j)] = true;
  out.mask.weights = out.weights;

  out.data.feature_names = DefaultFeatureNames(static_cast<size_t>(d));
  out.data.data.resize(spec.n_instances, d);
  out.data.labels.reserve(static_cast<size_t>(spec.n_instances));
  for (int i = 0; i < spec.n_instances; ++i) {
    for (int j = 0; j < d; ++j) out.data.data(i, j) = rng.Uniform();
    double logit = out.data.data.row(i).dot(out.weights) + out.bias;
    if (spec.noise > 0) logit += spec.noise * rng.Normal();
    const double p = 1.0 / (1.0 + std::exp(-logit));
    out.data.labels.push_back(rng.Bernoulli(p) ? 1 : 0);
  }
  return out;
}

// ---------------------------------------------------------------------------

Vector MinMaxTransform::Apply(const Vector& x) const {
  if (x.size() != min.size()) throw Error(ErrorClass::kShape, "min-max transform width mismatch");
  Vector out(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double range = max(j) - min(j);
    out(j) = range > 0 ? (x(j) - min(j)) / range : 0.0;
  }
  return out;
}

FeatureMatrix MinMaxTransform::Apply(const FeatureMatrix& data) const {
  if (data.data.cols() != min.size()) throw Error(ErrorClass::kShape, "min-max transform width mismatch");
  FeatureMatrix out = data;
  for (Eigen::Index j = 0; j < data.data.cols(); ++j) {
    const double range = max(j) - min(j);
    if (range > 0) {
      out.data.col(j) = (data.data.col(j).array() - min(j)) / range;
    } else {
      out.data.col(j).setZero();
    }
  }
  return out;
}

Normalized NormalizeMinMax(const FeatureMatrix& data) {
  if (!data.data.allFinite()) throw Error(ErrorClass::kInput, "cannot normalize non-finite values");
  Normalized out;
  if (data.rows() == 0) {
    out.transform.min = Vector::Zero(data.data.cols());
    out.transform.max = Vector::Zero(data.data.cols());
  } else {
    out.transform.min = data.data.colwise().minCoeff().transpose();
    out.transform.max = data.data.colwise().maxCoeff().transpose();
  }
  out.data = out.transform.Apply(data);
  return out;
}

// ---------------------------------------------------------------------------

DataSplit SplitStratified(const FeatureMatrix& data, std::array<double, 3> fractions, uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0)) throw Error(ErrorClass::kConfiguration, "split fractions must be >= 0");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw Error(ErrorClass::kConfiguration,
                fmt::format("split fractions sum to {}, expected 1",
                            fractions[0] + fractions[1] + fractions[2]));
  }
  RngStream rng(seed);
  DataSplit split;
  const int classes = data.NumClasses();
  for (int c = 0; c < classes; ++c) {
    std::vector<size_t> idx = data.IndicesOfClass(c);
    if (idx.empty()) continue;
    if (idx.size() < 3) {
      throw Error(ErrorClass::kSplit,
                  fmt::format("class {} has {} instances; at least 3 are required", c, idx.size()));
    }
    rng.Shuffle(idx.begin(), idx.end());
    const auto n = static_cast<double>(idx.size());
    const auto n_train = static_cast<size_t>(std::llround(fractions[0] * n));
    const auto n_val = std::min(idx.size() - n_train, static_cast<size_t>(std::llround(fractions[1] * n)));
    split.train_indices.insert(split.train_indices.end(), idx.begin(), idx.begin() + static_cast<long>(n_train));
    split.validation_indices.insert(split.validation_indices.end(), idx.begin() + static_cast<long>(n_train),
                                    idx.begin() + static_cast<long>(n_train + n_val));
    split.test_indices.insert(split.test_indices.end(), idx.begin() + static_cast<long>(n_train + n_val),
                              idx.end());
  }
  std::sort(split.train_indices.begin(), split.train_indices.end());
  std::sort(split.validation_indices.begin(), split.validation_indices.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  split.train = data.Subset(split.train_indices);
  split.validation = data.Subset(split.validation_indices);
  split.test = data.Subset(split.test_indices);
  return split;
}

// ---------------------------------------------------------------------------

void WriteMasks(const MaskFile& masks, const std::string& path) {
  nlohmann::json doc;
  doc["format"] = "xailab-masks";
  doc["format_version"] = 1;
  doc["feature_names"] = masks.feature_names;
  nlohmann::json list = nlohmann::json::array();
  for (const auto& mask : masks.masks) {
    nlohmann::json features = nlohmann::json::object();
    for (size_t j = 0; j < mask.relevant.size(); ++j) {
      nlohmann::json entry = {{"relevant", static_cast<bool>(mask.relevant[j])}};
      if (mask.weights) entry["weight"] = (*mask.weights)(static_cast<Eigen::Index>(j));
      features[masks.feature_names[j]] = entry;
    }
    list.push_back({{"scope", mask.scope == MaskScope::kPerCluster ? "per_cluster" : "per_instance"},
                    {"features", features}});
  }
  doc["masks"] = std::move(list);
  doc["assignment"] = masks.assignment;
  WriteTextFile(path, doc.dump(1));
}

MaskFile ReadMasks(const std::string& path) {
  MaskFile out;
  try {
    const auto doc = nlohmann::json::parse(ReadTextFile(path));
    if (doc.value("format", "") != "xailab-masks") throw Error(ErrorClass::kLoad, "not a mask file");
    out.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    for (const auto& jm : doc.at("masks")) {
      GroundTruthMask mask;
      mask.scope = jm.at("scope").get<std::string>() == "per_cluster" ? MaskScope::kPerCluster
                                                                      : MaskScope::kPerInstance;
      const auto& features = jm.at("features");
      bool has_weights = true;
      Vector w = Vector::Zero(static_cast<Eigen::Index>(out.feature_names.size()));
      for (size_t j = 0; j < out.feature_names.size(); ++j) {
        const auto& entry = features.at(out.feature_names[j]);
        mask.relevant.push_back(entry.at("relevant").get<bool>());
        if (entry.contains("weight")) {
          w(static_cast<Eigen::Index>(j)) = entry.at("weight").get<double>();
        } else {
          has_weights = false;
        }
      }
      if (has_weights) mask.weights = w;
      mask.Validate();
      out.masks.push_back(std::move(mask));
    }
    out.assignment = doc.at("assignment").get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorClass::kLoad, fmt::format("malformed mask file '{}': {}", path, e.what()));
  }
  return out;
}

}  // namespace xailab
