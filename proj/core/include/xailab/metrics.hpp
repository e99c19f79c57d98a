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

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xailab/dataset.hpp"
#include "xailab/explanation.hpp"
#include "xailab/synthdata.hpp"

namespace xailab {

// Fractional ranks (ties get their average rank), 1-based.
Vector FractionalRanks(const Vector& values);

// Indices of the k largest values; ties broken by ascending index.
std::vector<size_t> TopK(const Vector& values, size_t k);

// Pearson correlation of fractional ranks. Throws kMetric when either
// vector is constant.
double SpearmanRho(const Vector& a, const Vector& b);

// sqrt of the base-2 Jensen-Shannon divergence after renormalizing both
// vectors to sum to one. All-zero vectors are treated as uniform.
double JensenShannonDistance(const Vector& a, const Vector& b);

double JaccardTopK(const Vector& a, const Vector& b, size_t k);

struct PcaResult {
  Vector mean;
  Matrix components;   // d x n_components, unit columns
  Vector eigenvalues;  // covariance eigenvalues, descending
  Vector explained_variance_ratio;
  Matrix projected;    // n x n_components
};

struct PcaOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

// Covariance eigenvectors by power iteration with deflation. Each
// component's largest-magnitude entry is made positive.
PcaResult PcaProject(const Matrix& rows, int n_components = 2, const PcaOptions& options = {});

struct FaithfulnessScores {
  double feature_agreement = 0.0;
  std::optional<double> rank_agreement;
  std::optional<double> pairwise_rank_agreement;
  double ground_truth_alignment = 0.0;
};

// FA/RA/PRA against the ground truth ranked by |weight| (relevance when no
// weights), GTA as per-feature agreement between "score > 1e-6" and the
// relevance flag. RA and PRA need weights.
FaithfulnessScores Faithfulness(const Explanation& explanation, const GroundTruthMask& truth,
                                size_t k);

struct VarianceProfile {
  Vector stds;  // per feature, sample std across runs
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double threshold = 0.01;
  int count_above = 0;  // features with std >= threshold

  static VarianceProfile FromStds(Vector stds, double threshold);
};

// Explanations of one instance by one method across M >= 2 runs.
VarianceProfile ImportanceVariance(std::span<const Explanation> runs, double threshold = 0.01);

// Fraction of features whose mean importance is >= threshold.
double ImportantFeatureFraction(std::span<const Explanation> explanations,
                                double threshold = 0.01);

// Linear-interpolation quantile (q in [0, 1]).
double Quantile(std::vector<double> values, double q);

struct PairwiseMatrix {
  std::string metric;
  std::vector<std::string> methods;
  Matrix values;
  // Number of instances that contributed to each cell.
  Eigen::MatrixXi counts;
};

using PairMetric = std::function<double(const Vector&, const Vector&)>;

// Mean metric over instances. per_method[m][i] is method m's explanation of
// instance i, or nullopt when that method produced none. Instances where
// the metric throws kMetric are skipped for that pair.
PairwiseMatrix ComputePairwise(const std::string& metric_name,
                               const std::vector<std::string>& methods,
                               const std::vector<std::vector<std::optional<Vector>>>& per_method,
                               const PairMetric& metric);

// method,<method columns> with one row per method.
std::string PairwiseCsv(const PairwiseMatrix& matrix);

// One row per named profile: name,median,q1,q3,threshold,count_above,
// then one std column per feature.
std::string VarianceCsv(const std::vector<std::pair<std::string, VarianceProfile>>& profiles,
                        const std::vector<std::string>& feature_names);

}  // namespace xailab
