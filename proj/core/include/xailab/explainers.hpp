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

#include <cstdint>
#include <optional>
#include <vector>

#include "xailab/classifier.hpp"
#include "xailab/dataset.hpp"
#include "xailab/explanation.hpp"
#include "xailab/rng.hpp"

namespace xailab {

// ---------------------------------------------------------------------------
// LIME: Gaussian perturbations around x, exponential proximity kernel on
// Euclidean distance, weighted ridge on the predicted-class probability,
// top-K coefficients kept.

struct LimeConfig {
  int n_samples = 5000;
  // Defaults to 0.75 * sqrt(d) when unset.
  std::optional<double> kernel_width;
  int max_features = 10;
  // Perturbation std = noise_scale * training std, per feature.
  double noise_scale = 1.0;
  double ridge = 1.0;

  void Validate(int n_features) const;
  double KernelWidth(int n_features) const;
};

Explanation LimeExplain(const Classifier& model, const Vector& x, const FeatureStats& train_stats,
                        const LimeConfig& cfg, RngStream& rng);

// ---------------------------------------------------------------------------
// Shapley family. The value of a coalition S is the mean, over background
// rows r, of p_t(x_S, r_{not S}) where t is the class predicted for x.

struct Background {
  Matrix rows;  // n_rows x d

  // Single reference row (training means).
  static Background Mean(const FeatureStats& stats);
  // `n` rows drawn without replacement from the data.
  static Background Sample(const FeatureMatrix& data, size_t n, RngStream& rng);
};

// Kernel weight of a coalition of size `coalition_size` among `n_features`
// players. Infinite for the empty and full coalitions.
double ShapKernelWeight(int n_features, int coalition_size);

struct KernelShapConfig {
  int n_samples = 2048;
  // Enumerate all 2^d - 2 proper coalitions. Also chosen automatically
  // when 2^d - 2 <= n_samples.
  bool enumerate_all = false;
};

Explanation KernelShapExplain(const Classifier& model, const Vector& x, const Background& background,
                              const KernelShapConfig& cfg, RngStream& rng);

struct PermShapConfig {
  // Each sampled permutation is walked forward and reversed.
  int n_permutations = 200;
  // Walk all d! permutations instead of sampling.
  bool exhaustive = false;
};

Explanation PermShapExplain(const Classifier& model, const Vector& x, const Background& background,
                            const PermShapConfig& cfg, RngStream& rng);

inline constexpr int kExactShapleyMaxFeatures = 12;

// Brute force over all 2^d coalitions; refuses d > 12.
Explanation ExactShapley(const Classifier& model, const Vector& x, const Background& background);

// ---------------------------------------------------------------------------
// CEM pertinent negative.

struct CemConfig {
  double kappa = 0.0;
  double beta = 0.1;
  double c_init = 1.0;
  int c_steps = 10;
  int max_iterations = 1000;
  double gradient_clip = 1000.0;
  double learning_rate = 0.01;
  // Only consumed by pertinent-positive search; kept for config parity.
  double no_info_val = -1.0;
  double lower = 0.0;
  double upper = 1.0;

  void Validate() const;
};

struct CemResult {
  bool success = false;
  Vector perturbed;  // best x + delta (x itself on failure)
  Explanation explanation;
  int original_class = -1;
  int new_class = -1;
  double best_c = 0.0;
};

CemResult CemPertinentNegative(const Classifier& model, const Vector& x,
                               const FeatureStats& train_stats, const CemConfig& cfg);

// ---------------------------------------------------------------------------
// DiCE: jointly optimized counterfactuals with a DPP diversity term.

struct DiceConfig {
  int k = 4;
  double proximity_weight = 0.5;  // lambda_1
  double diversity_weight = 1.0;  // lambda_2
  int max_steps = 5000;
  int min_steps = 100;
  double learning_rate = 0.05;
  double convergence_tolerance = 1e-5;
  double init_radius = 0.1;
  // A feature counts as changed when |c_i - x_i| exceeds this.
  double change_tolerance = 1e-3;
  // Changes smaller than this are reverted afterwards when the
  // counterfactual stays valid; 0 disables.
  double posthoc_sparsity = 0.1;
  double lower = 0.0;
  double upper = 1.0;

  void Validate() const;
};

struct DiceResult {
  bool success = false;
  std::vector<Vector> counterfactuals;  // valid ones only
  std::vector<Vector> candidates;       // all final candidates
  Explanation explanation;
  int original_class = -1;
  int desired_class = -1;
  int steps = 0;
};

// det(K) with K_ij = 1 / (1 + ||c_i - c_j||_1).
double DppDiversity(const std::vector<Vector>& candidates);

DiceResult DiceCounterfactuals(const Classifier& model, const Vector& x, const DiceConfig& cfg,
                               RngStream& rng);

// ---------------------------------------------------------------------------
// MC-LIME: smallest group of LIME-selected features whose stepped change
// flips the prediction.

struct McLimeConfig {
  double step_fraction = 0.1;  // step = fraction * training std
  double threshold = 0.5;
  int max_group_size = 3;
  // Without a desired class any class other than the current prediction
  // counts as a flip.
  std::optional<int> desired_class;
  double lower = 0.0;
  double upper = 1.0;

  void Validate() const;
};

struct McLimeResult {
  bool success = false;
  std::vector<int> features;
  std::vector<double> new_values;
  Vector modified;
  Explanation explanation;
};

// Tries one feature group: walks every feature in `group` by `step` in
// its direction until the prediction flips or all hit the bounds.
std::optional<Vector> McLimeTryGroup(const Classifier& model, const Vector& x,
                                     const std::vector<int>& group, const Vector& direction,
                                     const Vector& step, int original_class,
                                     const McLimeConfig& cfg);

McLimeResult McLime(const Classifier& model, const Vector& x, const Explanation& lime,
                    const FeatureStats& train_stats, const McLimeConfig& cfg);

}  // namespace xailab
