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

#include "xailab/error.hpp"
#include "xailab/explainers.hpp"

namespace xailab {

namespace {

bool Flipped(const Classifier& model, const Vector& x, int original_class, const McLimeConfig& cfg) {
  const Vector p = model.Probabilities(x);
  Eigen::Index predicted = 0;
  p.maxCoeff(&predicted);
  if (cfg.desired_class) return predicted == *cfg.desired_class;
  return predicted != original_class && p(original_class) < cfg.threshold;
}

// Calls `visit` on every size-`size` combination of [0, n) in
// lexicographic order until it returns true.
template <typename Visit>
bool ForEachCombination(int n, int size, Visit&& visit) {
  if (size > n) return false;
  std::vector<int> idx(static_cast<size_t>(size));
  std::iota(idx.begin(), idx.end(), 0);
  while (true) {
    if (visit(idx)) return true;
    int pos = size - 1;
    while (pos >= 0 && idx[static_cast<size_t>(pos)] == n - size + pos) --pos;
    if (pos < 0) return false;
    ++idx[static_cast<size_t>(pos)];
    for (int q = pos + 1; q < size; ++q) idx[static_cast<size_t>(q)] = idx[static_cast<size_t>(q - 1)] + 1;
  }
}

}  // namespace

void McLimeConfig::Validate() const {
  if (!(step_fraction > 0)) throw Error(ErrorClass::kConfiguration, "step_fraction must be > 0");
  if (!(threshold > 0 && threshold < 1)) throw Error(ErrorClass::kConfiguration, "threshold must be in (0, 1)");
  if (max_group_size < 1) throw Error(ErrorClass::kConfiguration, "max_group_size must be >= 1");
  if (!(lower < upper)) throw Error(ErrorClass::kConfiguration, "feature bounds are empty");
}

std::optional<Vector> McLimeTryGroup(const Classifier& model, const Vector& x,
                                     const std::vector<int>& group, const Vector& direction,
                                     const Vector& step, int original_class,
                                     const McLimeConfig& cfg) {
  Vector cur = x;
  while (true) {
    bool moved = false;
    for (int j : group) {
      const double next = std::clamp(cur(j) + direction(j) * step(j), cfg.lower, cfg.upper);
      if (next != cur(j)) moved = true;
      cur(j) = next;
    }
    if (!moved) return std::nullopt;
    if (Flipped(model, cur, original_class, cfg)) return cur;
  }
}

McLimeResult McLime(const Classifier& model, const Vector& x, const Explanation& lime,
                    const FeatureStats& train_stats, const McLimeConfig& cfg) {
  cfg.Validate();
  const int d = model.input_dim();
  if (x.size() != d || lime.scores.size() != d || train_stats.std.size() != d) {
    throw Error(ErrorClass::kShape, "instance, explanation or statistics do not match the model width");
  }
  McLimeResult result;
  result.modified = x;
  const int original = model.Predict(x);
  if (cfg.desired_class && original == *cfg.desired_class) {
    result.success = true;
    result.explanation = MakeExplanation(Vector::Zero(d), Method::kMcLime, 0);
    return result;
  }

  const Vector step = cfg.step_fraction * train_stats.std;
  std::vector<int> candidates;
  for (int j = 0; j < d; ++j) {
    if (lime.scores(j) > 0 && step(j) > 0) candidates.push_back(j);
  }
  if (!(lime.scores.array() > 0).any()) {
    throw Error(ErrorClass::kExplanation, "LIME explanation has no nonzero features");
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](int a, int b) { return lime.scores(a) > lime.scores(b); });
  // Move against the sign of the feature's effect on the predicted class.
  Vector direction(d);
  for (int j = 0; j < d; ++j) direction(j) = lime.signed_raw(j) > 0 ? -1.0 : 1.0;

  const int n = static_cast<int>(candidates.size());
  std::vector<int> group;
  for (int size = 1; size <= cfg.max_group_size && !result.success; ++size) {
    ForEachCombination(n, size, [&](const std::vector<int>& idx) {
      group.clear();
      for (int i : idx) group.push_back(candidates[static_cast<size_t>(i)]);
      auto flipped = McLimeTryGroup(model, x, group, direction, step, original, cfg);
      if (!flipped) return false;
      result.success = true;
      result.features = group;
      result.modified = *flipped;
      for (int j : group) result.new_values.push_back((*flipped)(j));
      return true;
    });
  }

  Vector raw = Vector::Zero(d);
  for (int j : result.features) raw(j) = 1.0;
  result.explanation = MakeExplanation(std::move(raw), Method::kMcLime, 0);
  return result;
}

}  // namespace xailab
