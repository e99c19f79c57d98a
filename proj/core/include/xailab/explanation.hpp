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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "xailab/dataset.hpp"

namespace xailab {

enum class Method {
  kLime,
  kKernelShap,
  kPermShap,
  kCem,
  kDice,
  kMcLime,
  kGating,
  kExactShapley,
  kRandom,
};

std::string_view ToString(Method method);
Method ParseMethod(std::string_view name);

struct Explanation {
  Vector scores;      // in [0, 1]
  Vector signed_raw;  // before normalization
  Method method = Method::kLime;
  int64_t instance_id = -1;
  uint64_t seed = 0;
  // Set when the method produced an all-zero answer for a degenerate
  // reason (e.g. the model output did not vary over LIME's samples).
  bool degenerate = false;

  size_t size() const { return static_cast<size_t>(scores.size()); }
};

// |raw| / max|raw|; all-zero input gives all-zero scores.
Vector NormalizeImportance(const Vector& raw);

Explanation MakeExplanation(Vector raw, Method method, uint64_t seed);

// Rescales every explanation by the largest |raw| across the whole set
// instead of per instance.
void NormalizeAcrossSet(std::span<Explanation> explanations);

// instance_id,method,seed,<feature columns>. The raw sidecar has the same
// layout with signed_raw values.
std::string ExplanationsCsv(std::span<const Explanation> explanations,
                            const std::vector<std::string>& feature_names, bool raw = false);
void WriteExplanationsCsv(std::span<const Explanation> explanations,
                          const std::vector<std::string>& feature_names, const std::string& path,
                          bool raw = false);
std::vector<Explanation> ReadExplanationsCsv(const std::string& path,
                                             std::vector<std::string>* feature_names = nullptr);

}  // namespace xailab
