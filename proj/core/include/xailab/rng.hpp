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
#include <random>
#include <utility>

namespace xailab {

// splitmix64 finalizer; used to derive independent child seeds.
uint64_t MixSeed(uint64_t a, uint64_t b);

// Seeded random stream with platform-independent draws. The standard
// distributions are implementation-defined, so every transform from raw
// engine output is done here.
class RngStream {
 public:
  explicit RngStream(uint64_t seed);

  uint64_t seed() const { return seed_; }

  uint64_t NextU64() { return engine_(); }
  // Uniform on [0, 1) with 53 random bits.
  double Uniform();
  // Uniform on (0, 1); safe as an argument to log().
  double UniformOpen();
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Standard normal (Box-Muller, second value cached).
  double Normal();
  // Gumbel(0, 1) = -log(-log(U)).
  double Gumbel();
  // Uniform integer in [0, n), unbiased by rejection.
  uint64_t UniformIndex(uint64_t n);
  bool Bernoulli(double p) { return Uniform() < p; }

  // Fisher-Yates; std::shuffle's sequence is implementation-defined.
  template <typename RandomIt>
  void Shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<uint64_t>(last - first);
    for (uint64_t i = n; i > 1; --i) {
      const uint64_t j = UniformIndex(i);
      using std::swap;
      swap(first[i - 1], first[j]);
    }
  }

  // A new stream whose seed depends on this stream's seed and `stream_id`
  // only, not on how many draws were consumed.
  RngStream Fork(uint64_t stream_id) const;

 private:
  uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace xailab
