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

#include <benchmark/benchmark.h>

#include "xailab/explainers.hpp"
#include "xailab/metrics.hpp"
#include "xailab/mlp.hpp"
#include "xailab/synthdata.hpp"

namespace {

using namespace xailab;

struct Fixture {
  FeatureMatrix data;
  FeatureStats stats;
  Mlp model;
};

const Fixture& Shared() {
  static const Fixture f = [] {
    SynthGaussSpec spec;
    spec.points_per_cluster = 200;
    FeatureMatrix data = SynthGauss(spec).data;
    FeatureStats stats = FeatureStats::FromData(data);
    return Fixture{std::move(data), std::move(stats), Mlp::Create({20, 64, 32, 2}, 0)};
  }();
  return f;
}

void BM_MlpBatchForward(benchmark::State& state) {
  const Fixture& f = Shared();
  const Matrix rows = f.data.data.topRows(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(f.model.BatchProbabilities(rows));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MlpBatchForward)->Arg(1)->Arg(64)->Arg(1000);

void BM_Lime(benchmark::State& state) {
  const Fixture& f = Shared();
  LimeConfig cfg;
  cfg.n_samples = static_cast<int>(state.range(0));
  RngStream rng(1);
  const Vector x = f.data.Row(0);
  for (auto _ : state) benchmark::DoNotOptimize(LimeExplain(f.model, x, f.stats, cfg, rng));
}
BENCHMARK(BM_Lime)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_KernelShap(benchmark::State& state) {
  const Fixture& f = Shared();
  KernelShapConfig cfg;
  cfg.n_samples = static_cast<int>(state.range(0));
  RngStream rng(2);
  const Background bg = Background::Sample(f.data, 50, rng);
  const Vector x = f.data.Row(1);
  for (auto _ : state) benchmark::DoNotOptimize(KernelShapExplain(f.model, x, bg, cfg, rng));
}
BENCHMARK(BM_KernelShap)->Arg(512)->Arg(2048)->Unit(benchmark::kMillisecond);

void BM_CemPertinentNegative(benchmark::State& state) {
  const Fixture& f = Shared();
  CemConfig cfg;
  const Vector x = f.data.Row(2);
  for (auto _ : state) benchmark::DoNotOptimize(CemPertinentNegative(f.model, x, f.stats, cfg));
}
BENCHMARK(BM_CemPertinentNegative)->Unit(benchmark::kMillisecond);

void BM_Pca(benchmark::State& state) {
  const Matrix rows = Shared().data.data.topRows(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(PcaProject(rows, 2));
}
BENCHMARK(BM_Pca)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
