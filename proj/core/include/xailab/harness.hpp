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
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "xailab/explainers.hpp"
#include "xailab/gating.hpp"
#include "xailab/metrics.hpp"
#include "xailab/robust.hpp"
#include "xailab/synthdata.hpp"
#include "xailab/train.hpp"

namespace xailab {

inline constexpr int kConfigSchemaVersion = 1;

enum class DatasetKind { kSynthGauss, kSynthLogistic };
std::string_view ToString(DatasetKind kind);

struct DatasetConfig {
  DatasetKind kind = DatasetKind::kSynthGauss;
  SynthGaussSpec synth_gauss;
  SynthLogisticSpec synth_logistic;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  std::array<double, 3> split{0.8, 0.1, 0.1};
  std::vector<int> hidden{32};
  TrainConfig training;
  std::vector<Method> methods{Method::kLime, Method::kKernelShap, Method::kPermShap,
                              Method::kCem, Method::kDice};
  LimeConfig lime;
  KernelShapConfig kernelshap;
  PermShapConfig permshap;
  CemConfig cem;
  DiceConfig dice;
  McLimeConfig mclime;
  GatingConfig gating;
  // Regime name -> attack; "baseline" has no attack.
  std::vector<std::string> regimes{"baseline", "fgsm", "pgd"};
  AttackConfig fgsm{AttackMethod::kFgsm, 0.05, 0.05, 1};
  AttackConfig pgd{AttackMethod::kPgd, 0.05, 0.01, 40};
  std::vector<uint64_t> seeds{0, 1, 2, 3, 4};
  int n_representatives_per_class = 25;
  // "mean" (training means) or "sample" (random training rows).
  std::string background = "mean";
  int background_size = 32;
  // "instance" or "set".
  std::string normalization = "instance";
  int jaccard_k = 5;
  int faithfulness_k = 5;
  double importance_threshold = 0.01;
  std::vector<DatasetKind> faithfulness_datasets{DatasetKind::kSynthGauss,
                                                 DatasetKind::kSynthLogistic};
  std::string output_dir = "report";

  void Validate() const;
};

// Strict parser: unknown keys and schema-version mismatches are errors.
ExperimentConfig ParseConfig(const std::string& json_text);
ExperimentConfig LoadConfig(const std::string& path);
// Canonical JSON with every field spelled out.
std::string ConfigToJson(const ExperimentConfig& cfg);
std::string Sha256Hex(const std::string& bytes);

// Per class, instances ordered by the predicted probability of that class,
// then n evenly spaced positions including both ends. Classes smaller than
// n are taken whole.
std::vector<size_t> SelectRepresentatives(const Classifier& model, const FeatureMatrix& data,
                                          int n_per_class);

struct Artifact {
  std::string name;  // relative path inside the report directory
  std::string content;
};

struct DisagreementSummary {
  std::vector<std::string> methods;
  PairwiseMatrix spearman;
  PairwiseMatrix jsd;
  PairwiseMatrix jaccard;
  PcaResult pca;
  std::vector<std::string> pca_tags;  // method per projected row
  double balanced_accuracy = 0.0;
  std::map<std::string, int> failures;  // method -> no-solution count
  std::map<std::string, int> successes;
};

struct RegimeSummary {
  std::string regime;
  std::vector<double> clean_bac;     // per seed
  std::vector<double> pgd_accuracy;  // per seed, balanced
  std::vector<double> important_fraction;  // per seed, CEM
  double median_important_fraction = 0.0;
  VarianceProfile variance;                // CEM, per-feature mean std
  double median_feature_std = 0.0;
  int cem_successes = 0;
  int cem_attempts = 0;
};

struct ConsistencySummary {
  std::vector<size_t> representatives;
  std::vector<RegimeSummary> regimes;
};

struct FaithfulnessRow {
  std::string dataset;
  std::string method;
  double fa_mean = 0, fa_std = 0;
  double ra_mean = 0, ra_std = 0;
  double pra_mean = 0, pra_std = 0;
  double gta_mean = 0, gta_std = 0;
  // Percentage of instances that passed the masked-feature perturbation
  // check; only defined for gating.
  std::optional<double> gtf;
  double bac_mean = 0;
  double active_fraction_mean = 0;
};

struct FaithfulnessSummary {
  std::vector<FaithfulnessRow> rows;
};

struct ExperimentReport {
  std::string kind;
  std::string config_json;
  std::string config_hash;
  std::vector<uint64_t> seeds;
  std::string created_at;
  std::vector<Artifact> artifacts;

  std::optional<DisagreementSummary> disagreement;
  std::optional<ConsistencySummary> consistency;
  std::optional<FaithfulnessSummary> faithfulness;
};

ExperimentReport RunDisagreement(const ExperimentConfig& cfg);
ExperimentReport RunConsistency(const ExperimentConfig& cfg);
ExperimentReport RunFaithfulness(const ExperimentConfig& cfg);

// Writes every artifact, config.json, run.json, and manifest.json (path,
// byte count, SHA-256 per artifact). run.json carries the wall-clock
// timestamp and is the only file not covered by the manifest.
void EmitReport(const ExperimentReport& report, const std::string& dir);

// Empty when every manifest entry exists and matches its hash.
std::vector<std::string> ValidateReport(const std::string& dir);

}  // namespace xailab
