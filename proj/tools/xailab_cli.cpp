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

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "xailab/error.hpp"
#include "xailab/explainers.hpp"
#include "xailab/gating.hpp"
#include "xailab/harness.hpp"
#include "xailab/metrics.hpp"
#include "xailab/mlp.hpp"
#include "xailab/synthdata.hpp"
#include "xailab/train.hpp"

namespace {

using namespace xailab;

constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInternal = 3;

void PrintError(std::string_view error_class, std::string_view message) {
  const nlohmann::json line{{"error", error_class}, {"message", message}};
  std::cerr << line.dump() << "\n";
}

ExperimentConfig ConfigOrDefault(const std::string& path) {
  return path.empty() ? ExperimentConfig{} : LoadConfig(path);
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorClass::kLoad, fmt::format("cannot open '{}'", path));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool IsGatingFile(const std::string& path) {
  try {
    const auto doc = nlohmann::json::parse(ReadFile(path));
    return doc.is_object() && doc.value("format", "") == "xailab-gating";
  } catch (const nlohmann::json::exception&) {
    return false;
  }
}

std::string RawSidecarPath(const std::string& path) {
  const std::string ext = ".csv";
  if (path.size() > ext.size() && path.compare(path.size() - ext.size(), ext.size(), ext) == 0) {
    return path.substr(0, path.size() - ext.size()) + "_raw.csv";
  }
  return path + "_raw.csv";
}

struct GenDataArgs {
  std::string config;
  std::string dataset = "synth_gauss";
  std::string out;
  std::string masks;
  std::optional<uint64_t> seed;
  bool normalize = true;
};

void RunGenData(const GenDataArgs& a) {
  ExperimentConfig cfg = ConfigOrDefault(a.config);
  MaskFile masks;
  FeatureMatrix data;
  if (a.dataset == "synth_gauss") {
    SynthGaussSpec spec = cfg.dataset.synth_gauss;
    if (a.seed) spec.seed = *a.seed;
    SynthGaussData g = SynthGauss(spec);
    data = std::move(g.data);
    masks.masks = std::move(g.cluster_masks);
    masks.assignment = std::move(g.cluster);
  } else if (a.dataset == "synth_logistic") {
    SynthLogisticSpec spec = cfg.dataset.synth_logistic;
    if (a.seed) spec.seed = *a.seed;
    SynthLogisticData l = SynthLogistic(spec);
    data = std::move(l.data);
    masks.masks = {std::move(l.mask)};
  } else {
    throw Error(ErrorClass::kConfiguration, fmt::format("unknown dataset '{}'", a.dataset));
  }
  if (a.normalize) data = NormalizeMinMax(data).data;
  masks.feature_names = data.feature_names;
  WriteCsv(data, a.out);
  if (!a.masks.empty()) WriteMasks(masks, a.masks);
  fmt::print("wrote {} rows x {} features to {}\n", data.rows(), data.cols(), a.out);
}

struct TrainArgs {
  std::string config;
  std::string data;
  std::string validation;
  std::string out;
  std::vector<int> hidden;
  std::optional<int> epochs;
  std::optional<int> batch_size;
  std::optional<double> learning_rate;
  uint64_t seed = 0;
  bool gating = false;
};

void RunTrain(const TrainArgs& a) {
  ExperimentConfig cfg = ConfigOrDefault(a.config);
  TrainConfig t = cfg.training;
  if (a.epochs) t.epochs = *a.epochs;
  if (a.batch_size) t.batch_size = *a.batch_size;
  if (a.learning_rate) t.learning_rate = *a.learning_rate;
  t.seed = MixSeed(a.seed, 13);
  const FeatureMatrix data = ReadCsv(a.data);
  std::optional<FeatureMatrix> validation;
  if (!a.validation.empty()) validation = ReadCsv(a.validation);
  const int classes = std::max(2, data.NumClasses());
  const auto d = static_cast<int>(data.cols());
  TrainHistory history;
  double bac = 0.0;
  if (a.gating) {
    GatingModel model = GatingModel::Create(d, classes, cfg.gating, MixSeed(a.seed, 14));
    history = TrainGating(model, data, t);
    SaveGatingModel(model, a.out);
    bac = BalancedAccuracy(model, data);
    fmt::print("active_fraction {}\n", model.ActiveFraction(data.data));
  } else {
    std::vector<int> dims{d};
    const auto& hidden = a.hidden.empty() ? cfg.hidden : a.hidden;
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(classes);
    Mlp model = Mlp::Create(dims, MixSeed(a.seed, 12));
    history = Train(model, data, t, validation ? &*validation : nullptr);
    SaveModel(model, a.out);
    bac = BalancedAccuracy(model, data);
  }
  fmt::print("initial_loss {}\nfinal_loss {}\nepochs {}\ntrain_balanced_accuracy {}\n", history.initial_loss,
             history.losses.empty() ? history.initial_loss : history.losses.back(), history.losses.size(), bac);
}

struct ExplainArgs {
  std::string config;
  std::string model;
  std::string data;
  std::string train_data;
  std::string method = "lime";
  std::vector<size_t> rows;
  std::string out;
  uint64_t seed = 0;
};

void RunExplain(const ExplainArgs& a) {
  const ExperimentConfig cfg = ConfigOrDefault(a.config);
  const Method method = ParseMethod(a.method);
  const FeatureMatrix data = ReadCsv(a.data);
  const FeatureStats stats = FeatureStats::FromData(a.train_data.empty() ? data : ReadCsv(a.train_data));
  const Background background = Background::Mean(stats);

  std::optional<Mlp> mlp;
  std::optional<GatingModel> gating;
  if (IsGatingFile(a.model)) {
    gating = LoadGatingModel(a.model);
  } else {
    mlp = LoadModel(a.model);
  }
  const Classifier& model = gating ? static_cast<const Classifier&>(*gating) : *mlp;
  if (model.input_dim() != static_cast<int>(data.cols())) {
    throw Error(ErrorClass::kShape, fmt::format("model expects {} features, data has {}", model.input_dim(), data.cols()));
  }
  if (method == Method::kGating && !gating) {
    throw Error(ErrorClass::kConfiguration, "the gating method needs a gating model file");
  }

  std::vector<size_t> rows = a.rows;
  if (rows.empty()) {
    for (size_t i = 0; i < data.rows(); ++i) rows.push_back(i);
  }
  const RngStream base(a.seed);
  std::vector<Explanation> out;
  int no_solution = 0;
  for (size_t r : rows) {
    if (r >= data.rows()) throw Error(ErrorClass::kInput, fmt::format("row {} is out of range", r));
    const Vector x = data.Row(r);
    RngStream rng = base.Fork(r);
    std::optional<Explanation> e;
    switch (method) {
      case Method::kLime: e = LimeExplain(model, x, stats, cfg.lime, rng); break;
      case Method::kKernelShap: e = KernelShapExplain(model, x, background, cfg.kernelshap, rng); break;
      case Method::kPermShap: e = PermShapExplain(model, x, background, cfg.permshap, rng); break;
      case Method::kExactShapley: e = ExactShapley(model, x, background); break;
      case Method::kCem: {
        auto res = CemPertinentNegative(model, x, stats, cfg.cem);
        if (res.success) e = res.explanation;
        break;
      }
      case Method::kDice: {
        auto res = DiceCounterfactuals(model, x, cfg.dice, rng);
        if (res.success) e = res.explanation;
        break;
      }
      case Method::kMcLime: {
        const Explanation lime = LimeExplain(model, x, stats, cfg.lime, rng);
        auto res = McLime(model, x, lime, stats, cfg.mclime);
        if (res.success) e = res.explanation;
        break;
      }
      case Method::kGating: e = GatingExplain(*gating, x); break;
      case Method::kRandom: {
        Vector raw(x.size());
        for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = rng.Uniform();
        e = MakeExplanation(raw, Method::kRandom, a.seed);
        break;
      }
    }
    if (!e) {
      ++no_solution;
      continue;
    }
    e->instance_id = static_cast<int64_t>(r);
    e->seed = a.seed;
    out.push_back(std::move(*e));
  }
  if (a.out.empty()) {
    fmt::print("{}", ExplanationsCsv(out, data.feature_names));
  } else {
    WriteExplanationsCsv(out, data.feature_names, a.out);
    WriteExplanationsCsv(out, data.feature_names, RawSidecarPath(a.out), true);
    fmt::print("explained {} of {} rows ({} without a solution) -> {}\n", out.size(), rows.size(), no_solution, a.out);
  }
}

struct ExperimentArgs {
  std::string config;
  std::string out;
};

ExperimentConfig ExperimentConfigFor(const ExperimentArgs& a) {
  ExperimentConfig cfg = ConfigOrDefault(a.config);
  if (!a.out.empty()) cfg.output_dir = a.out;
  return cfg;
}

void RunDisagree(const ExperimentArgs& a) {
  const ExperimentConfig cfg = ExperimentConfigFor(a);
  const ExperimentReport report = RunDisagreement(cfg);
  EmitReport(report, cfg.output_dir);
  const auto& s = *report.disagreement;
  fmt::print("test_balanced_accuracy {}\n", s.balanced_accuracy);
  for (size_t i = 0; i < s.methods.size(); ++i) {
    for (size_t j = i + 1; j < s.methods.size(); ++j) {
      fmt::print("jsd {} {} {}\n", s.methods[i], s.methods[j],
                 s.jsd.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    }
  }
  fmt::print("report {}\n", cfg.output_dir);
}

void RunConsistencyCommand(const ExperimentArgs& a) {
  const ExperimentConfig cfg = ExperimentConfigFor(a);
  const ExperimentReport report = RunConsistency(cfg);
  EmitReport(report, cfg.output_dir);
  for (const auto& r : report.consistency->regimes) {
    fmt::print("{} median_important_fraction {} median_feature_std {} cem {}/{}\n", r.regime,
               r.median_important_fraction, r.median_feature_std, r.cem_successes, r.cem_attempts);
  }
  fmt::print("report {}\n", cfg.output_dir);
}

void RunFaithfulnessCommand(const ExperimentArgs& a) {
  const ExperimentConfig cfg = ExperimentConfigFor(a);
  const ExperimentReport report = RunFaithfulness(cfg);
  EmitReport(report, cfg.output_dir);
  for (const auto& r : report.faithfulness->rows) {
    fmt::print("{} {} fa {:.3f} gta {:.3f}{}\n", r.dataset, r.method, r.fa_mean, r.gta_mean,
               r.gtf ? fmt::format(" gtf {:.1f}", *r.gtf) : std::string());
  }
  fmt::print("report {}\n", cfg.output_dir);
}

void RunReport(const std::string& dir) {
  const auto problems = ValidateReport(dir);
  if (!problems.empty()) {
    std::string joined;
    for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
    throw Error(ErrorClass::kIo, fmt::format("report validation failed: {}", joined));
  }
  const auto manifest = nlohmann::json::parse(ReadFile(dir + "/manifest.json"));
  fmt::print("kind {}\nconfig_hash {}\n", manifest.at("kind").get<std::string>(),
             manifest.at("config_hash").get<std::string>());
  for (const auto& e : manifest.at("artifacts")) {
    fmt::print("{} {} {}\n", e.at("sha256").get<std::string>(), e.at("bytes").get<size_t>(),
               e.at("path").get<std::string>());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Explainability experiments on synthetic tabular data"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a synthetic dataset as CSV");
  gen_cmd->add_option("--config", gen.config, "Experiment config (JSON)");
  gen_cmd->add_option("--dataset", gen.dataset, "synth_gauss or synth_logistic");
  gen_cmd->add_option("--out", gen.out, "Output CSV")->required();
  gen_cmd->add_option("--masks", gen.masks, "Ground-truth mask sidecar (JSON)");
  gen_cmd->add_option("--seed", gen.seed, "Dataset seed");
  gen_cmd->add_flag("!--raw", gen.normalize, "Skip min-max normalization");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train an MLP or a feature-gating model");
  train_cmd->add_option("--config", train.config, "Experiment config (JSON)");
  train_cmd->add_option("--data", train.data, "Training CSV")->required();
  train_cmd->add_option("--validation", train.validation, "Validation CSV for early stopping");
  train_cmd->add_option("--out", train.out, "Output model file")->required();
  train_cmd->add_option("--hidden", train.hidden, "Hidden layer widths")->delimiter(',');
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--batch-size", train.batch_size);
  train_cmd->add_option("--learning-rate", train.learning_rate);
  train_cmd->add_option("--seed", train.seed);
  train_cmd->add_flag("--gating", train.gating, "Train a feature-gating model");

  ExplainArgs explain;
  auto* explain_cmd = app.add_subcommand("explain", "Explain rows of a dataset");
  explain_cmd->add_option("--config", explain.config, "Experiment config (JSON) for explainer settings");
  explain_cmd->add_option("--model", explain.model, "Model file")->required();
  explain_cmd->add_option("--data", explain.data, "CSV of instances")->required();
  explain_cmd->add_option("--train-data", explain.train_data, "CSV for feature statistics");
  explain_cmd->add_option("--method", explain.method,
                          "lime, kernelshap, permshap, exact, cem, dice, mclime, gating or random");
  explain_cmd->add_option("--rows", explain.rows, "Row indices (default: all)")->delimiter(',');
  explain_cmd->add_option("--out", explain.out, "Output CSV (default: stdout)");
  explain_cmd->add_option("--seed", explain.seed);

  ExperimentArgs disagree, consistency, faithfulness;
  auto* disagree_cmd = app.add_subcommand("disagree", "Pairwise disagreement between explainers");
  auto* consistency_cmd = app.add_subcommand("consistency", "Explanation variance across seeds and training regimes");
  auto* faith_cmd = app.add_subcommand("faithfulness", "Agreement with synthetic ground truth");
  for (auto [cmd, args] : {std::pair{disagree_cmd, &disagree}, std::pair{consistency_cmd, &consistency},
                           std::pair{faith_cmd, &faithfulness}}) {
    cmd->add_option("--config", args->config, "Experiment config (JSON)");
    cmd->add_option("--out", args->out, "Report directory (overrides output_dir)");
  }

  std::string report_dir;
  auto* report_cmd = app.add_subcommand("report", "Validate a report directory against its manifest");
  report_cmd->add_option("dir", report_dir, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    PrintError("usage", e.what());
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) RunGenData(gen);
    if (train_cmd->parsed()) RunTrain(train);
    if (explain_cmd->parsed()) RunExplain(explain);
    if (disagree_cmd->parsed()) RunDisagree(disagree);
    if (consistency_cmd->parsed()) RunConsistencyCommand(consistency);
    if (faith_cmd->parsed()) RunFaithfulnessCommand(faithfulness);
    if (report_cmd->parsed()) RunReport(report_dir);
  } catch (const DivergenceError& e) {
    PrintError(ToString(e.error_class()), fmt::format("{} (epoch {})", e.what(), e.epoch()));
    return kExitError;
  } catch (const Error& e) {
    PrintError(ToString(e.error_class()), e.what());
    return kExitError;
  } catch (const std::exception& e) {
    PrintError("internal", e.what());
    return kExitInternal;
  }
  return 0;
}
