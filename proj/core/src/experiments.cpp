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
#include <chrono>
#include <cmath>
#include <numeric>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "csv_util.hpp"
#include "xailab/error.hpp"
#include "xailab/harness.hpp"

namespace xailab {

namespace {

enum Stream : uint64_t {
  kSplitStream = 11,
  kModelInitStream = 12,
  kShuffleStream = 13,
  kGatingInitStream = 14,
  kExplainStream = 15,
  kBackgroundStream = 16,
};

struct Prepared {
  FeatureMatrix all;
  DataSplit split;
  FeatureStats train_stats;
  std::vector<GroundTruthMask> masks;
  std::vector<int> mask_of;  // per row of `all`
};

Prepared Prepare(const ExperimentConfig& cfg, DatasetKind kind) {
  Prepared p;
  FeatureMatrix raw;
  uint64_t data_seed = 0;
  if (kind == DatasetKind::kSynthGauss) {
    SynthGaussData g = SynthGauss(cfg.dataset.synth_gauss);
    raw = std::move(g.data);
    p.masks = std::move(g.cluster_masks);
    p.mask_of = std::move(g.cluster);
    data_seed = cfg.dataset.synth_gauss.seed;
  } else {
    SynthLogisticData l = SynthLogistic(cfg.dataset.synth_logistic);
    raw = std::move(l.data);
    p.masks = {std::move(l.mask)};
    p.mask_of.assign(raw.rows(), 0);
    data_seed = cfg.dataset.synth_logistic.seed;
  }
  p.all = NormalizeMinMax(raw).data;
  p.split = SplitStratified(p.all, cfg.split, MixSeed(data_seed, kSplitStream));
  p.train_stats = FeatureStats::FromData(p.split.train);
  return p;
}

std::vector<int> LayerDims(const ExperimentConfig& cfg, const Prepared& p) {
  std::vector<int> dims{static_cast<int>(p.all.cols())};
  dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
  dims.push_back(std::max(2, p.all.NumClasses()));
  return dims;
}

TrainConfig SeededTraining(const ExperimentConfig& cfg, uint64_t seed) {
  TrainConfig t = cfg.training;
  t.seed = MixSeed(seed, kShuffleStream);
  return t;
}

Mlp TrainBaseline(const ExperimentConfig& cfg, const Prepared& p, uint64_t seed) {
  Mlp model = Mlp::Create(LayerDims(cfg, p), MixSeed(seed, kModelInitStream));
  Train(model, p.split.train, SeededTraining(cfg, seed), &p.split.validation);
  return model;
}

Mlp TrainRegime(const ExperimentConfig& cfg, const Prepared& p, const std::string& regime, uint64_t seed) {
  if (regime == "baseline") return TrainBaseline(cfg, p, seed);
  Mlp model = Mlp::Create(LayerDims(cfg, p), MixSeed(seed, kModelInitStream));
  AdversarialTrain(model, p.split.train, regime == "fgsm" ? cfg.fgsm : cfg.pgd, SeededTraining(cfg, seed));
  return model;
}

struct ExplainContext {
  const ExperimentConfig& cfg;
  const Classifier& model;
  const FeatureStats& stats;
  const Background& background;
  const GatingModel* gating = nullptr;
};

std::optional<Explanation> ExplainOne(Method method, const ExplainContext& ctx, const Vector& x, RngStream& rng) {
  switch (method) {
    case Method::kLime:
      return LimeExplain(ctx.model, x, ctx.stats, ctx.cfg.lime, rng);
    case Method::kKernelShap:
      return KernelShapExplain(ctx.model, x, ctx.background, ctx.cfg.kernelshap, rng);
    case Method::kPermShap:
      return PermShapExplain(ctx.model, x, ctx.background, ctx.cfg.permshap, rng);
    case Method::kExactShapley:
      return ExactShapley(ctx.model, x, ctx.background);
    case Method::kCem: {
      CemResult r = CemPertinentNegative(ctx.model, x, ctx.stats, ctx.cfg.cem);
      if (!r.success) return std::nullopt;
      return r.explanation;
    }
    case Method::kDice: {
      DiceResult r = DiceCounterfactuals(ctx.model, x, ctx.cfg.dice, rng);
      if (!r.success) return std::nullopt;
      return r.explanation;
    }
    case Method::kMcLime: {
      const Explanation lime = LimeExplain(ctx.model, x, ctx.stats, ctx.cfg.lime, rng);
      McLimeResult r = McLime(ctx.model, x, lime, ctx.stats, ctx.cfg.mclime);
      if (!r.success) return std::nullopt;
      return r.explanation;
    }
    case Method::kGating:
      if (ctx.gating == nullptr) throw Error(ErrorClass::kConfiguration, "gating explanations need a gating model");
      return GatingExplain(*ctx.gating, x);
    case Method::kRandom: {
      Vector raw(x.size());
      for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) = rng.Uniform();
      return MakeExplanation(std::move(raw), Method::kRandom, rng.seed());
    }
  }
  throw Error(ErrorClass::kConfiguration, "unsupported method");
}

struct MethodRun {
  std::vector<std::optional<Explanation>> explanations;
  int successes = 0;
  int no_solution = 0;
  int hard_failures = 0;
};

// `rows` index `data`; `ids` are the matching dataset-wide instance ids.
MethodRun ExplainAll(Method method, const ExplainContext& ctx, const FeatureMatrix& data,
                     const std::vector<size_t>& rows, const std::vector<size_t>& ids, uint64_t seed) {
  MethodRun run;
  const RngStream base(MixSeed(seed, kExplainStream));
  for (size_t i = 0; i < rows.size(); ++i) {
    RngStream rng = base.Fork(MixSeed(static_cast<uint64_t>(method) + 1, ids[i]));
    std::optional<Explanation> e;
    try {
      e = ExplainOne(method, ctx, data.Row(rows[i]), rng);
    } catch (const Error& err) {
      if (err.error_class() != ErrorClass::kExplanation && err.error_class() != ErrorClass::kRefusal) throw;
      ++run.hard_failures;
    }
    if (e) {
      e->instance_id = static_cast<int64_t>(ids[i]);
      e->seed = seed;
      e->method = method;
      ++run.successes;
    } else {
      ++run.no_solution;
    }
    run.explanations.push_back(std::move(e));
  }
  if (2 * run.hard_failures > static_cast<int>(rows.size())) {
    throw Error(ErrorClass::kExplanation, fmt::format("method {} failed on {} of {} instances", ToString(method),
                                                      run.hard_failures, rows.size()));
  }
  if (ctx.cfg.normalization == "set") {
    std::vector<Explanation> present;
    for (const auto& e : run.explanations) {
      if (e) present.push_back(*e);
    }
    NormalizeAcrossSet(present);
    size_t next = 0;
    for (auto& e : run.explanations) {
      if (e) e = present[next++];
    }
  }
  return run;
}

std::vector<Explanation> Present(const std::vector<std::optional<Explanation>>& list) {
  std::vector<Explanation> out;
  for (const auto& e : list) {
    if (e) out.push_back(*e);
  }
  return out;
}

Background MakeBackground(const ExperimentConfig& cfg, const Prepared& p, uint64_t seed) {
  if (cfg.background == "mean") return Background::Mean(p.train_stats);
  RngStream rng(MixSeed(seed, kBackgroundStream));
  return Background::Sample(p.split.train, static_cast<size_t>(cfg.background_size), rng);
}

std::vector<size_t> DatasetIds(const Prepared& p, const std::vector<size_t>& test_rows) {
  std::vector<size_t> ids;
  for (size_t r : test_rows) ids.push_back(p.split.test_indices[r]);
  return ids;
}

std::string Timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  return fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(now));
}

ExperimentReport NewReport(const std::string& kind, const ExperimentConfig& cfg) {
  cfg.Validate();
  ExperimentReport r;
  r.kind = kind;
  r.config_json = ConfigToJson(cfg);
  r.config_hash = Sha256Hex(r.config_json);
  r.seeds = cfg.seeds;
  r.created_at = Timestamp();
  return r;
}

std::string RepresentativesCsv(const Classifier& model, const Prepared& p, const std::vector<size_t>& rows) {
  std::string out = "instance_id,label,predicted,label_probability\n";
  for (size_t r : rows) {
    const Vector x = p.split.test.Row(r);
    const Vector probs = model.Probabilities(x);
    const int label = p.split.test.labels[r];
    out += fmt::format("{},{},{},{}\n", p.split.test_indices[r], label, model.Predict(x), FormatDouble(probs(label)));
  }
  return out;
}

double Mean(const std::vector<double>& v) {
  if (v.empty()) return NAN;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double SampleStd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = Mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

std::vector<size_t> SelectRepresentatives(const Classifier& model, const FeatureMatrix& data, int n_per_class) {
  if (n_per_class < 1) throw Error(ErrorClass::kConfiguration, "n_per_class must be >= 1");
  const Matrix probs = model.BatchProbabilities(data.data);
  std::vector<size_t> out;
  const int classes = std::max(data.NumClasses(), model.num_classes());
  for (int c = 0; c < classes; ++c) {
    std::vector<size_t> members = data.IndicesOfClass(c);
    if (members.empty()) throw Error(ErrorClass::kSampling, fmt::format("class {} has no instances", c));
    std::stable_sort(members.begin(), members.end(), [&](size_t a, size_t b) {
      return probs(static_cast<Eigen::Index>(a), c) < probs(static_cast<Eigen::Index>(b), c);
    });
    const size_t m = members.size();
    const auto n = static_cast<size_t>(n_per_class);
    if (m <= n) {
      out.insert(out.end(), members.begin(), members.end());
      continue;
    }
    for (size_t i = 0; i < n; ++i) {
      const size_t pos =
          n == 1 ? 0 : static_cast<size_t>(std::llround(static_cast<double>(i * (m - 1)) / static_cast<double>(n - 1)));
      out.push_back(members[pos]);
    }
  }
  return out;
}

ExperimentReport RunDisagreement(const ExperimentConfig& cfg) {
  ExperimentReport report = NewReport("disagreement", cfg);
  const uint64_t seed = cfg.seeds.front();
  const Prepared p = Prepare(cfg, cfg.dataset.kind);
  const Mlp model = TrainBaseline(cfg, p, seed);
  std::optional<GatingModel> gating;
  if (std::find(cfg.methods.begin(), cfg.methods.end(), Method::kGating) != cfg.methods.end()) {
    gating = GatingModel::Create(static_cast<int>(p.all.cols()), model.num_classes(), cfg.gating,
                                 MixSeed(seed, kGatingInitStream));
    TrainGating(*gating, p.split.train, SeededTraining(cfg, seed));
  }
  const Background background = MakeBackground(cfg, p, seed);
  const ExplainContext ctx{cfg, model, p.train_stats, background, gating ? &*gating : nullptr};

  const auto reps = SelectRepresentatives(model, p.split.test, cfg.n_representatives_per_class);
  const auto ids = DatasetIds(p, reps);
  DisagreementSummary summary;
  summary.balanced_accuracy = BalancedAccuracy(model, p.split.test);
  std::vector<std::vector<std::optional<Vector>>> per_method;
  const auto& names = p.all.feature_names;
  for (Method m : cfg.methods) {
    const Classifier& explained = m == Method::kGating ? static_cast<const Classifier&>(*gating) : model;
    const ExplainContext method_ctx{cfg, explained, p.train_stats, background, ctx.gating};
    MethodRun run = ExplainAll(m, method_ctx, p.split.test, reps, ids, seed);
    const std::string name(ToString(m));
    summary.methods.push_back(name);
    summary.successes[name] = run.successes;
    summary.failures[name] = run.no_solution;
    const auto present = Present(run.explanations);
    report.artifacts.push_back({"explanations/" + name + ".csv", ExplanationsCsv(present, names)});
    report.artifacts.push_back({"explanations/" + name + "_raw.csv", ExplanationsCsv(present, names, true)});
    std::vector<std::optional<Vector>> scores;
    for (const auto& e : run.explanations) scores.push_back(e ? std::optional<Vector>(e->scores) : std::nullopt);
    per_method.push_back(std::move(scores));
  }

  summary.spearman = ComputePairwise("spearman", summary.methods, per_method, SpearmanRho);
  summary.jsd = ComputePairwise("jsd", summary.methods, per_method, JensenShannonDistance);
  const auto k = static_cast<size_t>(std::min<int>(cfg.jaccard_k, static_cast<int>(p.all.cols())));
  summary.jaccard = ComputePairwise("jaccard", summary.methods, per_method,
                                    [k](const Vector& a, const Vector& b) { return JaccardTopK(a, b, k); });
  report.artifacts.push_back({"metrics/spearman.csv", PairwiseCsv(summary.spearman)});
  report.artifacts.push_back({"metrics/jsd.csv", PairwiseCsv(summary.jsd)});
  report.artifacts.push_back({"metrics/jaccard.csv", PairwiseCsv(summary.jaccard)});

  std::vector<Vector> rows;
  std::vector<int64_t> row_ids;
  for (size_t mi = 0; mi < per_method.size(); ++mi) {
    for (size_t i = 0; i < per_method[mi].size(); ++i) {
      if (!per_method[mi][i]) continue;
      rows.push_back(*per_method[mi][i]);
      row_ids.push_back(static_cast<int64_t>(ids[i]));
      summary.pca_tags.push_back(summary.methods[mi]);
    }
  }
  const int components = std::min<int>(2, static_cast<int>(p.all.cols()));
  if (rows.size() >= 2) {
    Matrix stacked(static_cast<Eigen::Index>(rows.size()), p.all.cols());
    for (size_t r = 0; r < rows.size(); ++r) stacked.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
    summary.pca = PcaProject(stacked, components);
    std::string coords = "method,instance_id";
    for (int c = 0; c < components; ++c) coords += fmt::format(",pc{}", c + 1);
    coords += "\n";
    for (size_t r = 0; r < rows.size(); ++r) {
      coords += fmt::format("{},{}", summary.pca_tags[r], row_ids[r]);
      for (int c = 0; c < components; ++c) {
        coords += "," + FormatDouble(summary.pca.projected(static_cast<Eigen::Index>(r), c));
      }
      coords += "\n";
    }
    std::string variance = "component,eigenvalue,explained_variance_ratio\n";
    for (int c = 0; c < components; ++c) {
      variance += fmt::format("pc{},{},{}\n", c + 1, FormatDouble(summary.pca.eigenvalues(c)),
                              FormatDouble(summary.pca.explained_variance_ratio(c)));
    }
    report.artifacts.push_back({"pca/coordinates.csv", coords});
    report.artifacts.push_back({"pca/explained_variance.csv", variance});
  }

  std::string methods_csv = "method,successes,no_solution\n";
  for (const auto& name : summary.methods) {
    methods_csv += fmt::format("{},{},{}\n", name, summary.successes[name], summary.failures[name]);
  }
  report.artifacts.push_back({"methods.csv", methods_csv});
  report.artifacts.push_back({"model.csv", fmt::format("metric,value\ntest_balanced_accuracy,{}\n",
                                                       FormatDouble(summary.balanced_accuracy))});
  report.artifacts.push_back({"representatives.csv", RepresentativesCsv(model, p, reps)});
  report.disagreement = std::move(summary);
  return report;
}

ExperimentReport RunConsistency(const ExperimentConfig& cfg) {
  ExperimentReport report = NewReport("consistency", cfg);
  if (cfg.seeds.size() < 2) {
    throw Error(ErrorClass::kConfiguration, "consistency needs at least two seeds for variance profiles");
  }
  const Prepared p = Prepare(cfg, cfg.dataset.kind);
  const auto& names = p.all.feature_names;
  const Background background = Background::Mean(p.train_stats);

  // Representatives come from the first seed's baseline model and are
  // shared by every regime.
  std::optional<Mlp> first_baseline = TrainBaseline(cfg, p, cfg.seeds.front());
  ConsistencySummary summary;
  summary.representatives = SelectRepresentatives(*first_baseline, p.split.test, cfg.n_representatives_per_class);
  const auto& reps = summary.representatives;
  const auto ids = DatasetIds(p, reps);
  report.artifacts.push_back({"representatives.csv", RepresentativesCsv(*first_baseline, p, reps)});

  std::string accuracy = "regime,seed,clean_balanced_accuracy,pgd_balanced_accuracy\n";
  std::string fractions = "regime,seed,important_feature_fraction,cem_successes,cem_attempts\n";
  std::vector<std::pair<std::string, VarianceProfile>> profiles;
  for (const auto& regime : cfg.regimes) {
    RegimeSummary rs;
    rs.regime = regime;
    std::vector<std::vector<Explanation>> per_rep(reps.size());
    std::vector<Explanation> all_runs;
    for (uint64_t seed : cfg.seeds) {
      Mlp model = (regime == "baseline" && seed == cfg.seeds.front() && first_baseline)
                      ? std::move(*first_baseline)
                      : TrainRegime(cfg, p, regime, seed);
      if (regime == "baseline" && seed == cfg.seeds.front()) first_baseline.reset();
      const double clean = BalancedAccuracy(model, p.split.test);
      const double attacked = AdversarialBalancedAccuracy(model, p.split.test, cfg.pgd);
      rs.clean_bac.push_back(clean);
      rs.pgd_accuracy.push_back(attacked);
      accuracy += fmt::format("{},{},{},{}\n", regime, seed, FormatDouble(clean), FormatDouble(attacked));

      const ExplainContext ctx{cfg, model, p.train_stats, background};
      MethodRun run = ExplainAll(Method::kCem, ctx, p.split.test, reps, ids, seed);
      rs.cem_successes += run.successes;
      rs.cem_attempts += static_cast<int>(reps.size());
      const auto present = Present(run.explanations);
      all_runs.insert(all_runs.end(), present.begin(), present.end());
      const double fraction =
          present.empty() ? 0.0 : ImportantFeatureFraction(present, cfg.importance_threshold);
      rs.important_fraction.push_back(fraction);
      fractions += fmt::format("{},{},{},{},{}\n", regime, seed, FormatDouble(fraction), run.successes, reps.size());
      for (size_t i = 0; i < reps.size(); ++i) {
        if (run.explanations[i]) per_rep[i].push_back(*run.explanations[i]);
      }
    }
    report.artifacts.push_back({fmt::format("explanations/cem_{}.csv", regime), ExplanationsCsv(all_runs, names)});
    rs.median_important_fraction = Quantile(rs.important_fraction, 0.5);

    // Per-feature std across seeds, averaged over representatives that
    // have at least two successful runs.
    Vector mean_std = Vector::Zero(static_cast<Eigen::Index>(names.size()));
    int contributing = 0;
    for (const auto& runs : per_rep) {
      if (runs.size() < 2) continue;
      mean_std += ImportanceVariance(runs, cfg.importance_threshold).stds;
      ++contributing;
    }
    if (contributing > 0) mean_std /= contributing;
    rs.variance = VarianceProfile::FromStds(mean_std, cfg.importance_threshold);
    rs.median_feature_std = rs.variance.median;
    profiles.emplace_back(regime, rs.variance);
    summary.regimes.push_back(std::move(rs));
  }

  std::string summary_csv =
      "regime,median_important_feature_fraction,median_feature_std,mean_clean_balanced_accuracy,"
      "mean_pgd_balanced_accuracy,cem_successes,cem_attempts\n";
  for (const auto& rs : summary.regimes) {
    summary_csv += fmt::format("{},{},{},{},{},{},{}\n", rs.regime, FormatDouble(rs.median_important_fraction),
                               FormatDouble(rs.median_feature_std), FormatDouble(Mean(rs.clean_bac)),
                               FormatDouble(Mean(rs.pgd_accuracy)), rs.cem_successes, rs.cem_attempts);
  }
  report.artifacts.push_back({"consistency/accuracy.csv", accuracy});
  report.artifacts.push_back({"consistency/important_fraction.csv", fractions});
  report.artifacts.push_back({"consistency/variance_cem.csv", VarianceCsv(profiles, names)});
  report.artifacts.push_back({"consistency/summary.csv", summary_csv});
  report.consistency = std::move(summary);
  return report;
}

ExperimentReport RunFaithfulness(const ExperimentConfig& cfg) {
  ExperimentReport report = NewReport("faithfulness", cfg);
  if (cfg.faithfulness_datasets.empty()) {
    throw Error(ErrorClass::kConfiguration, "faithfulness needs at least one dataset");
  }
  FaithfulnessSummary summary;
  std::string per_seed = "dataset,method,seed,fa,ra,pra,gta,instances\n";
  for (DatasetKind kind : cfg.faithfulness_datasets) {
    const Prepared p = Prepare(cfg, kind);
    if (p.masks.empty()) throw Error(ErrorClass::kConfiguration, "dataset has no ground truth");
    const auto k = static_cast<size_t>(cfg.faithfulness_k);
    if (k > p.all.cols()) throw Error(ErrorClass::kConfiguration, "faithfulness_k exceeds the feature count");
    std::vector<Method> methods;
    for (Method m : cfg.methods) {
      if (m != Method::kGating && m != Method::kRandom) methods.push_back(m);
    }
    methods.push_back(Method::kGating);
    methods.push_back(Method::kRandom);

    struct Acc {
      std::vector<double> fa, ra, pra, gta, bac, active, gtf;
    };
    std::vector<Acc> acc(methods.size());
    const std::string dataset(ToString(kind));
    for (uint64_t seed : cfg.seeds) {
      const Mlp model = TrainBaseline(cfg, p, seed);
      GatingModel gating = GatingModel::Create(static_cast<int>(p.all.cols()), model.num_classes(), cfg.gating,
                                               MixSeed(seed, kGatingInitStream));
      TrainGating(gating, p.split.train, SeededTraining(cfg, seed));
      const Background background = MakeBackground(cfg, p, seed);
      const auto reps = SelectRepresentatives(model, p.split.test, cfg.n_representatives_per_class);
      const auto ids = DatasetIds(p, reps);
      const double model_bac = BalancedAccuracy(model, p.split.test);
      const double gating_bac = BalancedAccuracy(gating, p.split.test);

      for (size_t mi = 0; mi < methods.size(); ++mi) {
        const Method m = methods[mi];
        const Classifier& explained = m == Method::kGating ? static_cast<const Classifier&>(gating) : model;
        const ExplainContext ctx{cfg, explained, p.train_stats, background, &gating};
        const MethodRun run = ExplainAll(m, ctx, p.split.test, reps, ids, seed);
        std::vector<double> fa, ra, pra, gta;
        for (size_t i = 0; i < reps.size(); ++i) {
          if (!run.explanations[i]) continue;
          const auto& truth = p.masks[static_cast<size_t>(p.mask_of[ids[i]])];
          const FaithfulnessScores s = Faithfulness(*run.explanations[i], truth, k);
          fa.push_back(s.feature_agreement);
          ra.push_back(s.rank_agreement.value_or(NAN));
          pra.push_back(s.pairwise_rank_agreement.value_or(NAN));
          gta.push_back(s.ground_truth_alignment);
        }
        acc[mi].fa.push_back(Mean(fa));
        acc[mi].ra.push_back(Mean(ra));
        acc[mi].pra.push_back(Mean(pra));
        acc[mi].gta.push_back(Mean(gta));
        acc[mi].bac.push_back(m == Method::kGating ? gating_bac : model_bac);
        per_seed += fmt::format("{},{},{},{},{},{},{},{}\n", dataset, ToString(m), seed, FormatDouble(Mean(fa)),
                                FormatDouble(Mean(ra)), FormatDouble(Mean(pra)), FormatDouble(Mean(gta)), fa.size());
        if (m != Method::kGating) continue;

        // With the instance's own mask fixed, perturbing any masked-out
        // feature must leave the predictor's output bit-identical.
        acc[mi].active.push_back(gating.ActiveFraction(p.split.test.data));
        size_t passed = 0;
        for (size_t r = 0; r < p.split.test.rows(); ++r) {
          const Vector x = p.split.test.Row(r);
          const Vector mask = gating.Mask(x);
          const Vector base = gating.predictor().Probabilities(x.cwiseProduct(mask));
          bool ok = true;
          for (Eigen::Index j = 0; j < x.size() && ok; ++j) {
            if (mask(j) != 0.0) continue;
            Vector moved = x;
            moved(j) = x(j) < 0.5 ? 1.0 : 0.0;
            const Vector probs = gating.predictor().Probabilities(moved.cwiseProduct(mask));
            ok = (probs.array() == base.array()).all();
          }
          passed += ok ? 1 : 0;
        }
        acc[mi].gtf.push_back(100.0 * static_cast<double>(passed) / static_cast<double>(p.split.test.rows()));
      }
    }
    for (size_t mi = 0; mi < methods.size(); ++mi) {
      FaithfulnessRow row;
      row.dataset = dataset;
      row.method = std::string(ToString(methods[mi]));
      row.fa_mean = Mean(acc[mi].fa);
      row.fa_std = SampleStd(acc[mi].fa);
      row.ra_mean = Mean(acc[mi].ra);
      row.ra_std = SampleStd(acc[mi].ra);
      row.pra_mean = Mean(acc[mi].pra);
      row.pra_std = SampleStd(acc[mi].pra);
      row.gta_mean = Mean(acc[mi].gta);
      row.gta_std = SampleStd(acc[mi].gta);
      row.bac_mean = Mean(acc[mi].bac);
      if (!acc[mi].gtf.empty()) {
        row.gtf = *std::min_element(acc[mi].gtf.begin(), acc[mi].gtf.end());
        row.active_fraction_mean = Mean(acc[mi].active);
      }
      summary.rows.push_back(std::move(row));
    }
  }

  std::string table =
      "dataset,method,fa_mean,fa_std,ra_mean,ra_std,pra_mean,pra_std,gta_mean,gta_std,gtf,"
      "balanced_accuracy_mean,active_fraction_mean\n";
  for (const auto& r : summary.rows) {
    table += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.dataset, r.method, FormatDouble(r.fa_mean),
                         FormatDouble(r.fa_std), FormatDouble(r.ra_mean), FormatDouble(r.ra_std),
                         FormatDouble(r.pra_mean), FormatDouble(r.pra_std), FormatDouble(r.gta_mean),
                         FormatDouble(r.gta_std), r.gtf ? FormatDouble(*r.gtf) : std::string(),
                         FormatDouble(r.bac_mean), r.gtf ? FormatDouble(r.active_fraction_mean) : std::string());
  }
  report.artifacts.push_back({"faithfulness/table.csv", table});
  report.artifacts.push_back({"faithfulness/per_seed.csv", per_seed});
  report.faithfulness = std::move(summary);
  return report;
}

}  // namespace xailab
