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
#include <limits>

#include <gtest/gtest.h>

#include "xailab/explainers.hpp"
#include "xailab/metrics.hpp"
#include "xailab/mlp.hpp"
#include "test_util.hpp"

namespace xailab {
namespace {

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

FeatureStats UniformStats(int d, double mean, double std) {
  return {Vector::Constant(d, mean), Vector::Constant(d, std)};
}

Background Single(const Vector& row) { return Background{row.transpose()}; }

Mlp LinearLogistic(const Vector& w, double b) {
  Mlp m = Mlp::Create({static_cast<int>(w.size()), 2}, 0);
  m.layers()[0].weights.row(0) = w.transpose();
  m.layers()[0].bias(0) = b;
  return m;
}

TEST(Normalize, WorkedExamples) {
  const Vector s = NormalizeImportance((Vector(3) << -2, 1, 0).finished());
  EXPECT_EQ(s, (Vector(3) << 1, 0.5, 0).finished());
  EXPECT_EQ(NormalizeImportance(Vector::Zero(4)), Vector::Zero(4));
  const Vector raw = (Vector(4) << 0.3, -1.7, 0.0, 2.2).finished();
  for (double c : {-3.0, 0.5, 1e6}) {
    EXPECT_LT((NormalizeImportance(c * raw) - NormalizeImportance(raw)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Lime, IgnoredFeatureScoresZero) {
  Mlp m = Mlp::Create({20, 16, 2}, 1);
  m.layers()[0].weights.col(7).setZero();
  LimeConfig cfg;
  cfg.n_samples = 20000;
  RngStream rng(3);
  const Explanation e = LimeExplain(m, Vector::Constant(20, 0.5), UniformStats(20, 0.5, 0.25), cfg, rng);
  EXPECT_LE(e.scores(7), 1e-6);
  EXPECT_EQ(e.method, Method::kLime);
}

TEST(Lime, LinearModelRankingRecovered) {
  const int d = 8;
  Vector w(d);
  for (int j = 0; j < d; ++j) w(j) = (j % 2 ? -1.0 : 1.0) * 0.25 * (j + 1);
  const Mlp m = LinearLogistic(w, -w.sum() * 0.5);
  LimeConfig cfg;
  cfg.n_samples = 20000;
  cfg.max_features = d;
  cfg.kernel_width = 100.0;
  RngStream rng(5);
  const Explanation e = LimeExplain(m, Vector::Constant(d, 0.5), UniformStats(d, 0.5, 0.05), cfg, rng);
  EXPECT_GE(SpearmanRho(e.scores, w.cwiseAbs()), 0.9);
  for (int j = 0; j < d; ++j) EXPECT_LT(e.signed_raw(j) * w(j), 0.0) << "class 0 is predicted at the midpoint";
}

TEST(Lime, TopKSparsity) {
  const Mlp m = Mlp::Create({10, 8, 2}, 2);
  LimeConfig cfg;
  cfg.max_features = 3;
  RngStream rng(1);
  const Explanation e = LimeExplain(m, Vector::Constant(10, 0.4), UniformStats(10, 0.5, 0.2), cfg, rng);
  EXPECT_LE((e.scores.array() != 0).count(), 3);
  EXPECT_DOUBLE_EQ(e.scores.maxCoeff(), 1.0);
}

TEST(Lime, ConstantModelIsDegenerate) {
  const auto m = MakeFunctionModel(4, [](const Vector&) { return 0.7; });
  RngStream rng(1);
  const Explanation e = LimeExplain(m, Vector::Constant(4, 0.5), UniformStats(4, 0.5, 0.2), LimeConfig{}, rng);
  EXPECT_TRUE(e.degenerate);
  EXPECT_EQ(e.scores, Vector::Zero(4));
}

TEST(Lime, SeededReproducible) {
  const Mlp m = Mlp::Create({6, 8, 3}, 4);
  RngStream a(9), b(9);
  const FeatureStats st = UniformStats(6, 0.5, 0.2);
  EXPECT_EQ(LimeExplain(m, Vector::Constant(6, 0.3), st, LimeConfig{}, a).signed_raw,
            LimeExplain(m, Vector::Constant(6, 0.3), st, LimeConfig{}, b).signed_raw);
}

TEST(KernelShap, KernelWeight) {
  EXPECT_DOUBLE_EQ(ShapKernelWeight(3, 1), 1.0 / 3.0);
  // (M-1) / (C(M,s) s (M-s)) for M = 5, s = 2: 4 / (10 * 2 * 3).
  EXPECT_DOUBLE_EQ(ShapKernelWeight(5, 2), 4.0 / 60.0);
  EXPECT_TRUE(std::isinf(ShapKernelWeight(3, 0)));
  EXPECT_TRUE(std::isinf(ShapKernelWeight(3, 3)));
}

TEST(KernelShap, EnumerationMatchesExact) {
  for (int d : {3, 5, 7}) {
    const Mlp m = Mlp::Create({d, 10, 3}, static_cast<uint64_t>(d));
    RngStream rng(static_cast<uint64_t>(d));
    Vector x(d);
    for (int j = 0; j < d; ++j) x(j) = rng.Uniform();
    Matrix bg(3, d);
    for (Eigen::Index i = 0; i < bg.size(); ++i) bg.data()[i] = rng.Uniform();
    const Background background{bg};
    KernelShapConfig cfg;
    cfg.enumerate_all = true;
    const Explanation ks = KernelShapExplain(m, x, background, cfg, rng);
    const Explanation ex = ExactShapley(m, x, background);
    EXPECT_LT((ks.signed_raw - ex.signed_raw).cwiseAbs().maxCoeff(), 1e-6) << "d=" << d;
  }
}

TEST(KernelShap, ConstantModelGivesZero) {
  const auto m = MakeFunctionModel(5, [](const Vector&) { return 0.3; });
  RngStream rng(1);
  const Explanation e = KernelShapExplain(m, Vector::Constant(5, 0.9), Single(Vector::Zero(5)),
                                          KernelShapConfig{}, rng);
  EXPECT_LT(e.signed_raw.cwiseAbs().maxCoeff(), 1e-12);
}

TEST(KernelShap, TooFewFeatures) {
  const auto m = MakeFunctionModel(1, [](const Vector& x) { return x(0); });
  RngStream rng(1);
  ExpectErrorClass([&] { KernelShapExplain(m, Vector::Constant(1, 0.5), Single(Vector::Zero(1)), KernelShapConfig{}, rng); },
                   ErrorClass::kConfiguration);
}

TEST(KernelShap, SampledModeKeepsEfficiencyAndApproximatesExact) {
  const int d = 12;
  const Mlp m = Mlp::Create({d, 16, 2}, 6);
  RngStream rng(2);
  const Vector x = Vector::Constant(d, 0.8);
  const Background bg = Single(Vector::Constant(d, 0.2));
  KernelShapConfig cfg;
  cfg.n_samples = 2048;
  const Explanation ks = KernelShapExplain(m, x, bg, cfg, rng);
  const Explanation ex = ExactShapley(m, x, bg);
  Eigen::Index t = 0;
  m.Probabilities(x).maxCoeff(&t);
  const double gap = m.Probabilities(x)(t) - m.Probabilities(bg.rows.row(0).transpose())(t);
  EXPECT_NEAR(ks.signed_raw.sum(), gap, 1e-9);
  EXPECT_LT((ks.signed_raw - ex.signed_raw).cwiseAbs().maxCoeff(), 0.02 * ex.signed_raw.cwiseAbs().maxCoeff() + 1e-9);
}

// f(x) = c + sum g_i(x_i).
double Additive(const Vector& x) {
  return 0.55 + 0.1 * x(0) * x(0) + 0.15 * std::sin(x(1)) + 0.05 * x(2) - 0.08 * std::sqrt(x(3));
}

TEST(PermShap, AdditiveModelExactWithOnePermutation) {
  const auto m = MakeFunctionModel(4, Additive);
  const Vector x = (Vector(4) << 0.9, 0.8, 0.7, 0.1).finished();
  const Vector b = (Vector(4) << 0.2, 0.3, 0.1, 0.6).finished();
  ASSERT_EQ(m.Predict(x), 1);
  auto g = [&](int i, double v) {
    Vector z = b;
    z(i) = v;
    return Additive(z) - Additive(b);
  };
  PermShapConfig cfg;
  cfg.n_permutations = 1;
  for (uint64_t seed : {1, 2, 3}) {
    RngStream rng(seed);
    const Explanation e = PermShapExplain(m, x, Single(b), cfg, rng);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(e.signed_raw(i), g(i, x(i)), 1e-12);
  }
  RngStream rng(1);
  KernelShapConfig kcfg;
  kcfg.enumerate_all = true;
  const Explanation k = KernelShapExplain(m, x, Single(b), kcfg, rng);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(k.signed_raw(i), g(i, x(i)), 1e-12);
}

TEST(PermShap, ExhaustiveMatchesExact) {
  for (int d : {3, 4, 5}) {
    const Mlp m = Mlp::Create({d, 8, 2}, 30 + static_cast<uint64_t>(d));
    RngStream rng(static_cast<uint64_t>(d));
    Vector x(d);
    for (int j = 0; j < d; ++j) x(j) = rng.Uniform();
    const Background bg = Single(Vector::Constant(d, 0.5));
    PermShapConfig cfg;
    cfg.exhaustive = true;
    const Explanation ps = PermShapExplain(m, x, bg, cfg, rng);
    EXPECT_LT((ps.signed_raw - ExactShapley(m, x, bg).signed_raw).cwiseAbs().maxCoeff(), 1e-6);
  }
}

TEST(PermShap, EfficiencyPerPermutationPair) {
  const Mlp m = Mlp::Create({6, 8, 3}, 8);
  const Vector x = Vector::Constant(6, 0.9);
  const Background bg = Single(Vector::Constant(6, 0.1));
  PermShapConfig cfg;
  cfg.n_permutations = 3;
  RngStream rng(4);
  const Explanation e = PermShapExplain(m, x, bg, cfg, rng);
  Eigen::Index t = 0;
  m.Probabilities(x).maxCoeff(&t);
  EXPECT_NEAR(e.signed_raw.sum(), m.Probabilities(x)(t) - m.Probabilities(bg.rows.row(0).transpose())(t), 1e-12);
}

TEST(ExactShapley, Axioms) {
  // Features 0 and 1 are exchangeable; feature 3 is ignored.
  const auto m = MakeFunctionModel(4, [](const Vector& x) {
    return Sigmoid(3.0 * x(0) * x(1) + x(2) - 0.5 * x(0) - 0.5 * x(1));
  });
  const Vector x = (Vector(4) << 0.3, 0.3, 0.9, 0.7).finished();
  const Vector b = (Vector(4) << 0.8, 0.8, 0.1, 0.2).finished();
  const Explanation e = ExactShapley(m, x, Single(b));
  Eigen::Index t = 0;
  m.Probabilities(x).maxCoeff(&t);
  EXPECT_NEAR(e.signed_raw.sum(), m.Probabilities(x)(t) - m.Probabilities(b)(t), 1e-9);
  EXPECT_NEAR(e.signed_raw(0), e.signed_raw(1), 1e-9);
  EXPECT_NEAR(e.signed_raw(3), 0.0, 1e-9);
  EXPECT_EQ(e.method, Method::kExactShapley);
}

TEST(ExactShapley, RefusesWideInputs) {
  const Mlp m = Mlp::Create({13, 2}, 0);
  ExpectErrorClass([&] { ExactShapley(m, Vector::Zero(13), Single(Vector::Zero(13))); }, ErrorClass::kRefusal);
}

TEST(Cem, OneDimensionalLogisticPushesAlongWeight) {
  // Decision boundary at x = 0.7, instance at 0.5 on the class-0 side.
  const Mlp m = LinearLogistic(Vector::Constant(1, 5.0), -3.5);
  const Vector x = Vector::Constant(1, 0.5);
  ASSERT_EQ(m.Predict(x), 0);
  const CemResult r = CemPertinentNegative(m, x, UniformStats(1, 0.5, 0.3), CemConfig{});
  ASSERT_TRUE(r.success);
  EXPECT_GT(r.perturbed(0), 0.7);
  EXPECT_LE(r.perturbed(0), 1.0);
  EXPECT_EQ(r.new_class, 1);
  EXPECT_EQ(m.Predict(r.perturbed), 1);
  EXPECT_DOUBLE_EQ(r.explanation.scores(0), 1.0);

  const Mlp neg = LinearLogistic(Vector::Constant(1, -5.0), 1.5);
  ASSERT_EQ(neg.Predict(x), 0);
  const CemResult rn = CemPertinentNegative(neg, x, UniformStats(1, 0.5, 0.3), CemConfig{});
  ASSERT_TRUE(rn.success);
  EXPECT_LT(rn.perturbed(0), 0.3);
}

TEST(Cem, ZeroStdFeatureHasNoImportance) {
  const Mlp m = LinearLogistic((Vector(2) << 5.0, 5.0).finished(), -7.0);
  const Vector x = Vector::Constant(2, 0.5);
  FeatureStats st = UniformStats(2, 0.5, 0.25);
  st.std(1) = 0.0;
  const CemResult r = CemPertinentNegative(m, x, st, CemConfig{});
  ASSERT_TRUE(r.success);
  EXPECT_NE(r.perturbed(1), x(1));
  EXPECT_EQ(r.explanation.scores(1), 0.0);
  EXPECT_EQ(m.Predict(r.perturbed), 1);
}

TEST(Cem, UnreachableFlipIsNoSolution) {
  // Class 1 needs x > 1.2, outside the box.
  const Mlp m = LinearLogistic(Vector::Constant(1, 5.0), -6.0);
  CemConfig cfg;
  cfg.c_steps = 3;
  cfg.max_iterations = 100;
  const CemResult r = CemPertinentNegative(m, Vector::Constant(1, 0.5), UniformStats(1, 0.5, 0.3), cfg);
  EXPECT_FALSE(r.success);
  EXPECT_EQ(r.perturbed, Vector::Constant(1, 0.5));
}

TEST(Dice, DppDeterminant) {
  const Vector a = (Vector(3) << 0.1, 0.2, 0.3).finished();
  const Vector b = (Vector(3) << 0.4, 0.2, 0.0).finished();
  EXPECT_DOUBLE_EQ(DppDiversity({a}), 1.0);
  EXPECT_NEAR(DppDiversity({a, a}), 0.0, 1e-15);
  const double k = 1.0 / (1.0 + 0.6);
  EXPECT_NEAR(DppDiversity({a, b}), 1.0 - k * k, 1e-15);
}

TEST(Dice, CounterfactualsFlipPrediction) {
  const Mlp m = LinearLogistic((Vector(3) << 4.0, -3.0, 2.0).finished(), -1.0);
  const Vector x = (Vector(3) << 0.2, 0.5, 0.3).finished();
  for (int k : {1, 3}) {
    DiceConfig cfg;
    cfg.k = k;
    RngStream rng(7);
    const DiceResult r = DiceCounterfactuals(m, x, cfg, rng);
    ASSERT_TRUE(r.success);
    EXPECT_EQ(r.desired_class, 1 - m.Predict(x));
    EXPECT_EQ(r.candidates.size(), static_cast<size_t>(k));
    for (const Vector& c : r.counterfactuals) {
      EXPECT_EQ(m.Predict(c), r.desired_class);
      EXPECT_TRUE((c.array() >= 0).all() && (c.array() <= 1).all());
    }
  }
}

TEST(McLime, SingleSensitiveFeature) {
  const auto m = MakeFunctionModel(4, [](const Vector& x) { return Sigmoid(40.0 * (x(2) - 0.6) + 0.3 * x(0)); });
  const Vector x = Vector::Constant(4, 0.5);
  ASSERT_EQ(m.Predict(x), 0);
  const FeatureStats st = UniformStats(4, 0.5, 0.25);
  RngStream rng(1);
  const Explanation lime = LimeExplain(m, x, st, LimeConfig{}, rng);
  const McLimeResult r = McLime(m, x, lime, st, McLimeConfig{});
  ASSERT_TRUE(r.success);
  EXPECT_EQ(r.features, std::vector<int>{2});
  EXPECT_EQ(m.Predict(r.modified), 1);
  EXPECT_EQ(r.explanation.scores, (Vector(4) << 0, 0, 1, 0).finished());
}

TEST(McLime, ReturnedSetIsMinimal) {
  // Needs both x0 and x1 above 0.6.
  const auto m = MakeFunctionModel(4, [](const Vector& x) {
    return Sigmoid(40.0 * (std::min(x(0), x(1)) - 0.6) + 0.2 * x(3));
  });
  const Vector x = Vector::Constant(4, 0.5);
  const FeatureStats st = UniformStats(4, 0.5, 0.25);
  RngStream rng(2);
  const Explanation lime = LimeExplain(m, x, st, LimeConfig{}, rng);
  McLimeConfig cfg;
  const McLimeResult r = McLime(m, x, lime, st, cfg);
  ASSERT_TRUE(r.success);
  std::vector<int> sorted = r.features;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<int>{0, 1}));
  EXPECT_NE(m.Predict(r.modified), m.Predict(x));

  Vector direction(4), step(4);
  for (int j = 0; j < 4; ++j) {
    direction(j) = lime.signed_raw(j) > 0 ? -1.0 : 1.0;
    step(j) = cfg.step_fraction * st.std(j);
  }
  const int orig = m.Predict(x);
  const size_t n = r.features.size();
  for (uint32_t bits = 1; bits + 1 < (1u << n); ++bits) {
    std::vector<int> subset;
    for (size_t i = 0; i < n; ++i) {
      if (bits >> i & 1u) subset.push_back(r.features[i]);
    }
    EXPECT_FALSE(McLimeTryGroup(m, x, subset, direction, step, orig, cfg).has_value());
  }
}

TEST(McLime, AlreadyAtDesiredClass) {
  const auto m = MakeFunctionModel(3, [](const Vector& x) { return Sigmoid(x(0) - 0.2); });
  const Vector x = Vector::Constant(3, 0.5);
  const FeatureStats st = UniformStats(3, 0.5, 0.25);
  RngStream rng(1);
  const Explanation lime = LimeExplain(m, x, st, LimeConfig{}, rng);
  McLimeConfig cfg;
  cfg.desired_class = 1;
  const McLimeResult r = McLime(m, x, lime, st, cfg);
  EXPECT_TRUE(r.success);
  EXPECT_TRUE(r.features.empty());
  EXPECT_EQ(r.explanation.scores, Vector::Zero(3));
}

TEST(DummyFeature, SilentAcrossExplainers) {
  const int d = 20, dummy = 7;
  Mlp m = Mlp::Create({d, 16, 2}, 12);
  m.layers()[0].weights.col(dummy).setZero();
  const FeatureStats st = UniformStats(d, 0.5, 0.25);
  const Vector x = Vector::Constant(d, 0.5);
  const Background bg = Single(st.mean);
  RngStream rng(1);

  LimeConfig lime_cfg;
  lime_cfg.n_samples = 20000;
  const Explanation lime = LimeExplain(m, x, st, lime_cfg, rng);
  EXPECT_LE(lime.scores(dummy), 1e-3);

  Vector xs = x;
  xs(0) = 0.9;
  xs(dummy) = 0.1;
  KernelShapConfig ks_cfg;
  ks_cfg.n_samples = 20000;
  EXPECT_LE(KernelShapExplain(m, xs, bg, ks_cfg, rng).scores(dummy), 1e-3);
  PermShapConfig ps_cfg;
  ps_cfg.n_permutations = 20;
  EXPECT_LE(PermShapExplain(m, xs, bg, ps_cfg, rng).scores(dummy), 1e-3);

  const CemResult cem = CemPertinentNegative(m, x, st, CemConfig{});
  EXPECT_LE(cem.explanation.scores(dummy), 1e-3);

  const DiceResult dice = DiceCounterfactuals(m, x, DiceConfig{}, rng);
  EXPECT_LE(dice.explanation.scores(dummy), 1e-3);

  const McLimeResult mc = McLime(m, x, lime, st, McLimeConfig{});
  EXPECT_LE(mc.explanation.scores(dummy), 1e-3);
}

}  // namespace
}  // namespace xailab
