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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <gtest/gtest.h>
#include <json.hpp>

#include "xailab/error.hpp"
#include "xailab/mlp.hpp"
#include "xailab/rng.hpp"
#include "xailab/train.hpp"
#include "test_util.hpp"

namespace xailab {
namespace {

TEST(Rng, SameSeedSameSequence) {
  RngStream a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.NextU64(), b.NextU64());
}

TEST(Rng, ForkIgnoresConsumedDraws) {
  RngStream a(9), b(9);
  for (int i = 0; i < 17; ++i) a.Normal();
  RngStream fa = a.Fork(3), fb = b.Fork(3);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(fa.NextU64(), fb.NextU64());
  EXPECT_NE(b.Fork(3).seed(), b.Fork(4).seed());
}

TEST(Rng, MomentsAreSane) {
  RngStream rng(1);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, sg = 0;
  for (int i = 0; i < n; ++i) {
    su += rng.Uniform();
    const double z = rng.Normal();
    sn += z;
    sn2 += z * z;
    sg += rng.Gumbel();
  }
  EXPECT_NEAR(su / n, 0.5, 0.005);
  EXPECT_NEAR(sn / n, 0.0, 0.01);
  EXPECT_NEAR(sn2 / n, 1.0, 0.02);
  // Euler-Mascheroni constant.
  EXPECT_NEAR(sg / n, 0.5772156649, 0.01);
}

TEST(Rng, ShuffleIsPermutation) {
  RngStream rng(5);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.Shuffle(v.begin(), v.end());
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(rng.UniformIndex(7), 7u);
}

TEST(MlpCreate, RejectsTooFewLayers) {
  ExpectErrorClass([] { Mlp::Create({3}, 0); }, ErrorClass::kConfiguration);
  ExpectErrorClass([] { Mlp::Create({}, 0); }, ErrorClass::kConfiguration);
  ExpectErrorClass([] { Mlp::Create({3, 0, 2}, 0); }, ErrorClass::kConfiguration);
}

TEST(MlpCreate, SeedDeterminesWeights) {
  const Mlp a = Mlp::Create({4, 8, 3}, 7);
  const Mlp b = Mlp::Create({4, 8, 3}, 7);
  const Mlp c = Mlp::Create({4, 8, 3}, 8);
  EXPECT_EQ(a.layers()[0].weights, b.layers()[0].weights);
  EXPECT_NE(a.layers()[0].weights, c.layers()[0].weights);
  EXPECT_EQ(a.head(), OutputHead::kSoftmax);
  EXPECT_EQ(Mlp::Create({4, 2}, 0).head(), OutputHead::kLogistic);
}

TEST(MlpForward, ZeroWeightsGiveUniform) {
  for (int classes : {2, 3, 5}) {
    Mlp m = Mlp::Create({4, 6, classes}, 1);
    for (auto& layer : m.layers()) {
      layer.weights.setZero();
      layer.bias.setZero();
    }
    const Vector p = m.Probabilities(Vector::Constant(4, 0.3));
    ASSERT_EQ(p.size(), classes);
    for (int c = 0; c < classes; ++c) EXPECT_DOUBLE_EQ(p(c), 1.0 / classes);
  }
}

// Straight scalar loops, independent of the Eigen implementation.
std::vector<double> ScalarForward(const Mlp& m, std::vector<double> a) {
  const auto& layers = m.layers();
  for (size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weights;
    std::vector<double> z(static_cast<size_t>(w.rows()));
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      double s = layers[l].bias(i);
      for (Eigen::Index j = 0; j < w.cols(); ++j) s += w(i, j) * a[static_cast<size_t>(j)];
      z[static_cast<size_t>(i)] = (l + 1 < layers.size()) ? std::max(0.0, s) : s;
    }
    a = z;
  }
  if (m.head() == OutputHead::kLogistic) {
    const double p1 = 1.0 / (1.0 + std::exp(-a[0]));
    return {1.0 - p1, p1};
  }
  double mx = *std::max_element(a.begin(), a.end());
  double total = 0;
  for (double& v : a) total += (v = std::exp(v - mx));
  for (double& v : a) v /= total;
  return a;
}

TEST(MlpForward, MatchesScalarOracle) {
  for (const std::vector<int>& dims : {std::vector<int>{5, 7, 4, 3}, std::vector<int>{5, 6, 2}}) {
    const Mlp m = Mlp::Create(dims, 11);
    RngStream rng(3);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> xs(5);
      Vector x(5);
      for (int j = 0; j < 5; ++j) x(j) = xs[static_cast<size_t>(j)] = rng.Uniform(-2, 2);
      const Vector p = m.Probabilities(x);
      const std::vector<double> o = ScalarForward(m, xs);
      ASSERT_EQ(static_cast<size_t>(p.size()), o.size());
      for (size_t c = 0; c < o.size(); ++c) EXPECT_NEAR(p(static_cast<Eigen::Index>(c)), o[c], 1e-12);
      EXPECT_NEAR(p.sum(), 1.0, 1e-12);
    }
  }
}

TEST(MlpForward, BatchMatchesSingle) {
  const Mlp m = Mlp::Create({4, 8, 3}, 2);
  RngStream rng(2);
  Matrix rows(10, 4);
  for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = rng.Uniform();
  const Matrix batch = m.BatchProbabilities(rows);
  for (Eigen::Index i = 0; i < 10; ++i) {
    EXPECT_LT((batch.row(i).transpose() - m.Probabilities(rows.row(i).transpose())).norm(), 1e-14);
  }
}

TEST(MlpForward, InputErrors) {
  const Mlp m = Mlp::Create({3, 4, 2}, 0);
  ExpectErrorClass([&] { m.Probabilities(Vector::Zero(4)); }, ErrorClass::kShape);
  Vector bad = Vector::Zero(3);
  bad(1) = std::nan("");
  ExpectErrorClass([&] { m.Probabilities(bad); }, ErrorClass::kInput);
}

TEST(MlpGradient, LogisticClosedForm) {
  Mlp m = Mlp::Create({3, 2}, 4);
  const Vector w = m.layers()[0].weights.row(0).transpose();
  const double b = m.layers()[0].bias(0);
  const Vector x = (Vector(3) << 0.2, -0.7, 1.3).finished();
  for (int y : {0, 1}) {
    const double p = 1.0 / (1.0 + std::exp(-(w.dot(x) + b)));
    const Vector expected = (p - y) * w;
    EXPECT_LT((m.InputGradient(x, y) - expected).norm(), 1e-12);
  }
}

TEST(MlpGradient, MatchesFiniteDifferences) {
  const Mlp m = Mlp::Create({4, 6, 5, 3}, 21);
  const Vector x = (Vector(4) << 0.3, 0.8, 0.1, 0.55).finished();
  const Vector g = m.InputGradient(x, 2);
  const Vector up = (Vector(3) << 0.4, -1.0, 0.25).finished();
  const Vector vjp = m.ProbabilityVjp(x, up);
  const double h = 1e-6;
  for (int j = 0; j < 4; ++j) {
    Vector xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    EXPECT_NEAR(g(j), (m.Loss(xp, 2) - m.Loss(xm, 2)) / (2 * h), 1e-7);
    EXPECT_NEAR(vjp(j), (up.dot(m.Probabilities(xp)) - up.dot(m.Probabilities(xm))) / (2 * h), 1e-7);
  }
}

TEST(MlpGradient, ZeroFirstLayerGivesZeroInputGradient) {
  Mlp m = Mlp::Create({4, 5, 2}, 3);
  m.layers()[0].weights.setZero();
  EXPECT_EQ(m.InputGradient(Vector::Constant(4, 0.5), 1).cwiseAbs().maxCoeff(), 0.0);
}

FeatureMatrix TwoClusters(int n, uint64_t seed) {
  RngStream rng(seed);
  FeatureMatrix fm;
  fm.data.resize(n, 2);
  fm.feature_names = DefaultFeatureNames(2);
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    const double c = y ? 1.0 : -1.0;
    fm.data(i, 0) = c + 0.3 * rng.Normal();
    fm.data(i, 1) = c + 0.3 * rng.Normal();
    fm.labels.push_back(y);
  }
  return fm;
}

TEST(Train, SeparableClustersReachHighAccuracy) {
  const FeatureMatrix data = TwoClusters(400, 1);
  Mlp m = Mlp::Create({2, 8, 2}, 0);
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 0.01;
  const TrainHistory h = Train(m, data, cfg);
  EXPECT_GT(BalancedAccuracy(m, TwoClusters(400, 2)), 0.95);
  ASSERT_EQ(h.losses.size(), 200u);
  EXPECT_LT(h.losses.back(), h.initial_loss);
}

TEST(Train, Deterministic) {
  const FeatureMatrix data = TwoClusters(200, 1);
  TrainConfig cfg;
  cfg.epochs = 5;
  Mlp a = Mlp::Create({2, 8, 2}, 0), b = Mlp::Create({2, 8, 2}, 0);
  Train(a, data, cfg);
  Train(b, data, cfg);
  EXPECT_EQ(SerializeModel(a), SerializeModel(b));
}

TEST(Train, ZeroEpochsRejected) {
  const FeatureMatrix data = TwoClusters(20, 1);
  Mlp m = Mlp::Create({2, 4, 2}, 0);
  TrainConfig cfg;
  cfg.epochs = 0;
  ExpectErrorClass([&] { Train(m, data, cfg); }, ErrorClass::kConfiguration);
}

TEST(Train, ShapeMismatch) {
  const FeatureMatrix data = TwoClusters(20, 1);
  Mlp m = Mlp::Create({3, 4, 2}, 0);
  ExpectErrorClass([&] { Train(m, data, TrainConfig{}); }, ErrorClass::kShape);
}

TEST(Train, DivergenceCarriesEpoch) {
  const FeatureMatrix data = TwoClusters(20, 1);
  Mlp m = Mlp::Create({2, 4, 2}, 0);
  m.layers()[0].weights.setConstant(1e308);
  m.layers()[1].weights.setConstant(1e308);
  TrainConfig cfg;
  cfg.epochs = 3;
  try {
    Train(m, data, cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.error_class(), ErrorClass::kDivergence);
    EXPECT_GE(e.epoch(), 0);
    EXPECT_LE(e.epoch(), 3);
  }
}

TEST(Train, EarlyStoppingRestoresBest) {
  const FeatureMatrix data = TwoClusters(200, 1);
  const FeatureMatrix val = TwoClusters(100, 9);
  Mlp m = Mlp::Create({2, 8, 2}, 0);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.learning_rate = 0.05;
  cfg.patience = 5;
  const TrainHistory h = Train(m, data, cfg, &val);
  ASSERT_GE(h.best_epoch, 0);
  ASSERT_EQ(h.validation_losses.size(), h.losses.size());
  const double best = *std::min_element(h.validation_losses.begin(), h.validation_losses.end());
  EXPECT_DOUBLE_EQ(h.validation_losses[static_cast<size_t>(h.best_epoch)], best);
  EXPECT_NEAR(MeanLoss(m, val), best, 1e-12);
}

TEST(BalancedAccuracy, HandCases) {
  const std::vector<int> labels{0, 0, 1, 1};
  EXPECT_DOUBLE_EQ(BalancedAccuracy(labels, labels, 2), 1.0);
  EXPECT_DOUBLE_EQ(BalancedAccuracy(std::vector<int>{1, 1, 1, 1}, labels, 2), 0.5);
  // Recall 1/2 on class 0 and 1 on class 1.
  EXPECT_DOUBLE_EQ(BalancedAccuracy(std::vector<int>{0, 1, 1, 1}, labels, 2), 0.75);
  // Three classes, unbalanced: recalls 2/3, 1, 0.
  EXPECT_DOUBLE_EQ(BalancedAccuracy(std::vector<int>{0, 0, 1, 1, 1}, std::vector<int>{0, 0, 0, 1, 2}, 3),
                   (2.0 / 3.0 + 1.0 + 0.0) / 3.0);
  ExpectErrorClass([&] { BalancedAccuracy(labels, labels, 3); }, ErrorClass::kMetric);
}

TEST(ModelIo, RoundTripIsExact) {
  const Mlp m = Mlp::Create({5, 7, 3}, 13);
  const Mlp back = DeserializeModel(SerializeModel(m));
  ASSERT_EQ(back.layer_dims(), m.layer_dims());
  EXPECT_EQ(back.head(), m.head());
  for (size_t l = 0; l < m.layers().size(); ++l) {
    EXPECT_EQ(back.layers()[l].weights, m.layers()[l].weights);
    EXPECT_EQ(back.layers()[l].bias, m.layers()[l].bias);
  }
  TempDir dir;
  SaveModel(m, dir.file("m.json"));
  EXPECT_EQ(SerializeModel(LoadModel(dir.file("m.json"))), SerializeModel(m));
}

TEST(ModelIo, RejectsBadFiles) {
  const std::string text = SerializeModel(Mlp::Create({3, 4, 2}, 0));
  ExpectErrorClass([&] { DeserializeModel(text.substr(0, text.size() / 2)); }, ErrorClass::kLoad);
  ExpectErrorClass([&] { DeserializeModel("not json"); }, ErrorClass::kLoad);
  ExpectErrorClass([&] { LoadModel("/nonexistent/model.json"); }, ErrorClass::kLoad);

  nlohmann::json doc = nlohmann::json::parse(text);
  doc["format_version"] = 2;
  ExpectErrorClass([&] { DeserializeModel(doc.dump()); }, ErrorClass::kVersion);

  doc = nlohmann::json::parse(text);
  doc["layer_dims"] = {3, 4, 5};
  ExpectErrorClass([&] { DeserializeModel(doc.dump()); }, ErrorClass::kLoad);

  doc = nlohmann::json::parse(text);
  doc["layers"][0]["weights"].erase(0);
  ExpectErrorClass([&] { DeserializeModel(doc.dump()); }, ErrorClass::kLoad);
}

TEST(DatasetIo, CsvRoundTrip) {
  const FeatureMatrix data = TwoClusters(30, 4);
  TempDir dir;
  WriteCsv(data, dir.file("d.csv"));
  const FeatureMatrix back = ReadCsv(dir.file("d.csv"));
  EXPECT_EQ(back.data, data.data);
  EXPECT_EQ(back.labels, data.labels);
  EXPECT_EQ(back.feature_names, data.feature_names);
  ExpectErrorClass([] { ReadCsv("/nonexistent/d.csv"); }, ErrorClass::kIo);
}

}  // namespace
}  // namespace xailab
