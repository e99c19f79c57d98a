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

#include <gtest/gtest.h>
#include <json.hpp>

#include "xailab/gating.hpp"
#include "xailab/synthdata.hpp"
#include "xailab/train.hpp"
#include "test_util.hpp"

namespace xailab {
namespace {

double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Discriminator whose logits ignore x: zero last-layer weights, biases given.
GatingModel ConstantGate(const Vector& gate_bias, uint64_t seed = 1) {
  const int d = static_cast<int>(gate_bias.size());
  GatingModel g = GatingModel::Create(d, 2, GatingConfig{}, seed);
  auto& last = g.discriminator().layers().back();
  last.weights.setZero();
  last.bias = gate_bias;
  return g;
}

TEST(GumbelSigmoid, LargeTemperatureIsHalf) {
  RngStream rng(1);
  for (double logit : {-20.0, 0.0, 3.0, 50.0}) EXPECT_NEAR(GumbelSigmoid(logit, 1e6, rng), 0.5, 1e-4);
}

TEST(GumbelSigmoid, EqualNoiseCancels) {
  for (double logit : {-2.0, 0.3, 4.0}) {
    for (double tau : {0.5, 1.0, 5.0}) {
      EXPECT_DOUBLE_EQ(GumbelSigmoid(logit, tau, 0.7, 0.7), Sigmoid(logit / tau));
    }
  }
}

TEST(GumbelSigmoid, SymmetricAtZero) {
  RngStream rng(2);
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double s = GumbelSigmoid(0.0, 1.0, rng);
    ASSERT_GT(s, 0.0);
    ASSERT_LT(s, 1.0);
    sum += s;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(GatingForward, OpenGatesReproducePredictor) {
  const GatingModel g = ConstantGate(Vector::Constant(6, 50.0));
  const Vector x = (Vector(6) << 0.1, 0.9, 0.4, 0.3, 0.7, 0.2).finished();
  const GatingOutput out = g.Forward(x, GateMode::kInfer);
  EXPECT_EQ(out.mask, Vector::Ones(6));
  EXPECT_EQ(out.probabilities, g.predictor().Probabilities(x));
  EXPECT_EQ(g.Probabilities(x), g.predictor().Probabilities(x));
  RngStream rng(3);
  EXPECT_EQ(g.Forward(x, GateMode::kTrain, &rng).mask, Vector::Ones(6));
}

TEST(GatingForward, MaskedFeaturesCannotMatter) {
  const Vector bias = (Vector(5) << 50, -50, 50, -50, -50).finished();
  const GatingModel g = ConstantGate(bias);
  const Vector x = Vector::Constant(5, 0.5);
  const Vector p = g.Probabilities(x);
  const Matrix batch_p = g.BatchProbabilities(x.transpose());
  RngStream rng(4);
  for (int i : {1, 3, 4}) {
    for (int t = 0; t < 20; ++t) {
      Vector y = x;
      y(i) = rng.Uniform(-5, 5);
      EXPECT_EQ(g.Probabilities(y), p);
      EXPECT_EQ(g.BatchProbabilities(y.transpose()), batch_p);
    }
  }
  Vector y = x;
  y(0) = 0.9;
  EXPECT_NE(g.Probabilities(y), p);
}

TEST(GatingForward, AllClosedIsFlagged) {
  const GatingModel g = ConstantGate(Vector::Constant(4, -50.0));
  const Vector x = Vector::Constant(4, 0.5);
  const GatingOutput out = g.Forward(x, GateMode::kInfer);
  EXPECT_TRUE(out.all_zero_mask);
  EXPECT_EQ(out.probabilities, g.predictor().Probabilities(Vector::Zero(4)));
  EXPECT_FALSE(ConstantGate(Vector::Constant(4, 50.0)).Forward(x, GateMode::kInfer).all_zero_mask);
}

TEST(GatingForward, InferenceIsDeterministic) {
  const GatingModel g = GatingModel::Create(8, 3, GatingConfig{}, 5);
  const Vector x = Vector::Constant(8, 0.3);
  RngStream a(1), b(2);
  EXPECT_EQ(g.Forward(x, GateMode::kInfer, &a).probabilities, g.Forward(x, GateMode::kInfer, &b).probabilities);
  EXPECT_EQ(GatingExplain(g, x).scores, GatingExplain(g, x).scores);
  ExpectErrorClass([&] { g.Forward(x, GateMode::kTrain); }, ErrorClass::kConfiguration);
}

TEST(GatingGradients, OpenGatesMatchPlainMlp) {
  const int d = 5, n = 7;
  GatingModel g = ConstantGate(Vector::Constant(d, 50.0), 9);
  g = GatingModel(g.discriminator(), g.predictor(), g.tau(), g.threshold(), 0.0);
  RngStream rng(1);
  Matrix inputs(d, n);
  for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = rng.Uniform();
  const std::vector<int> targets{0, 1, 1, 0, 1, 0, 0};
  GatingGradients grads{g.discriminator().ZeroGradients(), g.predictor().ZeroGradients()};
  g.BatchLossGradients(inputs, targets, Matrix::Zero(d, n), &grads);

  MlpGradients expected = g.predictor().ZeroGradients();
  for (Eigen::Index b = 0; b < n; ++b) {
    const MlpGradients one = g.predictor().LossGradients(inputs.col(b), targets[static_cast<size_t>(b)]);
    for (size_t l = 0; l < one.weights.size(); ++l) {
      expected.weights[l] += one.weights[l] / n;
      expected.biases[l] += one.biases[l] / n;
    }
  }
  for (size_t l = 0; l < expected.weights.size(); ++l) {
    EXPECT_LT((grads.predictor.weights[l] - expected.weights[l]).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((grads.predictor.biases[l] - expected.biases[l]).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(GatingGradients, SparsityTermMatchesFiniteDifferences) {
  // Zero inputs make the predictor term constant, so the loss is smooth in
  // the discriminator parameters.
  const int d = 4, n = 3;
  GatingConfig cfg;
  cfg.discriminator_hidden = {6};
  cfg.l1_weight = 0.3;
  cfg.tau = 0.7;
  GatingModel g = GatingModel::Create(d, 2, cfg, 4);
  RngStream rng(8);
  for (auto& layer : g.discriminator().layers()) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias(i) = rng.Uniform(-1, 1);
  }
  const Matrix inputs = Matrix::Zero(d, n);
  const std::vector<int> targets{0, 1, 1};
  Matrix noise(d, n);
  for (Eigen::Index i = 0; i < noise.size(); ++i) noise.data()[i] = rng.Uniform(-0.5, 0.5);
  GatingGradients grads{g.discriminator().ZeroGradients(), g.predictor().ZeroGradients()};
  g.BatchLossGradients(inputs, targets, noise, &grads);

  const double h = 1e-6;
  auto& layers = g.discriminator().layers();
  for (size_t l = 0; l < layers.size(); ++l) {
    for (Eigen::Index i = 0; i < layers[l].bias.size(); ++i) {
      const double keep = layers[l].bias(i);
      layers[l].bias(i) = keep + h;
      const double up = g.BatchLossGradients(inputs, targets, noise, nullptr);
      layers[l].bias(i) = keep - h;
      const double down = g.BatchLossGradients(inputs, targets, noise, nullptr);
      layers[l].bias(i) = keep;
      EXPECT_NEAR(grads.discriminator.biases[l](i), (up - down) / (2 * h), 1e-8);
    }
  }
}

SynthLogisticData SparseLogistic() {
  SynthLogisticSpec spec;
  spec.support = {1, 8, 15};
  spec.n_instances = 2000;
  spec.seed = 3;
  return SynthLogistic(spec);
}

TrainConfig GatingTrainConfig() {
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.learning_rate = 0.01;
  cfg.seed = 1;
  return cfg;
}

TEST(GatingTrain, LearnsSparseMask) {
  const SynthLogisticData d = SparseLogistic();
  GatingModel g = GatingModel::Create(20, 2, GatingConfig{}, 1);
  const TrainHistory h = TrainGating(g, d.data, GatingTrainConfig());
  EXPECT_EQ(h.losses.size(), 40u);
  EXPECT_LT(h.losses.back(), h.initial_loss);
  EXPECT_LE(g.ActiveFraction(d.data.data), 0.4);
  EXPECT_GE(BalancedAccuracy(g, d.data), 0.8);
}

TEST(GatingTrain, SparsityMonotoneInL1) {
  const SynthLogisticData d = SparseLogistic();
  double previous = 1.0;
  for (double l1 : {0.01, 0.05, 0.2}) {
    GatingConfig cfg;
    cfg.l1_weight = l1;
    GatingModel g = GatingModel::Create(20, 2, cfg, 1);
    TrainGating(g, d.data, GatingTrainConfig());
    const double active = g.ActiveFraction(d.data.data);
    EXPECT_LE(active, previous) << "l1=" << l1;
    previous = active;
  }
}

TEST(GatingTrain, UnpenalizedLowThresholdKeepsFeatures) {
  double full_bac = 0, sparse_bac = 0;
  for (uint64_t seed : {0, 1, 2, 3}) {
    SynthLogisticSpec spec;
    spec.support = {1, 8, 15};
    spec.n_instances = 3000;
    spec.seed = 3 + seed;
    const DataSplit s = SplitStratified(SynthLogistic(spec).data, {0.8, 0.1, 0.1}, seed);
    TrainConfig tc;
    tc.seed = seed;
    GatingConfig open;
    open.l1_weight = 0.0;
    open.threshold = 0.01;
    GatingModel full = GatingModel::Create(20, 2, open, seed);
    GatingModel sparse = GatingModel::Create(20, 2, GatingConfig{}, seed);
    TrainGating(full, s.train, tc);
    TrainGating(sparse, s.train, tc);
    EXPECT_GE(full.ActiveFraction(s.test.data), 0.8);
    EXPECT_GT(full.ActiveFraction(s.test.data), sparse.ActiveFraction(s.test.data));
    full_bac += BalancedAccuracy(full, s.test) / 4;
    sparse_bac += BalancedAccuracy(sparse, s.test) / 4;
  }
  EXPECT_GE(full_bac, sparse_bac - 0.02);
}

TEST(GatingTrain, SeedDeterministic) {
  const SynthLogisticData d = SparseLogistic();
  TrainConfig cfg = GatingTrainConfig();
  cfg.epochs = 3;
  GatingModel a = GatingModel::Create(20, 2, GatingConfig{}, 1);
  GatingModel b = GatingModel::Create(20, 2, GatingConfig{}, 1);
  TrainGating(a, d.data, cfg);
  TrainGating(b, d.data, cfg);
  EXPECT_EQ(SerializeModel(a.discriminator()), SerializeModel(b.discriminator()));
  EXPECT_EQ(SerializeModel(a.predictor()), SerializeModel(b.predictor()));
}

TEST(GatingExplain, ScoresAreTheMask) {
  const GatingModel g = GatingModel::Create(10, 2, GatingConfig{}, 3);
  RngStream rng(1);
  for (int t = 0; t < 10; ++t) {
    Vector x(10);
    for (int j = 0; j < 10; ++j) x(j) = rng.Uniform();
    const Explanation e = GatingExplain(g, x);
    EXPECT_EQ(e.method, Method::kGating);
    EXPECT_EQ((e.scores.array() != 0).count(), static_cast<Eigen::Index>(g.Mask(x).sum()));
    EXPECT_EQ(e.scores, g.Mask(x));
  }
}

TEST(GatingIo, RoundTrip) {
  GatingConfig cfg;
  cfg.tau = 0.5;
  cfg.threshold = 0.6;
  cfg.l1_weight = 0.02;
  const GatingModel g = GatingModel::Create(6, 3, cfg, 2);
  TempDir dir;
  const std::string path = dir.file("gate.json");
  SaveGatingModel(g, path);
  const GatingModel back = LoadGatingModel(path);
  EXPECT_EQ(back.tau(), 0.5);
  EXPECT_EQ(back.threshold(), 0.6);
  EXPECT_EQ(back.l1_weight(), 0.02);
  const Vector x = Vector::Constant(6, 0.4);
  EXPECT_EQ(back.Probabilities(x), g.Probabilities(x));

  nlohmann::json header = nlohmann::json::parse(ReadFileForTest(path));
  header["format_version"] = 7;
  WriteFileForTest(path, header.dump());
  ExpectErrorClass([&] { LoadGatingModel(path); }, ErrorClass::kVersion);

  SaveGatingModel(g, path);
  std::filesystem::remove(path + ".predictor.json");
  ExpectErrorClass([&] { LoadGatingModel(path); }, ErrorClass::kLoad);
}

}  // namespace
}  // namespace xailab
