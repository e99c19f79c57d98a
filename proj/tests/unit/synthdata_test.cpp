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
#include <set>

#include <gtest/gtest.h>

#include "xailab/metrics.hpp"
#include "xailab/mlp.hpp"
#include "xailab/synthdata.hpp"
#include "xailab/train.hpp"
#include "test_util.hpp"

namespace xailab {
namespace {

TEST(SynthGauss, DefaultShape) {
  const SynthGaussData g = SynthGauss(SynthGaussSpec{});
  EXPECT_EQ(g.data.rows(), 5000u);
  EXPECT_EQ(g.data.cols(), 20u);
  EXPECT_EQ(g.data.NumClasses(), 2);
  EXPECT_EQ(g.cluster_masks.size(), 5u);
  for (size_t i = 0; i < g.data.rows(); ++i) EXPECT_EQ(g.data.labels[i], g.cluster[i] % 2);
}

TEST(SynthGauss, ZeroNoisePointsAreCenters) {
  SynthGaussSpec spec;
  spec.noise = 0.0;
  spec.points_per_cluster = 20;
  const SynthGaussData g = SynthGauss(spec);
  for (size_t i = 0; i < g.data.rows(); ++i) {
    EXPECT_EQ(g.data.Row(i), g.centers.row(g.cluster[i]).transpose());
  }
}

TEST(SynthGauss, Deterministic) {
  SynthGaussSpec spec;
  spec.points_per_cluster = 50;
  spec.seed = 3;
  const SynthGaussData a = SynthGauss(spec), b = SynthGauss(spec);
  EXPECT_EQ(a.data.data, b.data.data);
  EXPECT_EQ(a.data.labels, b.data.labels);
  spec.seed = 4;
  EXPECT_NE(SynthGauss(spec).data.data, a.data.data);
}

TEST(SynthGauss, CentersSeparatedAndMasksMatch) {
  SynthGaussSpec spec;
  spec.points_per_cluster = 10;
  const SynthGaussData g = SynthGauss(spec);
  for (int a = 0; a < spec.n_clusters; ++a) {
    for (int b = a + 1; b < spec.n_clusters; ++b) {
      EXPECT_GE((g.centers.row(a) - g.centers.row(b)).norm(), 3.0 * spec.noise);
    }
    const GroundTruthMask& m = g.cluster_masks[static_cast<size_t>(a)];
    ASSERT_EQ(m.size(), 20u);
    EXPECT_EQ(m.RelevantIndices().size(), 5u);
    for (int j = 0; j < 20; ++j) EXPECT_EQ(m.relevant[static_cast<size_t>(j)], g.centers(a, j) != 0.0);
  }
}

TEST(SynthGauss, InvalidSpecs) {
  SynthGaussSpec spec;
  spec.relevant_per_cluster = 0;
  ExpectErrorClass([&] { SynthGauss(spec); }, ErrorClass::kConfiguration);
  spec = SynthGaussSpec{};
  spec.n_clusters = 1;
  ExpectErrorClass([&] { SynthGauss(spec); }, ErrorClass::kConfiguration);
  spec = SynthGaussSpec{};
  spec.relevant_per_cluster = 21;
  ExpectErrorClass([&] { SynthGauss(spec); }, ErrorClass::kConfiguration);
}

TEST(SynthGauss, LearnableByMlp) {
  SynthGaussSpec spec;
  spec.points_per_cluster = 300;
  const SynthGaussData g = SynthGauss(spec);
  const Normalized n = NormalizeMinMax(g.data);
  const DataSplit s = SplitStratified(n.data, {0.8, 0.1, 0.1}, 1);
  Mlp m = Mlp::Create({20, 32, 2}, 0);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.learning_rate = 0.01;
  Train(m, s.train, cfg);
  EXPECT_GE(BalancedAccuracy(m, s.test), 0.95);
}

TEST(SynthLogistic, SupportIsTopWeights) {
  SynthLogisticSpec spec;
  spec.support = {2, 7, 11};
  const SynthLogisticData d = SynthLogistic(spec);
  const std::vector<size_t> top = TopK(d.weights.cwiseAbs(), 3);
  EXPECT_EQ(std::set<size_t>(top.begin(), top.end()), (std::set<size_t>{2, 7, 11}));
  EXPECT_EQ(d.mask.RelevantIndices(), (std::vector<size_t>{2, 7, 11}));
  ASSERT_TRUE(d.mask.weights.has_value());
  EXPECT_EQ(*d.mask.weights, d.weights);
  EXPECT_TRUE((d.data.data.array() >= 0).all() && (d.data.data.array() <= 1).all());
}

TEST(SynthLogistic, Rejections) {
  SynthLogisticSpec spec;
  spec.support.clear();
  ExpectErrorClass([&] { SynthLogistic(spec); }, ErrorClass::kConfiguration);

  spec = SynthLogisticSpec{};
  spec.n_features = 4;
  spec.support = {0, 1, 2, 3};
  spec.weights = Vector::Zero(4);
  ExpectErrorClass([&] { SynthLogistic(spec); }, ErrorClass::kConfiguration);

  spec = SynthLogisticSpec{};
  spec.support = {0, 25};
  ExpectErrorClass([&] { SynthLogistic(spec); }, ErrorClass::kConfiguration);
}

TEST(SynthLogistic, SteepNoiselessLabelsAreLearnable) {
  SynthLogisticSpec spec;
  spec.weight_scale = 1000.0;
  spec.n_instances = 3000;
  const SynthLogisticData d = SynthLogistic(spec);
  int agree = 0;
  for (size_t i = 0; i < d.data.rows(); ++i) {
    const int y = d.weights.dot(d.data.Row(i)) + d.bias > 0 ? 1 : 0;
    agree += (y == d.data.labels[i]);
  }
  EXPECT_GE(agree, 2985);

  Mlp m = Mlp::Create({20, 32, 2}, 0);
  TrainConfig cfg;
  cfg.epochs = 150;
  cfg.learning_rate = 0.01;
  Train(m, d.data, cfg);
  EXPECT_GE(BalancedAccuracy(m, d.data), 0.95);
}

TEST(NormalizeMinMax, WorkedColumns) {
  FeatureMatrix fm;
  fm.data.resize(3, 2);
  fm.data << 2, 5, 4, 5, 6, 5;
  fm.labels = {0, 1, 0};
  fm.feature_names = DefaultFeatureNames(2);
  const Normalized n = NormalizeMinMax(fm);
  EXPECT_DOUBLE_EQ(n.data.data(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(n.data.data(1, 0), 0.5);
  EXPECT_DOUBLE_EQ(n.data.data(2, 0), 1.0);
  EXPECT_EQ(n.data.data.col(1), Vector::Zero(3));
  EXPECT_EQ(n.transform.Apply(fm).data, n.data.data);
  EXPECT_EQ(n.transform.Apply(fm.Row(1)), n.data.Row(1));
}

FeatureMatrix Labeled(const std::vector<int>& labels) {
  FeatureMatrix fm;
  fm.data.resize(static_cast<Eigen::Index>(labels.size()), 1);
  for (size_t i = 0; i < labels.size(); ++i) fm.data(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
  fm.labels = labels;
  fm.feature_names = DefaultFeatureNames(1);
  return fm;
}

TEST(SplitStratified, ProportionsAndPartition) {
  std::vector<int> labels(1000, 0);
  std::fill(labels.begin() + 300, labels.end(), 1);
  const FeatureMatrix fm = Labeled(labels);
  const DataSplit s = SplitStratified(fm, {0.8, 0.1, 0.1}, 5);
  auto count = [](const FeatureMatrix& f, int c) {
    return std::count(f.labels.begin(), f.labels.end(), c);
  };
  EXPECT_NEAR(count(s.test, 0), 30, 1);
  EXPECT_NEAR(count(s.test, 1), 70, 1);
  EXPECT_NEAR(count(s.validation, 0), 30, 1);
  EXPECT_NEAR(count(s.train, 1), 560, 1);

  std::vector<size_t> all;
  for (const auto* idx : {&s.train_indices, &s.validation_indices, &s.test_indices}) {
    all.insert(all.end(), idx->begin(), idx->end());
  }
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), 1000u);
  for (size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
  for (size_t i = 0; i < s.test_indices.size(); ++i) {
    EXPECT_EQ(s.test.data(static_cast<Eigen::Index>(i), 0), static_cast<double>(s.test_indices[i]));
  }
}

TEST(SplitStratified, SeedDeterminism) {
  std::vector<int> labels(100);
  for (size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % 2);
  const FeatureMatrix fm = Labeled(labels);
  EXPECT_EQ(SplitStratified(fm, {0.8, 0.1, 0.1}, 1).test_indices,
            SplitStratified(fm, {0.8, 0.1, 0.1}, 1).test_indices);
  EXPECT_NE(SplitStratified(fm, {0.8, 0.1, 0.1}, 1).test_indices,
            SplitStratified(fm, {0.8, 0.1, 0.1}, 2).test_indices);
}

TEST(SplitStratified, Errors) {
  const FeatureMatrix fm = Labeled({0, 0, 0, 0, 1, 1});
  ExpectErrorClass([&] { SplitStratified(fm, {0.5, 0.5, 0.1}, 0); }, ErrorClass::kConfiguration);
  try {
    SplitStratified(fm, {0.8, 0.1, 0.1}, 0);
    FAIL() << "expected split error";
  } catch (const Error& e) {
    EXPECT_EQ(e.error_class(), ErrorClass::kSplit);
    EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
  }
}

TEST(Masks, FileRoundTrip) {
  SynthGaussSpec spec;
  spec.points_per_cluster = 4;
  const SynthGaussData g = SynthGauss(spec);
  MaskFile mf{g.data.feature_names, g.cluster_masks, g.cluster};
  TempDir dir;
  WriteMasks(mf, dir.file("masks.json"));
  const MaskFile back = ReadMasks(dir.file("masks.json"));
  EXPECT_EQ(back.feature_names, mf.feature_names);
  EXPECT_EQ(back.assignment, mf.assignment);
  ASSERT_EQ(back.masks.size(), mf.masks.size());
  for (size_t i = 0; i < mf.masks.size(); ++i) EXPECT_EQ(back.masks[i].relevant, mf.masks[i].relevant);
}

}  // namespace
}  // namespace xailab
