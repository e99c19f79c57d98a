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

#include "xailab/gating.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <json.hpp>

#include "csv_util.hpp"
#include "xailab/error.hpp"

namespace xailab {

namespace {

constexpr const char* kGatingFormatName = "xailab-gating";

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix GumbelNoise(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Matrix noise(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double g1 = rng.Gumbel();
      const double g2 = rng.Gumbel();
      noise(r, c) = g1 - g2;
    }
  }
  return noise;
}

double GatingMeanLoss(const GatingModel& model, const FeatureMatrix& data) {
  const Matrix inputs = data.data.transpose();
  return model.BatchLossGradients(inputs, data.labels, Matrix::Zero(inputs.rows(), inputs.cols()), nullptr);
}

}  // namespace

double GumbelSigmoid(double logit, double tau, double g1, double g2) {
  return Sigmoid((logit + g1 - g2) / tau);
}

double GumbelSigmoid(double logit, double tau, RngStream& rng) {
  const double g1 = rng.Gumbel();
  const double g2 = rng.Gumbel();
  return GumbelSigmoid(logit, tau, g1, g2);
}

void GatingConfig::Validate() const {
  if (!(tau > 0)) throw Error(ErrorClass::kConfiguration, "tau must be > 0");
  if (!(threshold > 0 && threshold < 1)) throw Error(ErrorClass::kConfiguration, "threshold must be in (0, 1)");
  if (!(l1_weight >= 0)) throw Error(ErrorClass::kConfiguration, "l1_weight must be >= 0");
  for (int h : discriminator_hidden) {
    if (h < 1) throw Error(ErrorClass::kConfiguration, "hidden widths must be >= 1");
  }
  for (int h : predictor_hidden) {
    if (h < 1) throw Error(ErrorClass::kConfiguration, "hidden widths must be >= 1");
  }
}

GatingModel GatingModel::Create(int n_features, int n_classes, const GatingConfig& cfg, uint64_t seed) {
  cfg.Validate();
  if (n_features < 1 || n_classes < 2) {
    throw Error(ErrorClass::kConfiguration, "gating needs >= 1 feature and >= 2 classes");
  }
  std::vector<int> disc_dims{n_features};
  disc_dims.insert(disc_dims.end(), cfg.discriminator_hidden.begin(), cfg.discriminator_hidden.end());
  disc_dims.push_back(n_features);
  std::vector<int> pred_dims{n_features};
  pred_dims.insert(pred_dims.end(), cfg.predictor_hidden.begin(), cfg.predictor_hidden.end());
  pred_dims.push_back(n_classes);
  return GatingModel(Mlp::Create(disc_dims, MixSeed(seed, 1), OutputHead::kLinear),
                     Mlp::Create(pred_dims, MixSeed(seed, 2)), cfg.tau, cfg.threshold, cfg.l1_weight);
}

GatingModel::GatingModel(Mlp discriminator, Mlp predictor, double tau, double threshold, double l1_weight)
    : discriminator_(std::move(discriminator)),
      predictor_(std::move(predictor)),
      tau_(tau),
      threshold_(threshold),
      l1_weight_(l1_weight) {
  if (discriminator_.head() != OutputHead::kLinear) {
    throw Error(ErrorClass::kConfiguration, "discriminator must have a linear head");
  }
  if (discriminator_.input_dim() != predictor_.input_dim() ||
      discriminator_.num_classes() != predictor_.input_dim()) {
    throw Error(ErrorClass::kShape, "discriminator output must match the predictor input");
  }
  if (!(tau_ > 0)) throw Error(ErrorClass::kConfiguration, "tau must be > 0");
  if (!(threshold_ > 0 && threshold_ < 1)) throw Error(ErrorClass::kConfiguration, "threshold must be in (0, 1)");
  if (!(l1_weight_ >= 0)) throw Error(ErrorClass::kConfiguration, "l1_weight must be >= 0");
}

GatingOutput GatingModel::Forward(const Vector& x, GateMode mode, RngStream* rng) const {
  if (mode == GateMode::kTrain && rng == nullptr) {
    throw Error(ErrorClass::kConfiguration, "training-mode gates need an rng");
  }
  const Vector logits = discriminator_.Logits(x);
  GatingOutput out;
  out.soft.resize(x.size());
  out.mask.resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    out.soft(i) = mode == GateMode::kTrain ? GumbelSigmoid(logits(i), tau_, *rng) : Sigmoid(logits(i) / tau_);
    out.mask(i) = out.soft(i) >= threshold_ ? 1.0 : 0.0;
  }
  out.all_zero_mask = (out.mask.array() == 0.0).all();
  out.probabilities = predictor_.Probabilities(x.cwiseProduct(out.mask));
  return out;
}

Vector GatingModel::Mask(const Vector& x) const {
  const Vector logits = discriminator_.Logits(x);
  Vector mask(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) mask(i) = Sigmoid(logits(i) / tau_) >= threshold_ ? 1.0 : 0.0;
  return mask;
}

Vector GatingModel::Probabilities(const Vector& x) const {
  return predictor_.Probabilities(x.cwiseProduct(Mask(x)));
}

Vector GatingModel::ProbabilityVjp(const Vector& x, const Vector& upstream) const {
  const Vector mask = Mask(x);
  return predictor_.ProbabilityVjp(x.cwiseProduct(mask), upstream).cwiseProduct(mask);
}

Matrix GatingModel::BatchProbabilities(const Matrix& rows) const {
  const Matrix inputs = rows.transpose();
  const Matrix logits = discriminator_.Forward(inputs).logits();
  const Matrix mask = ((logits.array() / tau_).unaryExpr(&Sigmoid) >= threshold_).cast<double>();
  const Matrix masked = inputs.cwiseProduct(mask);
  return HeadProbabilities(predictor_.head(), predictor_.Forward(masked).logits()).transpose();
}

double GatingModel::BatchLossGradients(const Matrix& inputs, std::span<const int> targets,
                                       const Matrix& gumbel_noise, GatingGradients* grads) const {
  const Eigen::Index d = inputs.rows();
  const Eigen::Index n = inputs.cols();
  if (d != input_dim() || static_cast<Eigen::Index>(targets.size()) != n || gumbel_noise.rows() != d ||
      gumbel_noise.cols() != n) {
    throw Error(ErrorClass::kShape, "gating batch shapes do not match");
  }
  const ForwardCache disc = discriminator_.Forward(inputs);
  const Matrix soft = ((disc.logits() + gumbel_noise).array() / tau_).unaryExpr(&Sigmoid);
  const Matrix mask = (soft.array() >= threshold_).cast<double>();
  const ForwardCache pred = predictor_.Forward(inputs.cwiseProduct(mask));
  const double scale = 1.0 / static_cast<double>(n);
  const double loss = HeadCrossEntropy(predictor_.head(), pred.logits(), targets) + l1_weight_ * soft.mean();
  if (grads == nullptr) return loss;

  const Matrix d_logits = HeadCrossEntropyGrad(predictor_.head(), pred.logits(), targets) * scale;
  const Matrix d_masked = predictor_.Backward(pred, d_logits, &grads->predictor);
  // Straight-through: the hard mask's gradient is taken as the soft gate's.
  const Matrix d_soft = (d_masked.cwiseProduct(inputs).array() + l1_weight_ / static_cast<double>(d * n)).matrix();
  const Matrix d_a = (d_soft.array() * soft.array() * (1.0 - soft.array()) / tau_).matrix();
  discriminator_.Backward(disc, d_a, &grads->discriminator);
  return loss;
}

double GatingModel::ActiveFraction(const Matrix& rows) const {
  if (rows.rows() == 0) return 0.0;
  const Matrix logits = discriminator_.Forward(rows.transpose()).logits();
  return ((logits.array() / tau_).unaryExpr(&Sigmoid) >= threshold_).cast<double>().mean();
}

TrainHistory TrainGating(GatingModel& model, const FeatureMatrix& data, const TrainConfig& cfg) {
  cfg.Validate();
  if (data.rows() == 0) throw Error(ErrorClass::kInput, "training data is empty");
  data.Validate();
  if (static_cast<int>(data.cols()) != model.input_dim()) {
    throw Error(ErrorClass::kShape, "data width does not match the gating model");
  }
  for (int label : data.labels) {
    if (label >= model.num_classes()) throw Error(ErrorClass::kInput, "label outside the model's classes");
  }
  TrainHistory history;
  history.initial_loss = GatingMeanLoss(model, data);
  AdamState disc_adam(model.discriminator(), cfg);
  AdamState pred_adam(model.predictor(), cfg);
  RngStream order_rng(cfg.seed);
  RngStream noise_rng = order_rng.Fork(1);
  const auto batch = static_cast<size_t>(cfg.batch_size);
  const Eigen::Index d = data.data.cols();
  std::vector<size_t> order(data.rows());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    order_rng.Shuffle(order.begin(), order.end());
    for (size_t start = 0; start < order.size(); start += batch) {
      const size_t end = std::min(order.size(), start + batch);
      const auto n = static_cast<Eigen::Index>(end - start);
      Matrix inputs(d, n);
      std::vector<int> targets(static_cast<size_t>(n));
      for (Eigen::Index b = 0; b < n; ++b) {
        const size_t row = order[start + static_cast<size_t>(b)];
        inputs.col(b) = data.data.row(static_cast<Eigen::Index>(row)).transpose();
        targets[static_cast<size_t>(b)] = data.labels[row];
      }
      GatingGradients grads{model.discriminator().ZeroGradients(), model.predictor().ZeroGradients()};
      model.BatchLossGradients(inputs, targets, GumbelNoise(d, n, noise_rng), &grads);
      disc_adam.Step(model.discriminator().layers(), grads.discriminator);
      pred_adam.Step(model.predictor().layers(), grads.predictor);
    }
    const double loss = GatingMeanLoss(model, data);
    if (!std::isfinite(loss) || !model.discriminator().AllFinite() || !model.predictor().AllFinite()) {
      throw DivergenceError(epoch, fmt::format("gating loss became non-finite at epoch {}", epoch));
    }
    history.losses.push_back(loss);
  }
  return history;
}

Explanation GatingExplain(const GatingModel& model, const Vector& x) {
  return MakeExplanation(model.Mask(x), Method::kGating, 0);
}

void SaveGatingModel(const GatingModel& model, const std::string& path) {
  const std::string disc_path = path + ".discriminator.json";
  const std::string pred_path = path + ".predictor.json";
  auto base_name = [](const std::string& p) {
    const auto slash = p.find_last_of('/');
    return slash == std::string::npos ? p : p.substr(slash + 1);
  };
  nlohmann::json header{{"format", kGatingFormatName},
                        {"format_version", kGatingFormatVersion},
                        {"tau", model.tau()},
                        {"threshold", model.threshold()},
                        {"l1_weight", model.l1_weight()},
                        {"discriminator", base_name(disc_path)},
                        {"predictor", base_name(pred_path)}};
  SaveModel(model.discriminator(), disc_path);
  SaveModel(model.predictor(), pred_path);
  WriteTextFile(path, header.dump(2) + "\n");
}

GatingModel LoadGatingModel(const std::string& path) {
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(ReadTextFile(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorClass::kLoad, fmt::format("gating header is not valid JSON: {}", e.what()));
  } catch (const Error& e) {
    throw Error(ErrorClass::kLoad, e.what());
  }
  try {
    if (!header.is_object() || header.value("format", "") != kGatingFormatName) {
      throw Error(ErrorClass::kLoad, "not an xailab gating model file");
    }
    const int version = header.at("format_version").get<int>();
    if (version != kGatingFormatVersion) {
      throw Error(ErrorClass::kVersion, fmt::format("gating format version {} is not supported (expected {})",
                                                    version, kGatingFormatVersion));
    }
    const auto slash = path.find_last_of('/');
    const std::string dir = slash == std::string::npos ? "" : path.substr(0, slash + 1);
    return GatingModel(LoadModel(dir + header.at("discriminator").get<std::string>()),
                       LoadModel(dir + header.at("predictor").get<std::string>()),
                       header.at("tau").get<double>(), header.at("threshold").get<double>(),
                       header.at("l1_weight").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorClass::kLoad, fmt::format("malformed gating header: {}", e.what()));
  }
}

}  // namespace xailab
