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

#include "xailab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "csv_util.hpp"
#include "xailab/error.hpp"

namespace xailab {

namespace {

void CheckSameLength(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorClass::kShape, fmt::format("vectors have lengths {} and {}", a.size(), b.size()));
  }
}

// Position of each feature in the descending order (index tie-break).
std::vector<size_t> RankPositions(const Vector& values) {
  const auto order = TopK(values, static_cast<size_t>(values.size()));
  std::vector<size_t> pos(order.size());
  for (size_t p = 0; p < order.size(); ++p) pos[order[p]] = p;
  return pos;
}

Vector ToDistribution(const Vector& v) {
  if ((v.array() < 0).any()) throw Error(ErrorClass::kMetric, "distribution entries must be >= 0");
  const double total = v.sum();
  if (total <= 0) return Vector::Constant(v.size(), 1.0 / static_cast<double>(v.size()));
  return v / total;
}

}  // namespace

Vector FractionalRanks(const Vector& values) {
  const auto n = static_cast<size_t>(values.size());
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return values(static_cast<Eigen::Index>(a)) < values(static_cast<Eigen::Index>(b));
  });
  Vector ranks(values.size());
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values(static_cast<Eigen::Index>(order[j + 1])) == values(static_cast<Eigen::Index>(order[i]))) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (size_t q = i; q <= j; ++q) ranks(static_cast<Eigen::Index>(order[q])) = rank;
    i = j + 1;
  }
  return ranks;
}

std::vector<size_t> TopK(const Vector& values, size_t k) {
  std::vector<size_t> idx(static_cast<size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), size_t{0});
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), [&](size_t a, size_t b) {
    const double va = values(static_cast<Eigen::Index>(a));
    const double vb = values(static_cast<Eigen::Index>(b));
    return va != vb ? va > vb : a < b;
  });
  idx.resize(k);
  return idx;
}

double SpearmanRho(const Vector& a, const Vector& b) {
  CheckSameLength(a, b);
  if (a.size() < 2) throw Error(ErrorClass::kMetric, "Spearman needs at least two entries");
  const Vector ra = FractionalRanks(a);
  const Vector rb = FractionalRanks(b);
  const Vector ca = ra.array() - ra.mean();
  const Vector cb = rb.array() - rb.mean();
  const double saa = ca.squaredNorm();
  const double sbb = cb.squaredNorm();
  if (saa == 0.0 || sbb == 0.0) throw Error(ErrorClass::kMetric, "Spearman is undefined for a constant vector");
  return std::clamp(ca.dot(cb) / std::sqrt(saa * sbb), -1.0, 1.0);
}

double JensenShannonDistance(const Vector& a, const Vector& b) {
  CheckSameLength(a, b);
  if (a.size() == 0) throw Error(ErrorClass::kMetric, "empty distributions");
  const Vector p = ToDistribution(a);
  const Vector q = ToDistribution(b);
  const Vector m = 0.5 * (p + q);
  auto kl = [&](const Vector& u) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) {
      if (u(i) > 0) s += u(i) * std::log2(u(i) / m(i));
    }
    return s;
  };
  const double js = 0.5 * kl(p) + 0.5 * kl(q);
  return std::sqrt(std::clamp(js, 0.0, 1.0));
}

double JaccardTopK(const Vector& a, const Vector& b, size_t k) {
  CheckSameLength(a, b);
  if (k == 0) throw Error(ErrorClass::kConfiguration, "Jaccard top-k needs k >= 1");
  if (k > static_cast<size_t>(a.size())) {
    throw Error(ErrorClass::kConfiguration, fmt::format("k = {} exceeds {} features", k, a.size()));
  }
  auto ta = TopK(a, k);
  auto tb = TopK(b, k);
  std::sort(ta.begin(), ta.end());
  std::sort(tb.begin(), tb.end());
  std::vector<size_t> common;
  std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(), std::back_inserter(common));
  const size_t uni = ta.size() + tb.size() - common.size();
  return static_cast<double>(common.size()) / static_cast<double>(uni);
}

FaithfulnessScores Faithfulness(const Explanation& explanation, const GroundTruthMask& truth, size_t k) {
  truth.Validate();
  const auto d = static_cast<size_t>(explanation.scores.size());
  if (truth.size() != d) throw Error(ErrorClass::kShape, "ground truth and explanation widths differ");
  if (k == 0 || k > d) throw Error(ErrorClass::kConfiguration, fmt::format("k = {} must be in [1, {}]", k, d));

  Vector truth_rank(static_cast<Eigen::Index>(d));
  for (size_t i = 0; i < d; ++i) {
    truth_rank(static_cast<Eigen::Index>(i)) =
        truth.weights ? std::abs((*truth.weights)(static_cast<Eigen::Index>(i))) : (truth.relevant[i] ? 1.0 : 0.0);
  }
  const auto top_e = TopK(explanation.scores, k);
  const auto top_t = TopK(truth_rank, k);

  FaithfulnessScores out;
  size_t shared = 0;
  for (size_t f : top_e) shared += std::count(top_t.begin(), top_t.end(), f) > 0 ? 1 : 0;
  out.feature_agreement = static_cast<double>(shared) / static_cast<double>(k);

  if (truth.weights) {
    size_t same = 0;
    for (size_t p = 0; p < k; ++p) same += top_e[p] == top_t[p] ? 1 : 0;
    out.rank_agreement = static_cast<double>(same) / static_cast<double>(k);
    if (k >= 2) {
      const auto pos_e = RankPositions(explanation.scores);
      const auto pos_t = RankPositions(truth_rank);
      size_t agree = 0;
      size_t pairs = 0;
      for (size_t i = 0; i < k; ++i) {
        for (size_t j = i + 1; j < k; ++j) {
          const size_t a = top_t[i];
          const size_t b = top_t[j];
          agree += (pos_e[a] < pos_e[b]) == (pos_t[a] < pos_t[b]) ? 1 : 0;
          ++pairs;
        }
      }
      out.pairwise_rank_agreement = static_cast<double>(agree) / static_cast<double>(pairs);
    } else {
      out.pairwise_rank_agreement = 1.0;
    }
  }

  size_t match = 0;
  for (size_t i = 0; i < d; ++i) {
    const bool selected = explanation.scores(static_cast<Eigen::Index>(i)) > 1e-6;
    match += selected == truth.relevant[i] ? 1 : 0;
  }
  out.ground_truth_alignment = static_cast<double>(match) / static_cast<double>(d);
  return out;
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorClass::kMetric, "quantile of an empty set");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

VarianceProfile VarianceProfile::FromStds(Vector stds, double threshold) {
  VarianceProfile p;
  p.threshold = threshold;
  std::vector<double> v(stds.data(), stds.data() + stds.size());
  if (!v.empty()) {
    p.median = Quantile(v, 0.5);
    p.q1 = Quantile(v, 0.25);
    p.q3 = Quantile(v, 0.75);
  }
  p.count_above = static_cast<int>((stds.array() >= threshold).count());
  p.stds = std::move(stds);
  return p;
}

VarianceProfile ImportanceVariance(std::span<const Explanation> runs, double threshold) {
  if (runs.size() < 2) throw Error(ErrorClass::kConfiguration, "variance needs at least two runs");
  const Eigen::Index d = runs.front().scores.size();
  Vector mean = Vector::Zero(d);
  for (const auto& e : runs) {
    if (e.scores.size() != d) throw Error(ErrorClass::kShape, "explanations have different widths");
    mean += e.scores;
  }
  mean /= static_cast<double>(runs.size());
  Vector ss = Vector::Zero(d);
  for (const auto& e : runs) ss += (e.scores - mean).cwiseAbs2();
  return VarianceProfile::FromStds((ss / static_cast<double>(runs.size() - 1)).cwiseSqrt(), threshold);
}

double ImportantFeatureFraction(std::span<const Explanation> explanations, double threshold) {
  if (explanations.empty()) throw Error(ErrorClass::kConfiguration, "no explanations given");
  const Eigen::Index d = explanations.front().scores.size();
  if (d == 0) return 0.0;
  Vector mean = Vector::Zero(d);
  for (const auto& e : explanations) {
    if (e.scores.size() != d) throw Error(ErrorClass::kShape, "explanations have different widths");
    mean += e.scores;
  }
  mean /= static_cast<double>(explanations.size());
  return static_cast<double>((mean.array() >= threshold).count()) / static_cast<double>(d);
}

PairwiseMatrix ComputePairwise(const std::string& metric_name, const std::vector<std::string>& methods,
                               const std::vector<std::vector<std::optional<Vector>>>& per_method,
                               const PairMetric& metric) {
  if (per_method.size() != methods.size()) throw Error(ErrorClass::kShape, "one explanation list per method");
  const auto m = static_cast<Eigen::Index>(methods.size());
  PairwiseMatrix out{metric_name, methods, Matrix::Zero(m, m), Eigen::MatrixXi::Zero(m, m)};
  const size_t n = per_method.empty() ? 0 : per_method.front().size();
  for (const auto& list : per_method) {
    if (list.size() != n) throw Error(ErrorClass::kShape, "methods explain different instance counts");
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = a; b < m; ++b) {
      double sum = 0.0;
      int count = 0;
      for (size_t i = 0; i < n; ++i) {
        const auto& ea = per_method[static_cast<size_t>(a)][i];
        const auto& eb = per_method[static_cast<size_t>(b)][i];
        if (!ea || !eb) continue;
        try {
          sum += metric(*ea, *eb);
          ++count;
        } catch (const Error& e) {
          if (e.error_class() != ErrorClass::kMetric) throw;
        }
      }
      const double value = count > 0 ? sum / count : NAN;
      out.values(a, b) = out.values(b, a) = value;
      out.counts(a, b) = out.counts(b, a) = count;
    }
  }
  return out;
}

std::string PairwiseCsv(const PairwiseMatrix& matrix) {
  std::string out = "method";
  for (const auto& m : matrix.methods) out += "," + m;
  out += "\n";
  for (size_t a = 0; a < matrix.methods.size(); ++a) {
    out += matrix.methods[a];
    for (size_t b = 0; b < matrix.methods.size(); ++b) {
      out += "," + FormatDouble(matrix.values(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)));
    }
    out += "\n";
  }
  return out;
}

std::string VarianceCsv(const std::vector<std::pair<std::string, VarianceProfile>>& profiles,
                        const std::vector<std::string>& feature_names) {
  std::string out = "name,median,q1,q3,threshold,count_above";
  for (const auto& f : feature_names) out += "," + f;
  out += "\n";
  for (const auto& [name, p] : profiles) {
    if (static_cast<size_t>(p.stds.size()) != feature_names.size()) {
      throw Error(ErrorClass::kShape, "variance profile width does not match the feature names");
    }
    out += fmt::format("{},{},{},{},{},{}", name, FormatDouble(p.median), FormatDouble(p.q1), FormatDouble(p.q3),
                       FormatDouble(p.threshold), p.count_above);
    for (Eigen::Index i = 0; i < p.stds.size(); ++i) out += "," + FormatDouble(p.stds(i));
    out += "\n";
  }
  return out;
}

}  // namespace xailab
