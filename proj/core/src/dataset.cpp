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

#include "xailab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "csv_util.hpp"
#include "xailab/error.hpp"

namespace xailab {

int FeatureMatrix::NumClasses() const {
  if (labels.empty()) return 0;
  return *std::max_element(labels.begin(), labels.end()) + 1;
}

void FeatureMatrix::Validate() const {
  if (labels.size() != rows()) {
    throw Error(ErrorClass::kInput,
                fmt::format("{} labels for {} rows", labels.size(), rows()));
  }
  if (feature_names.size() != cols()) {
    throw Error(ErrorClass::kInput, fmt::format("{} feature names for {} columns",
                                                feature_names.size(), cols()));
  }
  if (!data.allFinite()) throw Error(ErrorClass::kInput, "feature matrix has non-finite values");
  for (int label : labels) {
    if (label < 0) throw Error(ErrorClass::kInput, fmt::format("negative label {}", label));
  }
}

FeatureMatrix FeatureMatrix::Subset(std::span<const size_t> indices) const {
  FeatureMatrix out;
  out.feature_names = feature_names;
  out.data.resize(static_cast<Eigen::Index>(indices.size()), data.cols());
  out.labels.reserve(indices.size());
  for (size_t r = 0; r < indices.size(); ++r) {
    out.data.row(static_cast<Eigen::Index>(r)) = data.row(static_cast<Eigen::Index>(indices[r]));
    out.labels.push_back(labels[indices[r]]);
  }
  return out;
}

std::vector<size_t> FeatureMatrix::IndicesOfClass(int label) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == label) out.push_back(i);
  }
  return out;
}

FeatureMatrix Concat(const FeatureMatrix& a, const FeatureMatrix& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorClass::kShape, fmt::format("cannot concatenate {} and {} columns",
                                                a.cols(), b.cols()));
  }
  FeatureMatrix out;
  out.feature_names = a.feature_names;
  out.data.resize(a.data.rows() + b.data.rows(), a.data.cols());
  out.data << a.data, b.data;
  out.labels = a.labels;
  out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
  return out;
}

std::vector<std::string> DefaultFeatureNames(size_t n_features) {
  std::vector<std::string> names;
  names.reserve(n_features);
  for (size_t j = 0; j < n_features; ++j) names.push_back(fmt::format("f{:02d}", j));
  return names;
}

FeatureStats FeatureStats::FromData(const FeatureMatrix& data) {
  FeatureStats stats;
  const auto n = static_cast<double>(data.rows());
  stats.mean = data.data.colwise().mean().transpose();
  stats.std = Vector::Zero(data.data.cols());
  if (data.rows() == 0) return stats;
  for (Eigen::Index j = 0; j < data.data.cols(); ++j) {
    const double var = (data.data.col(j).array() - stats.mean(j)).square().sum() / n;
    stats.std(j) = std::sqrt(var);
  }
  return stats;
}

void WriteCsv(const FeatureMatrix& data, const std::string& path) {
  std::string out;
  for (const auto& name : data.feature_names) {
    out += name;
    out += ',';
  }
  out += "label\n";
  for (size_t i = 0; i < data.rows(); ++i) {
    for (size_t j = 0; j < data.cols(); ++j) {
      out += FormatDouble(data.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      out += ',';
    }
    out += fmt::format("{}\n", data.labels[i]);
  }
  WriteTextFile(path, out);
}

FeatureMatrix ReadCsv(const std::string& path) {
  const auto table = ReadCsvTable(path);
  if (table.header.empty() || table.header.back() != "label") {
    throw Error(ErrorClass::kInput, fmt::format("{}: last column must be 'label'", path));
  }
  FeatureMatrix out;
  const size_t d = table.header.size() - 1;
  out.feature_names.assign(table.header.begin(), table.header.end() - 1);
  out.data.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(d));
  out.labels.reserve(table.rows.size());
  for (size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    if (row.size() != d + 1) {
      throw Error(ErrorClass::kInput,
                  fmt::format("{}: row {} has {} fields, expected {}", path, i + 2, row.size(), d + 1));
    }
    for (size_t j = 0; j < d; ++j) {
      out.data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = ParseDouble(row[j]);
    }
    out.labels.push_back(static_cast<int>(ParseDouble(row[d])));
  }
  out.Validate();
  return out;
}

}  // namespace xailab
