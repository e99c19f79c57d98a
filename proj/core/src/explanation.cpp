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

#include "xailab/explanation.hpp"

#include <cmath>

#include <fmt/format.h>

#include "csv_util.hpp"
#include "xailab/error.hpp"

namespace xailab {

namespace {
constexpr std::pair<Method, std::string_view> kMethodNames[] = {
    {Method::kLime, "lime"},          {Method::kKernelShap, "kernelshap"},
    {Method::kPermShap, "permshap"},  {Method::kCem, "cem"},
    {Method::kDice, "dice"},          {Method::kMcLime, "mclime"},
    {Method::kGating, "gating"},      {Method::kExactShapley, "exact"},
    {Method::kRandom, "random"},
};
}  // namespace

std::string_view ToString(Method method) {
  for (const auto& [m, name] : kMethodNames) {
    if (m == method) return name;
  }
  return "unknown";
}

Method ParseMethod(std::string_view name) {
  for (const auto& [m, n] : kMethodNames) {
    if (n == name) return m;
  }
  throw Error(ErrorClass::kConfiguration, fmt::format("unknown method '{}'", name));
}

Vector NormalizeImportance(const Vector& raw) {
  if (!raw.allFinite()) throw Error(ErrorClass::kInput, "importance values must be finite");
  const Vector magnitude = raw.cwiseAbs();
  const double peak = raw.size() > 0 ? magnitude.maxCoeff() : 0.0;
  if (peak == 0.0) return Vector::Zero(raw.size());
  return magnitude / peak;
}

Explanation MakeExplanation(Vector raw, Method method, uint64_t seed) {
  Explanation e;
  e.scores = NormalizeImportance(raw);
  e.signed_raw = std::move(raw);
  e.method = method;
  e.seed = seed;
  return e;
}

void NormalizeAcrossSet(std::span<Explanation> explanations) {
  double peak = 0.0;
  for (const auto& e : explanations) {
    if (e.signed_raw.size() > 0) peak = std::max(peak, e.signed_raw.cwiseAbs().maxCoeff());
  }
  for (auto& e : explanations) {
    e.scores = peak > 0 ? Vector(e.signed_raw.cwiseAbs() / peak) : Vector::Zero(e.signed_raw.size());
  }
}

std::string ExplanationsCsv(std::span<const Explanation> explanations,
                            const std::vector<std::string>& feature_names, bool raw) {
  std::string out = "instance_id,method,seed";
  for (const auto& name : feature_names) {
    out += ',';
    out += name;
  }
  out += '\n';
  for (const auto& e : explanations) {
    const Vector& values = raw ? e.signed_raw : e.scores;
    if (static_cast<size_t>(values.size()) != feature_names.size()) {
      throw Error(ErrorClass::kShape, "explanation width does not match feature names");
    }
    out += fmt::format("{},{},{}", e.instance_id, ToString(e.method), e.seed);
    for (Eigen::Index j = 0; j < values.size(); ++j) {
      out += ',';
      out += FormatDouble(values(j));
    }
    out += '\n';
  }
  return out;
}

void WriteExplanationsCsv(std::span<const Explanation> explanations,
                          const std::vector<std::string>& feature_names, const std::string& path,
                          bool raw) {
  WriteTextFile(path, ExplanationsCsv(explanations, feature_names, raw));
}

std::vector<Explanation> ReadExplanationsCsv(const std::string& path,
                                             std::vector<std::string>* feature_names) {
  const CsvTable table = ReadCsvTable(path);
  if (table.header.size() < 4 || table.header[0] != "instance_id" || table.header[1] != "method" ||
      table.header[2] != "seed") {
    throw Error(ErrorClass::kInput, fmt::format("{}: not an explanation CSV", path));
  }
  const size_t d = table.header.size() - 3;
  if (feature_names != nullptr) feature_names->assign(table.header.begin() + 3, table.header.end());
  std::vector<Explanation> out;
  for (const auto& row : table.rows) {
    if (row.size() != d + 3) throw Error(ErrorClass::kInput, fmt::format("{}: ragged row", path));
    Explanation e;
    e.instance_id = static_cast<int64_t>(std::stoll(row[0]));
    e.method = ParseMethod(row[1]);
    e.seed = std::stoull(row[2]);
    e.scores.resize(static_cast<Eigen::Index>(d));
    for (size_t j = 0; j < d; ++j) e.scores(static_cast<Eigen::Index>(j)) = ParseDouble(row[j + 3]);
    e.signed_raw = e.scores;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace xailab
