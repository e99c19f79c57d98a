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
#include <filesystem>
#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "csv_util.hpp"
#include "xailab/error.hpp"
#include "xailab/harness.hpp"

namespace xailab {

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kConfigName = "config.json";
constexpr const char* kRunName = "run.json";

}  // namespace

void EmitReport(const ExperimentReport& report, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorClass::kIo, fmt::format("cannot create report directory '{}': {}", dir, ec.message()));

  std::vector<Artifact> files = report.artifacts;
  files.push_back({kConfigName, report.config_json});
  std::sort(files.begin(), files.end(), [](const Artifact& a, const Artifact& b) { return a.name < b.name; });
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& f : files) {
    if (f.name.empty() || f.name.front() == '/' || f.name.find("..") != std::string::npos) {
      throw Error(ErrorClass::kIo, fmt::format("artifact name '{}' escapes the report directory", f.name));
    }
    if (f.name == kManifestName || f.name == kRunName) {
      throw Error(ErrorClass::kIo, fmt::format("artifact name '{}' is reserved", f.name));
    }
    WriteTextFile(dir + "/" + f.name, f.content);
    entries.push_back({{"path", f.name}, {"bytes", f.content.size()}, {"sha256", Sha256Hex(f.content)}});
  }
  const nlohmann::json manifest{{"format", "xailab-report"},
                                {"kind", report.kind},
                                {"config_hash", report.config_hash},
                                {"seeds", report.seeds},
                                {"artifacts", entries}};
  WriteTextFile(dir + "/" + kManifestName, manifest.dump(2) + "\n");
  const nlohmann::json run{{"created_at", report.created_at},
                           {"kind", report.kind},
                           {"config_hash", report.config_hash}};
  WriteTextFile(dir + "/" + kRunName, run.dump(2) + "\n");
}

std::vector<std::string> ValidateReport(const std::string& dir) {
  std::vector<std::string> problems;
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(ReadTextFile(dir + "/" + kManifestName));
  } catch (const std::exception& e) {
    problems.push_back(fmt::format("cannot read manifest: {}", e.what()));
    return problems;
  }
  try {
    bool saw_config = false;
    for (const auto& entry : manifest.at("artifacts")) {
      const auto path = entry.at("path").get<std::string>();
      std::string content;
      try {
        content = ReadTextFile(dir + "/" + path);
      } catch (const Error&) {
        problems.push_back(fmt::format("missing artifact: {}", path));
        continue;
      }
      if (content.size() != entry.at("bytes").get<size_t>()) {
        problems.push_back(fmt::format("size mismatch: {}", path));
      }
      if (Sha256Hex(content) != entry.at("sha256").get<std::string>()) {
        problems.push_back(fmt::format("hash mismatch: {}", path));
      }
      if (path == kConfigName) {
        saw_config = true;
        if (Sha256Hex(content) != manifest.at("config_hash").get<std::string>()) {
          problems.push_back("config hash does not match config.json");
        }
      }
    }
    if (!saw_config) problems.push_back("manifest does not list config.json");
  } catch (const nlohmann::json::exception& e) {
    problems.push_back(fmt::format("malformed manifest: {}", e.what()));
  }
  return problems;
}

}  // namespace xailab
