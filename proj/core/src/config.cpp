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
#include <set>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "csv_util.hpp"
#include "xailab/error.hpp"
#include "xailab/harness.hpp"

namespace xailab {

namespace {

using nlohmann::json;

DatasetKind ParseDatasetKind(std::string_view name) {
  if (name == "synth_gauss") return DatasetKind::kSynthGauss;
  if (name == "synth_logistic") return DatasetKind::kSynthLogistic;
  throw Error(ErrorClass::kConfiguration, fmt::format("unknown dataset kind '{}'", name));
}

json ToJson(int v) { return v; }
json ToJson(double v) { return v; }
json ToJson(bool v) { return v; }
json ToJson(uint64_t v) { return v; }
json ToJson(const std::string& v) { return v; }
json ToJson(Method v) { return std::string(ToString(v)); }
json ToJson(DatasetKind v) { return std::string(ToString(v)); }
json ToJson(AttackMethod v) { return std::string(ToString(v)); }
json ToJson(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
template <typename T>
json ToJson(const std::optional<T>& v) {
  return v ? ToJson(*v) : json(nullptr);
}
template <typename T>
json ToJson(const std::vector<T>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(ToJson(e));
  return out;
}
template <typename T, size_t N>
json ToJson(const std::array<T, N>& v) {
  json out = json::array();
  for (const auto& e : v) out.push_back(ToJson(e));
  return out;
}

void FromJson(const json& j, int& v) {
  if (!j.is_number_integer()) throw Error(ErrorClass::kConfiguration, "expected an integer");
  v = j.get<int>();
}
void FromJson(const json& j, uint64_t& v) {
  if (!j.is_number_unsigned()) throw Error(ErrorClass::kConfiguration, "expected a non-negative integer");
  v = j.get<uint64_t>();
}
void FromJson(const json& j, double& v) {
  if (!j.is_number()) throw Error(ErrorClass::kConfiguration, "expected a number");
  v = j.get<double>();
}
void FromJson(const json& j, bool& v) {
  if (!j.is_boolean()) throw Error(ErrorClass::kConfiguration, "expected a boolean");
  v = j.get<bool>();
}
void FromJson(const json& j, std::string& v) {
  if (!j.is_string()) throw Error(ErrorClass::kConfiguration, "expected a string");
  v = j.get<std::string>();
}
void FromJson(const json& j, Method& v) {
  std::string s;
  FromJson(j, s);
  v = ParseMethod(s);
}
void FromJson(const json& j, DatasetKind& v) {
  std::string s;
  FromJson(j, s);
  v = ParseDatasetKind(s);
}
void FromJson(const json& j, AttackMethod& v) {
  std::string s;
  FromJson(j, s);
  v = ParseAttackMethod(s);
}
void FromJson(const json& j, Vector& v) {
  if (!j.is_array()) throw Error(ErrorClass::kConfiguration, "expected an array");
  v.resize(static_cast<Eigen::Index>(j.size()));
  for (size_t i = 0; i < j.size(); ++i) FromJson(j[i], v(static_cast<Eigen::Index>(i)));
}
template <typename T>
void FromJson(const json& j, std::optional<T>& v) {
  if (j.is_null()) {
    v.reset();
    return;
  }
  T inner{};
  FromJson(j, inner);
  v = std::move(inner);
}
template <typename T>
void FromJson(const json& j, std::vector<T>& v) {
  if (!j.is_array()) throw Error(ErrorClass::kConfiguration, "expected an array");
  v.clear();
  for (const auto& e : j) {
    T inner{};
    FromJson(e, inner);
    v.push_back(std::move(inner));
  }
}
template <typename T, size_t N>
void FromJson(const json& j, std::array<T, N>& v) {
  if (!j.is_array() || j.size() != N) {
    throw Error(ErrorClass::kConfiguration, fmt::format("expected an array of {} values", N));
  }
  for (size_t i = 0; i < N; ++i) FromJson(j[i], v[i]);
}

class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorClass::kConfiguration, fmt::format("'{}' must be an object", path_));
  }

  template <typename T>
  void operator()(const char* name, T& field) {
    const auto it = j_.find(name);
    if (it == j_.end()) return;
    seen_.insert(name);
    try {
      FromJson(*it, field);
    } catch (const Error& e) {
      throw Error(ErrorClass::kConfiguration, fmt::format("{}{}: {}", path_, name, e.what()));
    }
  }

  template <typename Fn>
  void Object(const char* name, Fn&& fn) {
    const auto it = j_.find(name);
    if (it == j_.end()) return;
    seen_.insert(name);
    Reader sub(*it, path_ + name + ".");
    fn(sub);
    sub.Finish();
  }

  void Finish() const {
    for (const auto& item : j_.items()) {
      if (seen_.count(item.key()) == 0) {
        throw Error(ErrorClass::kConfiguration, fmt::format("unknown config key '{}{}'", path_, item.key()));
      }
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

class Writer {
 public:
  template <typename T>
  void operator()(const char* name, const T& field) {
    out[name] = ToJson(field);
  }

  template <typename Fn>
  void Object(const char* name, Fn&& fn) {
    Writer sub;
    fn(sub);
    out[name] = std::move(sub.out);
  }

  json out = json::object();
};

template <typename V>
void VisitConfig(V& v, ExperimentConfig& c) {
  v.Object("dataset", [&](auto& d) {
    d("kind", c.dataset.kind);
    d.Object("synth_gauss", [&](auto& s) {
      auto& g = c.dataset.synth_gauss;
      s("n_clusters", g.n_clusters);
      s("points_per_cluster", g.points_per_cluster);
      s("n_features", g.n_features);
      s("relevant_per_cluster", g.relevant_per_cluster);
      s("separation", g.separation);
      s("noise", g.noise);
      s("seed", g.seed);
    });
    d.Object("synth_logistic", [&](auto& s) {
      auto& g = c.dataset.synth_logistic;
      s("n_features", g.n_features);
      s("support", g.support);
      s("n_instances", g.n_instances);
      s("noise", g.noise);
      s("weight_scale", g.weight_scale);
      s("weights", g.weights);
      s("seed", g.seed);
    });
  });
  v("split", c.split);
  v("hidden", c.hidden);
  v.Object("training", [&](auto& t) {
    t("epochs", c.training.epochs);
    t("batch_size", c.training.batch_size);
    t("learning_rate", c.training.learning_rate);
    t("beta1", c.training.beta1);
    t("beta2", c.training.beta2);
    t("epsilon", c.training.epsilon);
    t("patience", c.training.patience);
  });
  v("methods", c.methods);
  v.Object("lime", [&](auto& s) {
    s("n_samples", c.lime.n_samples);
    s("kernel_width", c.lime.kernel_width);
    s("max_features", c.lime.max_features);
    s("noise_scale", c.lime.noise_scale);
    s("ridge", c.lime.ridge);
  });
  v.Object("kernelshap", [&](auto& s) {
    s("n_samples", c.kernelshap.n_samples);
    s("enumerate_all", c.kernelshap.enumerate_all);
  });
  v.Object("permshap", [&](auto& s) {
    s("n_permutations", c.permshap.n_permutations);
    s("exhaustive", c.permshap.exhaustive);
  });
  v.Object("cem", [&](auto& s) {
    s("kappa", c.cem.kappa);
    s("beta", c.cem.beta);
    s("c_init", c.cem.c_init);
    s("c_steps", c.cem.c_steps);
    s("max_iterations", c.cem.max_iterations);
    s("gradient_clip", c.cem.gradient_clip);
    s("learning_rate", c.cem.learning_rate);
    s("no_info_val", c.cem.no_info_val);
    s("lower", c.cem.lower);
    s("upper", c.cem.upper);
  });
  v.Object("dice", [&](auto& s) {
    s("k", c.dice.k);
    s("proximity_weight", c.dice.proximity_weight);
    s("diversity_weight", c.dice.diversity_weight);
    s("max_steps", c.dice.max_steps);
    s("min_steps", c.dice.min_steps);
    s("learning_rate", c.dice.learning_rate);
    s("convergence_tolerance", c.dice.convergence_tolerance);
    s("init_radius", c.dice.init_radius);
    s("change_tolerance", c.dice.change_tolerance);
    s("posthoc_sparsity", c.dice.posthoc_sparsity);
    s("lower", c.dice.lower);
    s("upper", c.dice.upper);
  });
  v.Object("mclime", [&](auto& s) {
    s("step_fraction", c.mclime.step_fraction);
    s("threshold", c.mclime.threshold);
    s("max_group_size", c.mclime.max_group_size);
    s("desired_class", c.mclime.desired_class);
    s("lower", c.mclime.lower);
    s("upper", c.mclime.upper);
  });
  v.Object("gating", [&](auto& s) {
    s("discriminator_hidden", c.gating.discriminator_hidden);
    s("predictor_hidden", c.gating.predictor_hidden);
    s("tau", c.gating.tau);
    s("threshold", c.gating.threshold);
    s("l1_weight", c.gating.l1_weight);
  });
  v("regimes", c.regimes);
  auto attack = [](AttackConfig& a) {
    return [&a](auto& s) {
      s("method", a.method);
      s("epsilon", a.epsilon);
      s("alpha", a.alpha);
      s("iterations", a.iterations);
      s("lower", a.lower);
      s("upper", a.upper);
    };
  };
  v.Object("fgsm", attack(c.fgsm));
  v.Object("pgd", attack(c.pgd));
  v("seeds", c.seeds);
  v("n_representatives_per_class", c.n_representatives_per_class);
  v("background", c.background);
  v("background_size", c.background_size);
  v("normalization", c.normalization);
  v("jaccard_k", c.jaccard_k);
  v("faithfulness_k", c.faithfulness_k);
  v("importance_threshold", c.importance_threshold);
  v("faithfulness_datasets", c.faithfulness_datasets);
  v("output_dir", c.output_dir);
}

int DatasetFeatures(const DatasetConfig& d) {
  return d.kind == DatasetKind::kSynthGauss ? d.synth_gauss.n_features : d.synth_logistic.n_features;
}

}  // namespace

std::string_view ToString(DatasetKind kind) {
  return kind == DatasetKind::kSynthGauss ? "synth_gauss" : "synth_logistic";
}

void ExperimentConfig::Validate() const {
  dataset.synth_gauss.Validate();
  dataset.synth_logistic.Validate();
  double total = 0.0;
  for (double f : split) {
    if (!(f >= 0)) throw Error(ErrorClass::kConfiguration, "split fractions must be >= 0");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw Error(ErrorClass::kConfiguration, "split fractions must sum to 1");
  for (int h : hidden) {
    if (h < 1) throw Error(ErrorClass::kConfiguration, "hidden widths must be >= 1");
  }
  training.Validate();
  if (methods.empty()) throw Error(ErrorClass::kConfiguration, "at least one method is required");
  if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size()) {
    throw Error(ErrorClass::kConfiguration, "methods must be unique");
  }
  lime.Validate(DatasetFeatures(dataset));
  if (kernelshap.n_samples < 2) throw Error(ErrorClass::kConfiguration, "kernelshap.n_samples must be >= 2");
  if (permshap.n_permutations < 1) throw Error(ErrorClass::kConfiguration, "permshap.n_permutations must be >= 1");
  cem.Validate();
  dice.Validate();
  mclime.Validate();
  gating.Validate();
  fgsm.Validate();
  pgd.Validate();
  if (regimes.empty()) throw Error(ErrorClass::kConfiguration, "at least one regime is required");
  for (const auto& r : regimes) {
    if (r != "baseline" && r != "fgsm" && r != "pgd") {
      throw Error(ErrorClass::kConfiguration, fmt::format("unknown regime '{}'", r));
    }
  }
  if (std::set<std::string>(regimes.begin(), regimes.end()).size() != regimes.size()) {
    throw Error(ErrorClass::kConfiguration, "regimes must be unique");
  }
  if (seeds.empty()) throw Error(ErrorClass::kConfiguration, "at least one seed is required");
  if (n_representatives_per_class < 1) {
    throw Error(ErrorClass::kConfiguration, "n_representatives_per_class must be >= 1");
  }
  if (background != "mean" && background != "sample") {
    throw Error(ErrorClass::kConfiguration, "background must be 'mean' or 'sample'");
  }
  if (background_size < 1) throw Error(ErrorClass::kConfiguration, "background_size must be >= 1");
  if (normalization != "instance" && normalization != "set") {
    throw Error(ErrorClass::kConfiguration, "normalization must be 'instance' or 'set'");
  }
  if (jaccard_k < 1 || faithfulness_k < 1) throw Error(ErrorClass::kConfiguration, "k values must be >= 1");
  if (!(importance_threshold >= 0)) throw Error(ErrorClass::kConfiguration, "importance_threshold must be >= 0");
  if (output_dir.empty()) throw Error(ErrorClass::kConfiguration, "output_dir must be non-empty");
}

ExperimentConfig ParseConfig(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorClass::kConfiguration, fmt::format("config is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw Error(ErrorClass::kConfiguration, "config must be a JSON object");
  const auto version = doc.find("schema_version");
  if (version == doc.end()) throw Error(ErrorClass::kConfiguration, "config is missing schema_version");
  if (!version->is_number_integer() || version->get<int>() != kConfigSchemaVersion) {
    throw Error(ErrorClass::kVersion,
                fmt::format("config schema_version {} is not supported (expected {})", version->dump(),
                            kConfigSchemaVersion));
  }
  ExperimentConfig cfg;
  Reader reader(doc, "");
  int schema = 0;
  reader("schema_version", schema);
  VisitConfig(reader, cfg);
  reader.Finish();
  cfg.Validate();
  return cfg;
}

ExperimentConfig LoadConfig(const std::string& path) {
  return ParseConfig(ReadTextFile(path));
}

std::string ConfigToJson(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  Writer writer;
  writer("schema_version", kConfigSchemaVersion);
  VisitConfig(writer, copy);
  return writer.out.dump(2) + "\n";
}

std::string Sha256Hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorClass::kIo, "SHA-256 computation failed");
  }
  std::string out;
  out.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) out += fmt::format("{:02x}", digest[i]);
  return out;
}

}  // namespace xailab
