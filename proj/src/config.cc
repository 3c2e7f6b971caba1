// Copyright 2026 The cfrl Authors.
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

#include "cfrl/config.h"

#include <fstream>
#include <set>

#include "cfrl/benchmark.h"

namespace cfrl {

Method ParseMethod(const std::string &name) {
  if (name == "erda") return Method::kErda;
  if (name == "erda_no_da") return Method::kErdaNoDa;
  if (name == "seqrun") return Method::kSeqRun;
  if (name == "joint") return Method::kJoint;
  if (name == "replay") return Method::kReplay;
  throw Error("unknown method '" + name + "'");
}

std::string MethodName(Method method) {
  switch (method) {
    case Method::kErda:
      return "erda";
    case Method::kErdaNoDa:
      return "erda_no_da";
    case Method::kSeqRun:
      return "seqrun";
    case Method::kJoint:
      return "joint";
    case Method::kReplay:
      return "replay";
  }
  return "unknown";
}

bool UsesAugmentation(Method method) { return method == Method::kErda; }

bool UsesMemory(Method method) { return method != Method::kSeqRun; }

void RunConfig::Validate() const {
  auto positive = [](int v, const char *name) {
    if (v < 1) throw ValidationError(std::string(name) + " must be >= 1");
  };
  auto nonnegative = [](int v, const char *name) {
    if (v < 0) throw ValidationError(std::string(name) + " must be >= 0");
  };
  if (seeds.empty()) throw ValidationError("at least one seed is required");
  if (std::set<uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw ValidationError("seeds must be distinct");
  }
  nonnegative(iter1, "iter1");
  nonnegative(iter2, "iter2");
  nonnegative(epochs_per_iter, "epochs_per_iter");
  positive(batch_size, "batch_size");
  nonnegative(n_neg, "n_neg");
  positive(top_k, "top_k");
  positive(n_tasks, "n_tasks");
  positive(n_way, "n_way");
  positive(k_shot, "k_shot");
  positive(base_samples_per_relation, "base_samples_per_relation");
  positive(embedding_dim, "embedding_dim");
  positive(output_dim, "output_dim");
  nonnegative(sim_steps, "sim_steps");
  positive(sim_batch_size, "sim_batch_size");
  if (!(learning_rate > 0.0) || !(sim_learning_rate > 0.0)) {
    throw ValidationError("learning rates must be positive");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("alpha must lie in [0, 1]");
  }
  if (!(valid_fraction >= 0.0 && valid_fraction < 1.0)) {
    throw ValidationError("valid_fraction must lie in [0, 1)");
  }
  weights.Validate();
  margins.Validate();
}

nlohmann::json ConfigToJson(const RunConfig &c) {
  return {
      {"method", MethodName(c.method)},
      {"seeds", c.seeds},
      {"iter1", c.iter1},
      {"iter2", c.iter2},
      {"epochs_per_iter", c.epochs_per_iter},
      {"batch_size", c.batch_size},
      {"learning_rate", c.learning_rate},
      {"update_embeddings", c.update_embeddings},
      {"lambda_ce", c.weights.ce},
      {"lambda_mm", c.weights.mm},
      {"lambda_pm", c.weights.pm},
      {"lambda_con", c.weights.con},
      {"m1", c.margins.m1},
      {"m2", c.margins.m2},
      {"m3", c.margins.m3},
      {"metric", MetricName(c.metric)},
      {"n_neg", c.n_neg},
      {"alpha", c.alpha},
      {"top_k", c.top_k},
      {"n_tasks", c.n_tasks},
      {"n_way", c.n_way},
      {"k_shot", c.k_shot},
      {"base_samples_per_relation", c.base_samples_per_relation},
      {"valid_fraction", c.valid_fraction},
      {"filter_relations", c.filter_relations},
      {"embedding_dim", c.embedding_dim},
      {"output_dim", c.output_dim},
      {"embeddings_path", c.embeddings_path},
      {"sim_steps", c.sim_steps},
      {"sim_batch_size", c.sim_batch_size},
      {"sim_learning_rate", c.sim_learning_rate},
      {"sim_seed", c.sim_seed},
  };
}

RunConfig ConfigFromJson(const nlohmann::json &doc) {
  if (!doc.is_object()) throw ParseError("config must be a JSON object", 0);
  const nlohmann::json known = ConfigToJson(RunConfig{});
  for (const auto &[key, value] : doc.items()) {
    if (!known.contains(key)) {
      throw ParseError("unknown config key '" + key + "'", 0);
    }
  }
  RunConfig c;
  try {
    if (doc.contains("method")) c.method = ParseMethod(doc["method"]);
    if (doc.contains("metric")) c.metric = ParseMetric(doc["metric"]);
    auto read = [&doc](const char *key, auto &field) {
      if (doc.contains(key)) doc.at(key).get_to(field);
    };
    read("seeds", c.seeds);
    read("iter1", c.iter1);
    read("iter2", c.iter2);
    read("epochs_per_iter", c.epochs_per_iter);
    read("batch_size", c.batch_size);
    read("learning_rate", c.learning_rate);
    read("update_embeddings", c.update_embeddings);
    read("lambda_ce", c.weights.ce);
    read("lambda_mm", c.weights.mm);
    read("lambda_pm", c.weights.pm);
    read("lambda_con", c.weights.con);
    read("m1", c.margins.m1);
    read("m2", c.margins.m2);
    read("m3", c.margins.m3);
    read("n_neg", c.n_neg);
    read("alpha", c.alpha);
    read("top_k", c.top_k);
    read("n_tasks", c.n_tasks);
    read("n_way", c.n_way);
    read("k_shot", c.k_shot);
    read("base_samples_per_relation", c.base_samples_per_relation);
    read("valid_fraction", c.valid_fraction);
    read("filter_relations", c.filter_relations);
    read("embedding_dim", c.embedding_dim);
    read("output_dim", c.output_dim);
    read("embeddings_path", c.embeddings_path);
    read("sim_steps", c.sim_steps);
    read("sim_batch_size", c.sim_batch_size);
    read("sim_learning_rate", c.sim_learning_rate);
    read("sim_seed", c.sim_seed);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError(std::string("config: ") + e.what(), 0);
  }
  c.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const std::exception &e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
  return ConfigFromJson(doc);
}

void SaveRunConfig(const RunConfig &config, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << ConfigToJson(config).dump(2) << '\n';
}

uint64_t RunConfig::Fingerprint() const {
  return Fnv1a(ConfigToJson(*this).dump());
}

}  // namespace cfrl
