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

#ifndef CFRL_CONFIG_H_
#define CFRL_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "cfrl/objectives.h"

namespace cfrl {

enum class Method {
  kErda,      // full method
  kErdaNoDa,  // as above without augmentation
  kSeqRun,    // fine-tune on each task, no memory
  kJoint,     // keeps and retrains on every past training sample
  kReplay,    // cross entropy on new data plus one-exemplar replay
};

Method ParseMethod(const std::string &name);
std::string MethodName(Method method);

bool UsesAugmentation(Method method);
bool UsesMemory(Method method);

// Every knob of a run. Defaults follow the published hyperparameters where
// they exist (margins, loss weights, alpha, K, iter1/iter2, six seeds).
struct RunConfig {
  Method method = Method::kErda;
  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5, 6};

  // Optimization. Each iter1 round and each iter2 round runs
  // `epochs_per_iter` epochs.
  int iter1 = 1;
  int iter2 = 2;
  int epochs_per_iter = 1;
  int batch_size = 16;
  double learning_rate = 0.1;
  bool update_embeddings = true;

  LossWeights weights;
  Margins margins;
  Metric metric = Metric::kCosine;
  int n_neg = 2;

  // Augmentation.
  double alpha = 0.65;
  int top_k = 1;

  // Benchmark construction.
  int n_tasks = 8;
  int n_way = 10;
  int k_shot = 5;
  int base_samples_per_relation = 100;
  double valid_fraction = 0.2;
  std::vector<std::string> filter_relations;

  // Encoder shape; `embeddings_path` optionally seeds token vectors.
  int embedding_dim = 32;
  int output_dim = 32;
  std::string embeddings_path;

  // Similarity-model pretraining.
  int sim_steps = 2000;
  int sim_batch_size = 16;
  double sim_learning_rate = 0.1;
  uint64_t sim_seed = 0;

  // Throws ValidationError on non-positive counts or invalid weights.
  void Validate() const;
  // FNV-1a of the canonical JSON form.
  uint64_t Fingerprint() const;
};

nlohmann::json ConfigToJson(const RunConfig &config);
// Missing keys keep their defaults; unknown keys are rejected.
RunConfig ConfigFromJson(const nlohmann::json &doc);
RunConfig LoadRunConfig(const std::filesystem::path &path);
void SaveRunConfig(const RunConfig &config, const std::filesystem::path &path);

}  // namespace cfrl

#endif  // CFRL_CONFIG_H_
