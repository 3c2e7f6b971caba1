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

#ifndef CFRL_SYNTHETIC_H_
#define CFRL_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cfrl/benchmark.h"
#include "cfrl/encoder.h"

namespace cfrl {

// Generator for desk-scale benchmarks. Each relation owns a Gaussian cluster
// in word-vector space; its trigger words are drawn around the cluster
// center and every sentence of the relation uses a few of them between the
// two entity mentions, padded with shared filler words.
struct SyntheticOptions {
  int n_relations = 40;
  int samples_per_relation = 60;
  int triggers_per_relation = 6;
  int triggers_per_sentence = 3;
  int n_fillers = 60;
  // Each of the four filler slots around the mentions holds 0..this many
  // filler words.
  int max_filler_run = 1;
  int n_entities = 400;
  int embedding_dim = 16;
  // Stddev of trigger vectors around their relation's center (unit-variance
  // centers).
  double cluster_spread = 0.5;
  // Chance that a trigger slot uses another relation's trigger word.
  double trigger_noise = 0.1;

  // Corpus: per labeled sample, this many sentences with the same entity
  // pair and relation wording.
  int paraphrases_per_sample = 2;
  // Chance that a labeled pair also appears with another relation's wording.
  double distractor_rate = 0.0;
  // Extra sentences with random relations and entity pairs.
  int background_records = 2000;

  uint64_t seed = 0;
};

struct SyntheticData {
  RelationGroups dataset;
  Corpus corpus;
  WordVectors word_vectors;
  // Hidden relation of every corpus record.
  std::vector<std::string> corpus_relation;
  // True for records planted as paraphrases of a labeled sample.
  std::vector<bool> corpus_planted;
};

SyntheticData GenerateSynthetic(const SyntheticOptions &options);

// dataset.jsonl, corpus.jsonl, word_vectors.txt, corpus_truth.jsonl.
void WriteSynthetic(const SyntheticData &data,
                    const std::filesystem::path &dir);

}  // namespace cfrl

#endif  // CFRL_SYNTHETIC_H_
