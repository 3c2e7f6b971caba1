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

#ifndef CFRL_BENCHMARK_H_
#define CFRL_BENCHMARK_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfrl/sample.h"

namespace cfrl {

// Samples grouped by relation identifier, ordered by identifier.
using RelationGroups = std::map<std::string, std::vector<Sample>>;

enum class DatasetFormat {
  kJsonLines,  // one Sample record per line
  kFewRel,     // {"P17": [{"tokens", "h": [text, id, [[pos...]]], "t"}]}
  kTacred,     // [{"token", "subj_start", "subj_end", "obj_start", ...}]
};

DatasetFormat ParseDatasetFormat(const std::string &name);

// Reads a labeled dataset. Every span is validated. Relations listed in
// `filter_relations` (e.g. TACRED's "no_relation") are dropped.
RelationGroups LoadDataset(const std::filesystem::path &path,
                           DatasetFormat format = DatasetFormat::kJsonLines,
                           const std::vector<std::string> &filter_relations = {});

struct Task {
  int index = 1;  // 1-based
  std::vector<std::string> relations;
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<Sample> test;
};

struct TaskSequenceOptions {
  int n_tasks = 8;
  int n_way = 10;
  int k_shot = 5;
  int base_samples_per_relation = 100;
  uint64_t seed = 0;
  // Share of the samples left after drawing training data that goes to the
  // validation split; the rest is test data.
  double valid_fraction = 0.2;
};

struct TaskSequence {
  std::vector<Task> tasks;
  int n_way = 0;
  int k_shot = 0;
  int base_samples_per_relation = 0;
  uint64_t seed = 0;

  int size() const { return static_cast<int>(tasks.size()); }
  const Task &task(int k) const;  // 1-based
};

// Partitions the relation universe into tasks. Tasks 2..n get `n_way`
// relations each and the first task takes the remainder, so 80 relations in
// 8 tasks of 10-way gives 10 everywhere while 41 relations in 8 tasks of
// 5-way gives the first task 6.
TaskSequence BuildTaskSequence(const RelationGroups &groups,
                               const TaskSequenceOptions &options);

// Concatenated test splits of tasks 1..k.
std::vector<Sample> CumulativeTestSet(const TaskSequence &sequence, int k);

// Directory dump: manifest.json plus task_NN.jsonl with a `split` field on
// each record.
void WriteTaskSequence(const TaskSequence &sequence,
                       const std::filesystem::path &dir);
TaskSequence ReadTaskSequence(const std::filesystem::path &dir);

// Unlabeled entity-tagged sentences indexed by ordered entity-pair surface
// forms (case-sensitive exact match).
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<Sample> records);

  // Records without a usable head or tail span are skipped and counted.
  static Corpus Load(const std::filesystem::path &path);

  const std::vector<Sample> &records() const { return records_; }
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  size_t skipped() const { return skipped_; }

  std::span<const size_t> Lookup(const std::string &head,
                                 const std::string &tail) const;
  std::span<const size_t> WithHead(const std::string &head) const;
  std::span<const size_t> WithTail(const std::string &tail) const;

  const std::map<std::pair<std::string, std::string>, std::vector<size_t>> &
  pair_index() const {
    return pair_index_;
  }
  size_t num_pairs() const { return pair_index_.size(); }

  // FNV-1a over the serialized records.
  uint64_t Fingerprint() const;

 private:
  void BuildIndex();

  std::vector<Sample> records_;
  size_t skipped_ = 0;
  std::map<std::pair<std::string, std::string>, std::vector<size_t>>
      pair_index_;
  std::map<std::string, std::vector<size_t>> head_index_;
  std::map<std::string, std::vector<size_t>> tail_index_;
};

void WriteSamples(const std::vector<Sample> &samples,
                  const std::filesystem::path &path);

// 64-bit FNV-1a.
uint64_t Fnv1a(std::string_view data, uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace cfrl

#endif  // CFRL_BENCHMARK_H_
