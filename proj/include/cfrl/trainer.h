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

#ifndef CFRL_TRAINER_H_
#define CFRL_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "cfrl/augmentation.h"
#include "cfrl/benchmark.h"
#include "cfrl/config.h"
#include "cfrl/encoder.h"
#include "cfrl/memory.h"
#include "cfrl/report.h"

namespace cfrl {

// Corpus-side inputs of the augmentation step. All three must describe the
// same corpus and model.
struct AugmentationContext {
  const Corpus *corpus = nullptr;
  const SimilarityModel *model = nullptr;
  const CorpusVectors *vectors = nullptr;
};

struct StepReport {
  int step = 0;
  size_t train_size = 0;      // original few-shot (or base) training data
  size_t expanded_size = 0;   // after augmentation
  size_t rehearsal_size = 0;  // expanded data plus memory, 0 without memory
  size_t entity_queries = 0;
  size_t search_queries = 0;
  size_t augmented = 0;
  double new_task_loss = 0.0;   // mean batch loss of the last new-task epoch
  double rehearsal_loss = 0.0;  // mean batch loss of the last rehearsal epoch
};

// Encoder and memory state carried across the task sequence. Tasks must be
// fed in order starting at 1.
class ContinualLearner {
 public:
  ContinualLearner(RunConfig config, Encoder encoder, uint64_t seed);

  StepReport TrainInitialTask(const Task &task);
  // `augmentation` may be null; it is ignored by methods that do not
  // augment.
  StepReport StepTask(const Task &task,
                      const AugmentationContext *augmentation = nullptr);

  // Highest-similarity known relation; first in table order on ties.
  std::string Infer(const Sample &sample) const;
  double EvaluateSamples(std::span<const Sample> samples) const;
  double Evaluate(const TaskSequence &sequence, int k) const;

  int steps_completed() const { return steps_completed_; }
  const RunConfig &config() const { return config_; }
  const Encoder &encoder() const { return encoder_; }
  const RelationTable &relations() const { return relations_; }
  const MemoryStore &memory() const { return memory_; }
  // Every training sample seen so far (joint baseline only).
  const std::vector<Sample> &history() const { return history_; }
  // Expanded training set of the last step.
  const std::vector<Sample> &last_expanded() const { return expanded_; }

 private:
  struct TrainItem {
    const Sample *sample;
    int target;
    bool memory;
  };

  StepReport RunStep(const Task &task, const AugmentationContext *augmentation);
  // Returns the mean batch loss of the final epoch.
  double Train(std::vector<TrainItem> items, const LossWeights &weights,
               bool contrastive, int epochs);
  TrainItem Item(const Sample &sample, bool memory) const;

  RunConfig config_;
  Encoder encoder_;
  RelationTable relations_;
  MemoryStore memory_;
  std::vector<Sample> history_;
  std::vector<Sample> expanded_;
  std::mt19937_64 rng_;
  int steps_completed_ = 0;
};

// Vocabulary over relation names, every task's training tokens, the corpus
// and the pretrained word list (sorted).
Vocabulary BuildVocabulary(const TaskSequence &sequence, const Corpus *corpus,
                           const WordVectors *word_vectors);

// Pretrains a similarity model on the corpus with the config's sim_* knobs.
// The returned model is untrained if the corpus yields no pair batches.
SimilarityModel TrainSimilarityModel(const Corpus &corpus,
                                     const RunConfig &config,
                                     const WordVectors *word_vectors,
                                     PretrainReport *report = nullptr);

struct ExperimentInputs {
  const RelationGroups *groups = nullptr;
  const Corpus *corpus = nullptr;              // optional
  const SimilarityModel *similarity = nullptr;  // trained on demand if null
  const WordVectors *word_vectors = nullptr;   // optional
};

struct SeedRun {
  uint64_t seed = 0;
  std::vector<double> accuracy;             // cumulative test set, per step
  std::vector<double> first_task_accuracy;  // task-1 test set, per step
  std::vector<StepReport> steps;
  double seconds = 0.0;
};

struct ExperimentResult {
  RunConfig config;
  std::vector<SeedRun> runs;

  AccuracyMatrix matrix() const;
};

using StepHook = std::function<void(uint64_t seed, const TaskSequence &,
                                    const ContinualLearner &,
                                    const StepReport &)>;

// Runs the full task sequence once per seed, each with its own task order
// and initialization. With a non-empty `out_dir`, writes
// accuracy_matrix.csv, first_task_accuracy.csv, manifest.json and per-step
// memory dumps; the matrix is rewritten after every seed so a failure
// leaves the finished seeds on disk.
ExperimentResult RunExperiment(const RunConfig &config,
                               const ExperimentInputs &inputs,
                               const std::filesystem::path &out_dir = {},
                               const StepHook &hook = {});

uint64_t DatasetFingerprint(const RelationGroups &groups);

}  // namespace cfrl

#endif  // CFRL_TRAINER_H_
