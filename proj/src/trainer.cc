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

#include "cfrl/trainer.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "cfrl/objectives.h"

namespace cfrl {

namespace {

uint64_t SplitMix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent streams per seed: task order uses the seed itself.
uint64_t InitSeed(uint64_t seed) { return SplitMix(seed ^ 0x1111); }
uint64_t TrainSeed(uint64_t seed) { return SplitMix(seed ^ 0x2222); }

}  // namespace

ContinualLearner::ContinualLearner(RunConfig config, Encoder encoder,
                                   uint64_t seed)
    : config_(std::move(config)),
      encoder_(std::move(encoder)),
      rng_(TrainSeed(seed)) {
  config_.Validate();
}

StepReport ContinualLearner::TrainInitialTask(const Task &task) {
  if (task.index != 1 || steps_completed_ != 0) {
    throw ProtocolError("the initial task must be task 1 and come first");
  }
  return RunStep(task, nullptr);
}

StepReport ContinualLearner::StepTask(const Task &task,
                                      const AugmentationContext *augmentation) {
  if (task.index == 1) return TrainInitialTask(task);
  return RunStep(task, augmentation);
}

ContinualLearner::TrainItem ContinualLearner::Item(const Sample &sample,
                                                   bool memory) const {
  const int target = relations_.Index(sample.relation);
  if (target < 0) {
    throw ProtocolError("training sample with unknown relation '" +
                        sample.relation + "'");
  }
  return {&sample, target, memory};
}

double ContinualLearner::Train(std::vector<TrainItem> items,
                               const LossWeights &weights, bool contrastive,
                               int epochs) {
  double epoch_loss = 0.0;
  const size_t batch_size = static_cast<size_t>(config_.batch_size);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(items.begin(), items.end(), rng_);
    double total = 0.0;
    int batches = 0;
    for (size_t begin = 0; begin < items.size(); begin += batch_size) {
      const size_t end = std::min(items.size(), begin + batch_size);
      TrainingObjective objective;
      objective.weights = weights;
      objective.margins = config_.margins;
      objective.metric = config_.metric;
      objective.relations = relations_.vectors();

      std::vector<EncoderInput> inputs;
      std::vector<Sample> batch;
      std::vector<size_t> memory_positions;
      for (size_t i = begin; i < end; ++i) {
        inputs.push_back(encoder_.Prepare(*items[i].sample));
        objective.targets.push_back(items[i].target);
        if (contrastive) {
          if (items[i].memory) memory_positions.push_back(batch.size());
          batch.push_back(*items[i].sample);
        }
      }
      if (!memory_positions.empty()) {
        const auto negatives = GenerateHardNegatives(
            batch, memory_positions, config_.n_neg, rng_);
        for (size_t m = 0; m < memory_positions.size(); ++m) {
          ContrastiveItem item;
          item.anchor = memory_positions[m];
          item.target = objective.targets[memory_positions[m]];
          for (const auto &negative : negatives[m]) {
            item.negatives.push_back(inputs.size());
            inputs.push_back(encoder_.Prepare(negative));
          }
          objective.items.push_back(std::move(item));
        }
      }
      const LossAndGradient lg = encoder_.Gradient(inputs, objective);
      encoder_.ApplyGradient(lg.gradient, config_.learning_rate,
                             config_.update_embeddings);
      total += lg.loss;
      ++batches;
    }
    epoch_loss = batches > 0 ? total / batches : 0.0;
  }
  return epoch_loss;
}

StepReport ContinualLearner::RunStep(const Task &task,
                                     const AugmentationContext *augmentation) {
  if (task.index != steps_completed_ + 1) {
    throw ProtocolError("expected task " + std::to_string(steps_completed_ + 1) +
                        ", got task " + std::to_string(task.index));
  }
  const Method method = config_.method;
  StepReport report;
  report.step = task.index;
  report.train_size = task.train.size();

  // Expanded training set; the initial task is never augmented.
  expanded_ = task.train;
  if (UsesAugmentation(method) && task.index > 1 && augmentation != nullptr &&
      augmentation->corpus != nullptr && !augmentation->corpus->empty()) {
    AugmentationResult augmented =
        AugmentTask(task, *augmentation->corpus, *augmentation->model,
                    *augmentation->vectors, config_.alpha,
                    static_cast<size_t>(config_.top_k));
    report.entity_queries = augmented.entity_queries;
    report.search_queries = augmented.search_queries;
    report.augmented = augmented.added.size();
    expanded_ = std::move(augmented.expanded);
  }
  report.expanded_size = expanded_.size();

  for (const auto &relation : task.relations) {
    if (relations_.Contains(relation)) {
      throw ProtocolError("relation '" + relation + "' was already learned");
    }
    std::vector<std::string> name = RelationNameTokens(relation);
    Vec anchor = encoder_.EncodeRelationName(name);
    relations_.Add(relation, std::move(name), std::move(anchor));
  }

  LossWeights weights = config_.weights;
  if (method == Method::kReplay) weights = {1.0, 0.0, 0.0, 0.0};

  std::vector<TrainItem> fresh;
  fresh.reserve(expanded_.size());
  for (const auto &s : expanded_) fresh.push_back(Item(s, false));
  for (int round = 0; round < config_.iter1; ++round) {
    report.new_task_loss = Train(fresh, weights, false, config_.epochs_per_iter);
  }

  if (method == Method::kSeqRun) {
    ++steps_completed_;
    return report;
  }

  if (method == Method::kJoint) {
    const size_t previous = history_.size();
    history_.insert(history_.end(), task.train.begin(), task.train.end());
    std::vector<TrainItem> all = fresh;
    for (size_t i = 0; i < previous; ++i) all.push_back(Item(history_[i], true));
    report.rehearsal_size = all.size();
    std::map<std::string, std::vector<Sample>> by_relation;
    for (const auto &s : history_) by_relation[s.relation].push_back(s);
    for (int round = 0; round < config_.iter2; ++round) {
      report.rehearsal_loss =
          Train(all, weights, false, config_.epochs_per_iter);
      RefreshRelationEmbeddings(relations_, by_relation, encoder_);
    }
    ++steps_completed_;
    return report;
  }

  // One exemplar per new relation, chosen from the original training data.
  std::map<std::string, std::vector<Sample>> by_relation;
  for (const auto &s : task.train) by_relation[s.relation].push_back(s);
  for (const auto &relation : task.relations) {
    const auto &candidates = by_relation[relation];
    if (candidates.empty()) {
      throw ProtocolError("relation '" + relation + "' has no training data");
    }
    const size_t pick = SelectExemplar(candidates, encoder_, config_.metric);
    memory_.Add(relation, candidates[pick], task.index);
  }

  std::vector<TrainItem> rehearsal = fresh;
  for (const auto &entry : memory_.entries()) {
    rehearsal.push_back(Item(entry.exemplar, true));
  }
  report.rehearsal_size = rehearsal.size();
  const bool contrastive = method != Method::kReplay;
  for (int round = 0; round < config_.iter2; ++round) {
    report.rehearsal_loss =
        Train(rehearsal, weights, contrastive, config_.epochs_per_iter);
    if (method != Method::kReplay) {
      RefreshRelationEmbeddings(relations_, memory_, encoder_);
    }
  }
  ++steps_completed_;
  return report;
}

std::string ContinualLearner::Infer(const Sample &sample) const {
  if (relations_.empty()) throw Error("no known relations to infer from");
  const Vec embedding = encoder_.Encode(sample);
  int best = 0;
  double best_score = Similarity(embedding, relations_.vector(0),
                                 config_.metric);
  for (int i = 1; i < static_cast<int>(relations_.size()); ++i) {
    const double score = Similarity(embedding, relations_.vector(i),
                                    config_.metric);
    if (score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return relations_.relation(best);
}

double ContinualLearner::EvaluateSamples(std::span<const Sample> samples) const {
  if (samples.empty()) return 0.0;
  size_t correct = 0;
  for (const auto &s : samples) {
    if (Infer(s) == s.relation) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(samples.size());
}

double ContinualLearner::Evaluate(const TaskSequence &sequence, int k) const {
  const std::vector<Sample> test = CumulativeTestSet(sequence, k);
  return EvaluateSamples(test);
}

Vocabulary BuildVocabulary(const TaskSequence &sequence, const Corpus *corpus,
                           const WordVectors *word_vectors) {
  Vocabulary vocab;
  for (const auto &task : sequence.tasks) {
    for (const auto &relation : task.relations) {
      vocab.AddAll(RelationNameTokens(relation));
    }
    for (const auto &s : task.train) vocab.AddAll(s.tokens);
  }
  if (corpus != nullptr) {
    for (const auto &s : corpus->records()) vocab.AddAll(s.tokens);
  }
  if (word_vectors != nullptr) {
    std::vector<std::string> words;
    for (const auto &entry : *word_vectors) words.push_back(entry.first);
    std::sort(words.begin(), words.end());
    vocab.AddAll(words);
  }
  return vocab;
}

SimilarityModel TrainSimilarityModel(const Corpus &corpus,
                                     const RunConfig &config,
                                     const WordVectors *word_vectors,
                                     PretrainReport *report) {
  Vocabulary vocab;
  for (const auto &s : corpus.records()) vocab.AddAll(s.tokens);
  if (word_vectors != nullptr) {
    std::vector<std::string> words;
    for (const auto &entry : *word_vectors) words.push_back(entry.first);
    std::sort(words.begin(), words.end());
    vocab.AddAll(words);
  }
  SimilarityModel model(Encoder::Create(std::move(vocab), config.embedding_dim,
                                        config.output_dim,
                                        SplitMix(config.sim_seed ^ 0x3333),
                                        word_vectors));
  const auto batches =
      BuildPairBatches(corpus, static_cast<size_t>(config.sim_steps),
                       static_cast<size_t>(config.sim_batch_size),
                       config.sim_seed);
  if (batches.empty()) {
    std::cerr << "warning: corpus has no positive/negative pairs; similarity "
                 "pretraining skipped\n";
    return model;
  }
  PretrainReport r = PretrainSimilarity(model, corpus, batches,
                                        config.sim_steps,
                                        config.sim_learning_rate);
  if (report != nullptr) *report = std::move(r);
  return model;
}

AccuracyMatrix ExperimentResult::matrix() const {
  AccuracyMatrix m;
  for (const auto &run : runs) {
    m.seeds.push_back(run.seed);
    m.rows.push_back(run.accuracy);
  }
  return m;
}

uint64_t DatasetFingerprint(const RelationGroups &groups) {
  uint64_t hash = Fnv1a("dataset");
  for (const auto &[relation, samples] : groups) {
    hash = Fnv1a(relation, hash);
    for (const auto &s : samples) hash = Fnv1a(SampleToJson(s).dump(), hash);
  }
  return hash;
}

namespace {

void WriteArtifacts(const ExperimentResult &result,
                    const ExperimentInputs &inputs,
                    const std::filesystem::path &out_dir, bool complete,
                    const std::string &error) {
  result.matrix().WriteCsv(out_dir / "accuracy_matrix.csv");
  AccuracyMatrix first;
  for (const auto &run : result.runs) {
    first.seeds.push_back(run.seed);
    first.rows.push_back(run.first_task_accuracy);
  }
  first.WriteCsv(out_dir / "first_task_accuracy.csv");

  char hex[32];
  nlohmann::json manifest;
  manifest["method"] = MethodName(result.config.method);
  manifest["config"] = ConfigToJson(result.config);
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(result.config.Fingerprint()));
  manifest["config_hash"] = hex;
  std::snprintf(hex, sizeof(hex), "%016llx",
                static_cast<unsigned long long>(
                    DatasetFingerprint(*inputs.groups)));
  manifest["dataset_hash"] = hex;
  if (inputs.corpus != nullptr) {
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(inputs.corpus->Fingerprint()));
    manifest["corpus_hash"] = hex;
  }
  manifest["complete"] = complete;
  if (!error.empty()) manifest["error"] = error;
  manifest["seeds"] = nlohmann::json::array();
  for (const auto &run : result.runs) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto &s : run.steps) {
      steps.push_back({{"step", s.step},
                       {"train", s.train_size},
                       {"expanded", s.expanded_size},
                       {"rehearsal", s.rehearsal_size},
                       {"augmented", s.augmented},
                       {"entity_queries", s.entity_queries},
                       {"search_queries", s.search_queries},
                       {"new_task_loss", s.new_task_loss},
                       {"rehearsal_loss", s.rehearsal_loss}});
    }
    manifest["seeds"].push_back(
        {{"seed", run.seed}, {"seconds", run.seconds}, {"steps", steps}});
  }
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw Error("cannot write manifest in " + out_dir.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace

ExperimentResult RunExperiment(const RunConfig &config,
                               const ExperimentInputs &inputs,
                               const std::filesystem::path &out_dir,
                               const StepHook &hook) {
  config.Validate();
  if (inputs.groups == nullptr) throw Error("experiment needs a dataset");
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  // The similarity model is task-independent and trained once.
  SimilarityModel trained;
  const SimilarityModel *similarity = inputs.similarity;
  CorpusVectors vectors;
  AugmentationContext augmentation;
  const bool augment = UsesAugmentation(config.method) &&
                       inputs.corpus != nullptr && !inputs.corpus->empty();
  if (augment) {
    if (similarity == nullptr) {
      trained = TrainSimilarityModel(*inputs.corpus, config,
                                     inputs.word_vectors);
      similarity = &trained;
    }
    vectors = CorpusVectors::Compute(*similarity, *inputs.corpus);
    augmentation = {inputs.corpus, similarity, &vectors};
  }

  ExperimentResult result;
  result.config = config;
  for (uint64_t seed : config.seeds) {
    try {
      const auto started = std::chrono::steady_clock::now();
      TaskSequenceOptions options;
      options.n_tasks = config.n_tasks;
      options.n_way = config.n_way;
      options.k_shot = config.k_shot;
      options.base_samples_per_relation = config.base_samples_per_relation;
      options.valid_fraction = config.valid_fraction;
      options.seed = seed;
      const TaskSequence sequence = BuildTaskSequence(*inputs.groups, options);

      Encoder encoder = Encoder::Create(
          BuildVocabulary(sequence, inputs.corpus, inputs.word_vectors),
          config.embedding_dim, config.output_dim, InitSeed(seed),
          inputs.word_vectors);
      ContinualLearner learner(config, std::move(encoder), seed);

      SeedRun run;
      run.seed = seed;
      for (int k = 1; k <= sequence.size(); ++k) {
        const Task &task = sequence.task(k);
        StepReport report = k == 1 ? learner.TrainInitialTask(task)
                                   : learner.StepTask(task, &augmentation);
        run.accuracy.push_back(learner.Evaluate(sequence, k));
        run.first_task_accuracy.push_back(
            learner.EvaluateSamples(sequence.task(1).test));
        run.steps.push_back(report);
        if (hook) hook(seed, sequence, learner, report);
        if (!out_dir.empty() && UsesMemory(config.method) &&
            config.method != Method::kJoint) {
          const auto seed_dir = out_dir / ("seed_" + std::to_string(seed));
          std::filesystem::create_directories(seed_dir);
          learner.memory().Save(seed_dir /
                                ("memory_step_" + std::to_string(k) + ".jsonl"));
        }
      }
      run.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - started)
                        .count();
      result.runs.push_back(std::move(run));
      if (!out_dir.empty()) WriteArtifacts(result, inputs, out_dir, false, "");
    } catch (const std::exception &e) {
      if (!out_dir.empty()) {
        WriteArtifacts(result, inputs, out_dir, false,
                       "seed " + std::to_string(seed) + ": " + e.what());
      }
      throw;
    }
  }
  if (!out_dir.empty()) WriteArtifacts(result, inputs, out_dir, true, "");
  return result;
}

}  // namespace cfrl
