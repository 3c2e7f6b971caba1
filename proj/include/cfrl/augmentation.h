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

#ifndef CFRL_AUGMENTATION_H_
#define CFRL_AUGMENTATION_H_

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "cfrl/benchmark.h"
#include "cfrl/encoder.h"

namespace cfrl {

// Logistic of the dot product of two unit vectors, in (0.2689, 0.7311).
double Sigma(const Vec &a, const Vec &b);

// Sentence encoder with L2-normalized output, used to score sentence pairs
// and to search the corpus.
class SimilarityModel {
 public:
  SimilarityModel() = default;
  explicit SimilarityModel(Encoder encoder) : encoder_(std::move(encoder)) {}

  // Unit-norm representation. Throws NumericError if the raw output is zero.
  Vec Represent(const Sample &sample) const;
  double Sigma(const Sample &a, const Sample &b) const;

  const Encoder &encoder() const { return encoder_; }
  Encoder &mutable_encoder() { return encoder_; }

  void Save(const std::filesystem::path &path) const { encoder_.Save(path); }
  static SimilarityModel Load(const std::filesystem::path &path) {
    return SimilarityModel(Encoder::Load(path));
  }

 private:
  Encoder encoder_;
};

// Indices into the corpus.
struct SentencePair {
  size_t first = 0;
  size_t second = 0;
};

// Positives share the ordered entity pair; negatives share exactly one of
// head or tail. Both lists have the same length.
struct PairBatch {
  std::vector<SentencePair> positives;
  std::vector<SentencePair> negatives;
};

// Endless source of balanced pair batches. A positive is drawn by picking an
// entity-pair group of size >= 2 uniformly, then two distinct members; its
// negative pairs the first member with a record sharing only its head or
// only its tail.
class PairBatchStream {
 public:
  PairBatchStream(const Corpus &corpus, size_t batch_size, uint64_t seed);

  // True when the corpus has no positive pair with an available negative.
  bool empty() const { return groups_.empty(); }
  PairBatch Next();

 private:
  const Corpus *corpus_;
  size_t batch_size_;
  std::mt19937_64 rng_;
  std::vector<std::vector<size_t>> groups_;
  // Per record: records sharing exactly one entity with it.
  std::vector<std::vector<size_t>> hard_negatives_;
};

std::vector<PairBatch> BuildPairBatches(const Corpus &corpus,
                                        size_t n_batches, size_t batch_size,
                                        uint64_t seed);

// -sum log sigma(positive) - sum log(1 - sigma(negative)).
double PairLoss(const SimilarityModel &model, const Corpus &corpus,
                const PairBatch &batch);

struct PretrainReport {
  std::vector<double> losses;  // one per step
};

// SGD on the pair loss, cycling through `batches`. Zero steps leave the
// model untouched. Throws NumericError on a non-finite loss.
PretrainReport PretrainSimilarity(SimilarityModel &model, const Corpus &corpus,
                                  std::span<const PairBatch> batches,
                                  int steps, double learning_rate);

// Unit vectors of every corpus record under one similarity model, stamped
// with the corpus and model fingerprints.
class CorpusVectors {
 public:
  CorpusVectors() = default;
  static CorpusVectors Compute(const SimilarityModel &model,
                               const Corpus &corpus);
  // Reuses `cache_file` when its fingerprints match, otherwise computes and
  // rewrites it.
  static CorpusVectors LoadOrCompute(const std::filesystem::path &cache_file,
                                     const SimilarityModel &model,
                                     const Corpus &corpus);

  void Save(const std::filesystem::path &path) const;
  static CorpusVectors Load(const std::filesystem::path &path);

  const Mat &vectors() const { return vectors_; }  // one row per record
  size_t size() const { return static_cast<size_t>(vectors_.rows()); }
  uint64_t corpus_hash() const { return corpus_hash_; }
  uint64_t model_hash() const { return model_hash_; }

 private:
  Mat vectors_;
  uint64_t corpus_hash_ = 0;
  uint64_t model_hash_ = 0;
};

struct SearchHit {
  size_t index = 0;
  double score = 0.0;
};

// Exact top-K by dot product, descending; lower corpus index first on ties.
// Returns every record when the corpus holds fewer than k.
std::vector<SearchHit> SimilaritySearchTopK(const Vec &query,
                                            const CorpusVectors &vectors,
                                            size_t k);

enum class MatchedBy { kEntity, kSearch };

struct AugmentedSample {
  Sample sample;  // corpus record relabeled with the query's relation
  MatchedBy matched_by = MatchedBy::kEntity;
  double score = 0.0;
  size_t corpus_index = 0;
  size_t query_index = 0;
};

// Corpus records with the query's ordered (head, tail) surface forms.
std::vector<size_t> EntityMatch(const Corpus &corpus, const Sample &query);

// Candidates with sigma(query, candidate) > alpha.
std::vector<AugmentedSample> FilterByThreshold(
    const SimilarityModel &model, const Sample &query, const Corpus &corpus,
    std::span<const size_t> candidates, double alpha);

// Top-K search hits relabeled with the query's relation, scored by sigma.
// Not thresholded.
std::vector<AugmentedSample> SearchSimilar(const SimilarityModel &model,
                                           const Sample &query,
                                           const Corpus &corpus,
                                           const CorpusVectors &vectors,
                                           size_t k);

struct AugmentationResult {
  std::vector<Sample> expanded;        // originals followed by additions
  std::vector<AugmentedSample> added;  // one per distinct corpus record
  size_t entity_queries = 0;           // queries with non-empty Q
  size_t search_queries = 0;           // queries that fell back to search
  size_t duplicates_collapsed = 0;
  size_t conflicts_resolved = 0;
};

// Expands a few-shot task's training set from the corpus. Each training
// sample is matched by entity pair and thresholded; samples with no match
// fall back to top-K search. A corpus record picked by several queries is
// kept once, with the label of its highest-scoring selection.
AugmentationResult AugmentTask(const Task &task, const Corpus &corpus,
                               const SimilarityModel &model,
                               const CorpusVectors &vectors, double alpha,
                               size_t k);

}  // namespace cfrl

#endif  // CFRL_AUGMENTATION_H_
