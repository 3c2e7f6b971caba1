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

#ifndef CFRL_OBJECTIVES_H_
#define CFRL_OBJECTIVES_H_

#include <span>
#include <string>
#include <vector>

#include "cfrl/encoder.h"

namespace cfrl {

enum class Metric { kCosine, kNegL2 };

Metric ParseMetric(const std::string &name);
std::string MetricName(Metric metric);

// cosine: u.v / (|u||v|), in [-1, 1]. neg_l2: -|u - v|.
// Throws Error for a zero vector under cosine or mismatched dimensions.
double Similarity(const Vec &u, const Vec &v, Metric metric);

// d Similarity(u, v) / du. Zero at u == v for neg_l2 (subgradient).
Vec SimilarityGrad(const Vec &u, const Vec &v, Metric metric);

struct LossWeights {
  double ce = 1.0;
  double mm = 1.0;
  double pm = 1.0;
  double con = 0.1;

  void Validate() const;
};

struct Margins {
  double m1 = 0.2;
  double m2 = 0.2;
  double m3 = 0.01;

  void Validate() const;
};

// Similarity of each sample against every known relation, plus the index of
// the true relation.
struct ScoredBatch {
  std::vector<std::vector<double>> scores;
  std::vector<int> targets;

  size_t size() const { return targets.size(); }
  void Validate() const;
};

ScoredBatch ScoreBatch(std::span<const Vec> embeddings,
                       std::span<const int> targets,
                       std::span<const Vec> relations, Metric metric);

// Mean negative log-likelihood of the true relation under softmax(scores).
double LossCe(const ScoredBatch &batch);
// Mean over samples of sum_{j != t} max(0, m1 - g_t + g_j).
double LossMm(const ScoredBatch &batch, double m1);
// Mean over samples of max(0, m2 - g_t + g_s), s the best-scoring wrong
// relation.
double LossPm(const ScoredBatch &batch, double m2);

// A memory sample in the batch and its corrupted copies. Indices point into
// the embedding list handed to LossCon.
struct ContrastiveItem {
  size_t anchor = 0;
  int target = 0;
  std::vector<size_t> negatives;
};

// Sum over items of max(0, m3 - g(anchor, r_t) + sum_j g(negative_j, r_t)).
double LossCon(std::span<const Vec> embeddings,
               std::span<const ContrastiveItem> items,
               std::span<const Vec> relations, double m3, Metric metric);

double LossNew(const ScoredBatch &batch, const LossWeights &weights,
               const Margins &margins);

double LossMem(const ScoredBatch &batch, std::span<const Vec> embeddings,
               std::span<const ContrastiveItem> items,
               std::span<const Vec> relations, const LossWeights &weights,
               const Margins &margins, Metric metric);

// Builds the composite objective over encoder outputs. Outputs
// [0, targets.size()) are the batch samples scored against `relations`;
// contrastive items may reference any output. `weights.con` only applies
// when `items` is non-empty. Relation vectors are constants.
struct TrainingObjective {
  std::vector<int> targets;
  std::vector<ContrastiveItem> items;
  std::vector<Vec> relations;
  LossWeights weights;
  Margins margins;
  Metric metric = Metric::kCosine;

  OutputLoss operator()(const std::vector<Vec> &outputs) const;
};

}  // namespace cfrl

#endif  // CFRL_OBJECTIVES_H_
