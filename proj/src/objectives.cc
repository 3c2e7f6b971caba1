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

#include "cfrl/objectives.h"

#include <algorithm>
#include <cmath>

namespace cfrl {

Metric ParseMetric(const std::string &name) {
  if (name == "cosine") return Metric::kCosine;
  if (name == "neg_l2" || name == "l2") return Metric::kNegL2;
  throw Error("unknown metric '" + name + "'");
}

std::string MetricName(Metric metric) {
  return metric == Metric::kCosine ? "cosine" : "neg_l2";
}

double Similarity(const Vec &u, const Vec &v, Metric metric) {
  if (u.size() != v.size()) {
    throw Error("similarity of vectors with dimensions " +
                std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
  if (metric == Metric::kNegL2) return -(u - v).norm();
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw Error("cosine similarity of a zero vector");
  }
  return std::clamp(u.dot(v) / (nu * nv), -1.0, 1.0);
}

Vec SimilarityGrad(const Vec &u, const Vec &v, Metric metric) {
  if (metric == Metric::kNegL2) {
    const Vec diff = u - v;
    const double n = diff.norm();
    if (n == 0.0) return Vec::Zero(u.size());
    return -diff / n;
  }
  const double nu = u.norm();
  const double nv = v.norm();
  if (nu == 0.0 || nv == 0.0) {
    throw Error("cosine similarity of a zero vector");
  }
  const double cos = u.dot(v) / (nu * nv);
  return v / (nu * nv) - cos * u / (nu * nu);
}

void LossWeights::Validate() const {
  for (double w : {ce, mm, pm, con}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ValidationError("loss weights must be finite and nonnegative");
    }
  }
}

void Margins::Validate() const {
  for (double m : {m1, m2, m3}) {
    if (!std::isfinite(m) || m < 0.0) {
      throw ValidationError("margins must be finite and nonnegative");
    }
  }
}

void ScoredBatch::Validate() const {
  if (scores.size() != targets.size()) {
    throw ValidationError("score rows and targets differ in length");
  }
  for (size_t i = 0; i < scores.size(); ++i) {
    if (targets[i] < 0 || targets[i] >= static_cast<int>(scores[i].size())) {
      throw ValidationError("target index out of range in row " +
                            std::to_string(i));
    }
  }
}

ScoredBatch ScoreBatch(std::span<const Vec> embeddings,
                       std::span<const int> targets,
                       std::span<const Vec> relations, Metric metric) {
  ScoredBatch batch;
  batch.targets.assign(targets.begin(), targets.end());
  batch.scores.reserve(targets.size());
  for (size_t i = 0; i < targets.size(); ++i) {
    std::vector<double> row;
    row.reserve(relations.size());
    for (const auto &r : relations) {
      row.push_back(Similarity(embeddings[i], r, metric));
    }
    batch.scores.push_back(std::move(row));
  }
  batch.Validate();
  return batch;
}

namespace {

using ScoreGrads = std::vector<std::vector<double>>;

double LogSumExp(const std::vector<double> &row) {
  const double top = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (double s : row) sum += std::exp(s - top);
  return top + std::log(sum);
}

// Index of the highest-scoring relation other than `target`; the first one
// on ties.
int ClosestWrong(const std::vector<double> &row, int target) {
  int best = -1;
  for (int j = 0; j < static_cast<int>(row.size()); ++j) {
    if (j == target) continue;
    if (best < 0 || row[j] > row[best]) best = j;
  }
  return best;
}

// Each Accumulate* returns the loss and adds weight * dLoss/dscores.
double AccumulateCe(const ScoredBatch &batch, double weight,
                    ScoreGrads *grads) {
  if (batch.size() == 0) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    const auto &row = batch.scores[i];
    const double lse = LogSumExp(row);
    total += lse - row[batch.targets[i]];
    if (grads != nullptr) {
      for (size_t j = 0; j < row.size(); ++j) {
        double p = std::exp(row[j] - lse);
        if (static_cast<int>(j) == batch.targets[i]) p -= 1.0;
        (*grads)[i][j] += weight * p * inv_n;
      }
    }
  }
  return total * inv_n;
}

double AccumulateMm(const ScoredBatch &batch, double m1, double weight,
                    ScoreGrads *grads) {
  if (batch.size() == 0) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    const auto &row = batch.scores[i];
    const int t = batch.targets[i];
    for (int j = 0; j < static_cast<int>(row.size()); ++j) {
      if (j == t) continue;
      const double hinge = m1 - row[t] + row[j];
      if (hinge <= 0.0) continue;
      total += hinge;
      if (grads != nullptr) {
        (*grads)[i][j] += weight * inv_n;
        (*grads)[i][t] -= weight * inv_n;
      }
    }
  }
  return total * inv_n;
}

double AccumulatePm(const ScoredBatch &batch, double m2, double weight,
                    ScoreGrads *grads) {
  if (batch.size() == 0) return 0.0;
  const double inv_n = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (size_t i = 0; i < batch.size(); ++i) {
    const auto &row = batch.scores[i];
    const int t = batch.targets[i];
    const int s = ClosestWrong(row, t);
    if (s < 0) continue;
    const double hinge = m2 - row[t] + row[s];
    if (hinge <= 0.0) continue;
    total += hinge;
    if (grads != nullptr) {
      (*grads)[i][s] += weight * inv_n;
      (*grads)[i][t] -= weight * inv_n;
    }
  }
  return total * inv_n;
}

double AccumulateCon(std::span<const Vec> embeddings,
                     std::span<const ContrastiveItem> items,
                     std::span<const Vec> relations, double m3, Metric metric,
                     double weight, std::vector<Vec> *output_grads) {
  double total = 0.0;
  for (const auto &item : items) {
    const Vec &r = relations[item.target];
    double hinge = m3 - Similarity(embeddings[item.anchor], r, metric);
    for (size_t neg : item.negatives) {
      hinge += Similarity(embeddings[neg], r, metric);
    }
    if (hinge <= 0.0) continue;
    total += hinge;
    if (output_grads != nullptr) {
      (*output_grads)[item.anchor] -=
          weight * SimilarityGrad(embeddings[item.anchor], r, metric);
      for (size_t neg : item.negatives) {
        (*output_grads)[neg] +=
            weight * SimilarityGrad(embeddings[neg], r, metric);
      }
    }
  }
  return total;
}

}  // namespace

double LossCe(const ScoredBatch &batch) {
  batch.Validate();
  return AccumulateCe(batch, 1.0, nullptr);
}

double LossMm(const ScoredBatch &batch, double m1) {
  batch.Validate();
  return AccumulateMm(batch, m1, 1.0, nullptr);
}

double LossPm(const ScoredBatch &batch, double m2) {
  batch.Validate();
  return AccumulatePm(batch, m2, 1.0, nullptr);
}

double LossCon(std::span<const Vec> embeddings,
               std::span<const ContrastiveItem> items,
               std::span<const Vec> relations, double m3, Metric metric) {
  return AccumulateCon(embeddings, items, relations, m3, metric, 1.0, nullptr);
}

double LossNew(const ScoredBatch &batch, const LossWeights &weights,
               const Margins &margins) {
  return weights.ce * LossCe(batch) + weights.mm * LossMm(batch, margins.m1) +
         weights.pm * LossPm(batch, margins.m2);
}

double LossMem(const ScoredBatch &batch, std::span<const Vec> embeddings,
               std::span<const ContrastiveItem> items,
               std::span<const Vec> relations, const LossWeights &weights,
               const Margins &margins, Metric metric) {
  return LossNew(batch, weights, margins) +
         weights.con *
             LossCon(embeddings, items, relations, margins.m3, metric);
}

OutputLoss TrainingObjective::operator()(const std::vector<Vec> &outputs) const {
  const size_t n = targets.size();
  if (outputs.size() < n) {
    throw Error("fewer outputs than scored samples");
  }
  const std::span<const Vec> batch_outputs(outputs.data(), n);
  const ScoredBatch batch = ScoreBatch(batch_outputs, targets, relations,
                                       metric);
  ScoreGrads score_grads(n, std::vector<double>(relations.size(), 0.0));

  OutputLoss loss;
  if (weights.ce != 0.0) {
    loss.value += weights.ce * AccumulateCe(batch, weights.ce, &score_grads);
  }
  if (weights.mm != 0.0) {
    loss.value +=
        weights.mm * AccumulateMm(batch, margins.m1, weights.mm, &score_grads);
  }
  if (weights.pm != 0.0) {
    loss.value +=
        weights.pm * AccumulatePm(batch, margins.m2, weights.pm, &score_grads);
  }

  loss.output_grads.reserve(outputs.size());
  for (const auto &out : outputs) loss.output_grads.push_back(Vec::Zero(out.size()));
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < relations.size(); ++j) {
      const double d = score_grads[i][j];
      if (d == 0.0) continue;
      loss.output_grads[i] += d * SimilarityGrad(outputs[i], relations[j], metric);
    }
  }
  if (!items.empty() && weights.con != 0.0) {
    loss.value += weights.con * AccumulateCon(outputs, items, relations,
                                              margins.m3, metric, weights.con,
                                              &loss.output_grads);
  }
  return loss;
}

}  // namespace cfrl
