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

#include "cfrl/augmentation.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <unordered_map>

namespace cfrl {

double Sigma(const Vec &a, const Vec &b) {
  return 1.0 / (1.0 + std::exp(-a.dot(b)));
}

Vec SimilarityModel::Represent(const Sample &sample) const {
  Vec out = encoder_.Encode(sample);
  const double norm = out.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw NumericError("similarity model produced a degenerate vector", norm);
  }
  return out / norm;
}

double SimilarityModel::Sigma(const Sample &a, const Sample &b) const {
  return cfrl::Sigma(Represent(a), Represent(b));
}

PairBatchStream::PairBatchStream(const Corpus &corpus, size_t batch_size,
                                 uint64_t seed)
    : corpus_(&corpus), batch_size_(batch_size), rng_(seed) {
  if (batch_size == 0) throw Error("pair batch size must be positive");
  const auto &records = corpus.records();
  hard_negatives_.resize(records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    const std::string head = records[i].HeadText();
    const std::string tail = records[i].TailText();
    for (size_t j : corpus.WithHead(head)) {
      if (records[j].TailText() != tail) hard_negatives_[i].push_back(j);
    }
    for (size_t j : corpus.WithTail(tail)) {
      if (records[j].HeadText() != head) hard_negatives_[i].push_back(j);
    }
  }
  for (const auto &[pair, members] : corpus.pair_index()) {
    if (members.size() < 2) continue;
    // Members of a group share both entities, so they share negatives too.
    if (hard_negatives_[members.front()].empty()) continue;
    groups_.push_back(members);
  }
}

PairBatch PairBatchStream::Next() {
  PairBatch batch;
  if (empty()) return batch;
  std::uniform_int_distribution<size_t> pick_group(0, groups_.size() - 1);
  while (batch.positives.size() < batch_size_) {
    const auto &group = groups_[pick_group(rng_)];
    std::uniform_int_distribution<size_t> pick_member(0, group.size() - 1);
    const size_t a = pick_member(rng_);
    size_t b = pick_member(rng_);
    while (b == a) b = pick_member(rng_);
    const size_t first = group[a];
    const auto &negatives = hard_negatives_[first];
    std::uniform_int_distribution<size_t> pick_negative(0,
                                                        negatives.size() - 1);
    batch.positives.push_back({first, group[b]});
    batch.negatives.push_back({first, negatives[pick_negative(rng_)]});
  }
  return batch;
}

std::vector<PairBatch> BuildPairBatches(const Corpus &corpus,
                                        size_t n_batches, size_t batch_size,
                                        uint64_t seed) {
  PairBatchStream stream(corpus, batch_size, seed);
  std::vector<PairBatch> batches;
  if (stream.empty()) return batches;
  for (size_t i = 0; i < n_batches; ++i) batches.push_back(stream.Next());
  return batches;
}

namespace {

// -log sigma(z) and -log(1 - sigma(z)) without overflow.
double NegLogSigmoid(double z) {
  return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

struct PairObjective {
  // Positions into the output list.
  std::vector<std::pair<size_t, size_t>> positives;
  std::vector<std::pair<size_t, size_t>> negatives;

  OutputLoss operator()(const std::vector<Vec> &outputs) const {
    std::vector<Vec> unit;
    std::vector<double> norms;
    for (const auto &y : outputs) {
      const double n = y.norm();
      if (!(n > 0.0)) {
        throw NumericError("similarity model produced a zero vector", n);
      }
      norms.push_back(n);
      unit.push_back(y / n);
    }
    OutputLoss loss;
    std::vector<Vec> d_unit(outputs.size(), Vec::Zero(outputs[0].size()));
    auto add = [&](size_t a, size_t b, bool positive) {
      const double z = unit[a].dot(unit[b]);
      const double sig = 1.0 / (1.0 + std::exp(-z));
      loss.value += positive ? NegLogSigmoid(z) : NegLogSigmoid(-z);
      const double dz = positive ? sig - 1.0 : sig;
      d_unit[a] += dz * unit[b];
      d_unit[b] += dz * unit[a];
    };
    for (const auto &[a, b] : positives) add(a, b, true);
    for (const auto &[a, b] : negatives) add(a, b, false);
    loss.output_grads.reserve(outputs.size());
    for (size_t i = 0; i < outputs.size(); ++i) {
      const Vec &s = unit[i];
      loss.output_grads.push_back((d_unit[i] - s * s.dot(d_unit[i])) /
                                  norms[i]);
    }
    return loss;
  }
};

// Encodes each distinct record of the batch once.
std::pair<std::vector<EncoderInput>, PairObjective> PrepareBatch(
    const SimilarityModel &model, const Corpus &corpus,
    const PairBatch &batch) {
  std::map<size_t, size_t> slot;
  std::vector<EncoderInput> inputs;
  auto position = [&](size_t record) {
    auto [it, inserted] = slot.emplace(record, inputs.size());
    if (inserted) {
      inputs.push_back(model.encoder().Prepare(corpus.records()[record]));
    }
    return it->second;
  };
  PairObjective objective;
  for (const auto &p : batch.positives) {
    objective.positives.emplace_back(position(p.first), position(p.second));
  }
  for (const auto &p : batch.negatives) {
    objective.negatives.emplace_back(position(p.first), position(p.second));
  }
  return {std::move(inputs), std::move(objective)};
}

}  // namespace

double PairLoss(const SimilarityModel &model, const Corpus &corpus,
                const PairBatch &batch) {
  auto [inputs, objective] = PrepareBatch(model, corpus, batch);
  if (inputs.empty()) return 0.0;
  return EvaluateObjective(model.encoder().params(), inputs, objective);
}

PretrainReport PretrainSimilarity(SimilarityModel &model, const Corpus &corpus,
                                  std::span<const PairBatch> batches,
                                  int steps, double learning_rate) {
  PretrainReport report;
  if (steps <= 0) return report;
  if (batches.empty()) throw Error("similarity pretraining needs pair batches");
  for (int step = 0; step < steps; ++step) {
    const PairBatch &batch = batches[step % batches.size()];
    auto [inputs, objective] = PrepareBatch(model, corpus, batch);
    if (inputs.empty()) continue;
    LossAndGradient lg = model.encoder().Gradient(inputs, objective);
    model.mutable_encoder().ApplyGradient(lg.gradient, learning_rate);
    report.losses.push_back(lg.loss);
  }
  return report;
}

CorpusVectors CorpusVectors::Compute(const SimilarityModel &model,
                                     const Corpus &corpus) {
  CorpusVectors out;
  out.corpus_hash_ = corpus.Fingerprint();
  out.model_hash_ = model.encoder().Fingerprint();
  out.vectors_ = Mat::Zero(static_cast<Eigen::Index>(corpus.size()),
                           model.encoder().output_dim());
  for (size_t i = 0; i < corpus.size(); ++i) {
    out.vectors_.row(static_cast<Eigen::Index>(i)) =
        model.Represent(corpus.records()[i]).transpose();
  }
  return out;
}

namespace {

constexpr char kVectorMagic[8] = {'C', 'F', 'R', 'L', 'V', 'E', 'C', '1'};

}  // namespace

void CorpusVectors::Save(const std::filesystem::path &path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const uint64_t header[4] = {corpus_hash_, model_hash_,
                              static_cast<uint64_t>(vectors_.rows()),
                              static_cast<uint64_t>(vectors_.cols())};
  out.write(kVectorMagic, sizeof(kVectorMagic));
  out.write(reinterpret_cast<const char *>(header), sizeof(header));
  // Row-major on disk.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>
      rows = vectors_;
  out.write(reinterpret_cast<const char *>(rows.data()),
            static_cast<std::streamsize>(rows.size() * sizeof(double)));
  if (!out) throw Error("write failed for " + path.string());
}

CorpusVectors CorpusVectors::Load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  uint64_t header[4];
  in.read(magic, sizeof(magic));
  in.read(reinterpret_cast<char *>(header), sizeof(header));
  if (!in || std::memcmp(magic, kVectorMagic, sizeof(magic)) != 0) {
    throw ParseError(path.string() + " is not a corpus vector cache", 0);
  }
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(
      static_cast<Eigen::Index>(header[2]),
      static_cast<Eigen::Index>(header[3]));
  in.read(reinterpret_cast<char *>(rows.data()),
          static_cast<std::streamsize>(rows.size() * sizeof(double)));
  if (!in) throw ParseError("truncated corpus vector cache", 0);
  CorpusVectors out;
  out.corpus_hash_ = header[0];
  out.model_hash_ = header[1];
  out.vectors_ = rows;
  return out;
}

CorpusVectors CorpusVectors::LoadOrCompute(
    const std::filesystem::path &cache_file, const SimilarityModel &model,
    const Corpus &corpus) {
  if (std::filesystem::exists(cache_file)) {
    CorpusVectors cached = Load(cache_file);
    if (cached.corpus_hash_ == corpus.Fingerprint() &&
        cached.model_hash_ == model.encoder().Fingerprint()) {
      return cached;
    }
  }
  CorpusVectors fresh = Compute(model, corpus);
  fresh.Save(cache_file);
  return fresh;
}

std::vector<SearchHit> SimilaritySearchTopK(const Vec &query,
                                            const CorpusVectors &vectors,
                                            size_t k) {
  if (k == 0) throw Error("top-K search needs K >= 1");
  const Vec scores = vectors.vectors() * query;
  std::vector<SearchHit> hits(vectors.size());
  for (size_t i = 0; i < hits.size(); ++i) {
    hits[i] = {i, scores[static_cast<Eigen::Index>(i)]};
  }
  const size_t keep = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + keep, hits.end(),
                    [](const SearchHit &a, const SearchHit &b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.index < b.index;
                    });
  hits.resize(keep);
  return hits;
}

std::vector<size_t> EntityMatch(const Corpus &corpus, const Sample &query) {
  const auto found = corpus.Lookup(query.HeadText(), query.TailText());
  return {found.begin(), found.end()};
}

namespace {

AugmentedSample Relabel(const Corpus &corpus, size_t index,
                        const Sample &query, MatchedBy matched_by,
                        double score) {
  AugmentedSample out;
  out.sample = corpus.records()[index];
  out.sample.relation = query.relation;
  out.sample.source = Source::kAugmented;
  out.sample.id = static_cast<int64_t>(index);
  out.matched_by = matched_by;
  out.score = score;
  out.corpus_index = index;
  return out;
}

}  // namespace

std::vector<AugmentedSample> FilterByThreshold(
    const SimilarityModel &model, const Sample &query, const Corpus &corpus,
    std::span<const size_t> candidates, double alpha) {
  std::vector<AugmentedSample> kept;
  if (candidates.empty()) return kept;
  const Vec q = model.Represent(query);
  for (size_t index : candidates) {
    const double score = Sigma(q, model.Represent(corpus.records()[index]));
    if (score > alpha) {
      kept.push_back(Relabel(corpus, index, query, MatchedBy::kEntity, score));
    }
  }
  return kept;
}

std::vector<AugmentedSample> SearchSimilar(const SimilarityModel &model,
                                           const Sample &query,
                                           const Corpus &corpus,
                                           const CorpusVectors &vectors,
                                           size_t k) {
  std::vector<AugmentedSample> out;
  if (corpus.empty()) return out;
  // Hits are ranked by dot product but scored as sigma so that they compare
  // with entity matches when duplicates are resolved.
  for (const auto &hit :
       SimilaritySearchTopK(model.Represent(query), vectors, k)) {
    const double sigma = 1.0 / (1.0 + std::exp(-hit.score));
    out.push_back(
        Relabel(corpus, hit.index, query, MatchedBy::kSearch, sigma));
  }
  return out;
}

AugmentationResult AugmentTask(const Task &task, const Corpus &corpus,
                               const SimilarityModel &model,
                               const CorpusVectors &vectors, double alpha,
                               size_t k) {
  if (task.index <= 1) {
    throw ProtocolError("the initial task is not augmented");
  }
  AugmentationResult result;
  result.expanded = task.train;
  if (corpus.empty()) return result;
  if (vectors.size() != corpus.size()) {
    throw Error("corpus vectors do not match the corpus");
  }

  std::map<size_t, AugmentedSample> best;
  for (size_t q = 0; q < task.train.size(); ++q) {
    const Sample &query = task.train[q];
    const std::vector<size_t> matches = EntityMatch(corpus, query);
    std::vector<AugmentedSample> picked;
    if (!matches.empty()) {
      ++result.entity_queries;
      picked = FilterByThreshold(model, query, corpus, matches, alpha);
    } else {
      ++result.search_queries;
      picked = SearchSimilar(model, query, corpus, vectors, k);
    }
    for (auto &candidate : picked) {
      candidate.query_index = q;
      auto [it, inserted] = best.emplace(candidate.corpus_index, candidate);
      if (inserted) continue;
      if (it->second.sample.relation == candidate.sample.relation) {
        ++result.duplicates_collapsed;
      } else {
        ++result.conflicts_resolved;
      }
      if (candidate.score > it->second.score) it->second = candidate;
    }
  }
  for (auto &[index, candidate] : best) {
    result.expanded.push_back(candidate.sample);
    result.added.push_back(std::move(candidate));
  }
  return result;
}

}  // namespace cfrl
