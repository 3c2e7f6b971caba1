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

#include "cfrl/memory.h"

#include <cctype>
#include <fstream>

namespace cfrl {

void MemoryStore::Add(const std::string &relation, const Sample &exemplar,
                      int step) {
  if (index_.count(relation)) {
    throw ProtocolError("relation '" + relation + "' already has an exemplar");
  }
  if (exemplar.source != Source::kOriginal) {
    throw ProtocolError("augmented samples cannot enter memory");
  }
  if (exemplar.relation != relation) {
    throw ProtocolError("exemplar labeled '" + exemplar.relation +
                        "' stored under '" + relation + "'");
  }
  index_[relation] = entries_.size();
  entries_.push_back({relation, exemplar, step});
}

const Sample *MemoryStore::Find(const std::string &relation) const {
  auto it = index_.find(relation);
  return it == index_.end() ? nullptr : &entries_[it->second].exemplar;
}

void MemoryStore::Save(const std::filesystem::path &path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto &e : entries_) {
    nlohmann::json record = {{"relation", e.relation},
                             {"step", e.step},
                             {"sample", SampleToJson(e.exemplar)}};
    out << record.dump() << '\n';
  }
}

MemoryStore MemoryStore::Load(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  MemoryStore store;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const auto record = nlohmann::json::parse(line);
      store.Add(record.at("relation").get<std::string>(),
                SampleFromJson(record.at("sample")),
                record.at("step").get<int>());
    } catch (const ProtocolError &) {
      throw;
    } catch (const std::exception &e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return store;
}

int RelationTable::Add(const std::string &relation,
                       std::vector<std::string> name, Vec vector) {
  if (index_.count(relation)) {
    throw ProtocolError("relation '" + relation + "' is already known");
  }
  if (!vector.allFinite()) {
    throw NumericError("non-finite relation embedding for '" + relation + "'",
                       vector.sum());
  }
  const int i = static_cast<int>(relations_.size());
  index_[relation] = i;
  relations_.push_back(relation);
  names_.push_back(std::move(name));
  vectors_.push_back(std::move(vector));
  return i;
}

int RelationTable::Index(const std::string &relation) const {
  auto it = index_.find(relation);
  return it == index_.end() ? -1 : it->second;
}

void RelationTable::SetVector(int i, Vec vector) {
  if (!vector.allFinite()) {
    throw NumericError("non-finite relation embedding for '" + relations_[i] +
                           "'",
                       vector.sum());
  }
  vectors_[i] = std::move(vector);
}

std::vector<std::string> RelationNameTokens(const std::string &relation) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : relation) {
    if (c == '_' || c == ':' || c == '/' || c == '-' || c == '.' ||
        std::isspace(static_cast<unsigned char>(c))) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  if (tokens.empty()) tokens.push_back(relation);
  return tokens;
}

Vec Centroid(std::span<const Sample> samples, const Encoder &encoder) {
  if (samples.empty()) throw Error("centroid of an empty sample list");
  Vec sum = Vec::Zero(encoder.output_dim());
  for (const auto &s : samples) sum += encoder.Encode(s);
  return sum / static_cast<double>(samples.size());
}

size_t SelectExemplar(std::span<const Sample> samples, const Encoder &encoder,
                      Metric metric) {
  if (samples.empty()) throw Error("cannot select from an empty sample list");
  for (const auto &s : samples) {
    if (s.source != Source::kOriginal) {
      throw ProtocolError("exemplars must come from original training data");
    }
    if (s.relation != samples.front().relation) {
      throw ProtocolError("exemplar candidates span several relations");
    }
  }
  std::vector<Vec> embeddings;
  embeddings.reserve(samples.size());
  Vec centroid = Vec::Zero(encoder.output_dim());
  for (const auto &s : samples) {
    embeddings.push_back(encoder.Encode(s));
    centroid += embeddings.back();
  }
  centroid /= static_cast<double>(samples.size());

  // A zero centroid has no direction; every candidate is equally close.
  if (metric == Metric::kCosine && centroid.norm() == 0.0) return 0;
  size_t best = 0;
  double best_distance = 0.0;
  for (size_t i = 0; i < embeddings.size(); ++i) {
    const double distance =
        metric == Metric::kCosine
            ? 1.0 - Similarity(embeddings[i], centroid, metric)
            : (embeddings[i] - centroid).norm();
    if (i == 0 || distance < best_distance) {
      best = i;
      best_distance = distance;
    }
  }
  return best;
}

void RefreshRelationEmbeddings(
    RelationTable &table,
    const std::map<std::string, std::vector<Sample>> &memory,
    const Encoder &encoder) {
  for (int i = 0; i < static_cast<int>(table.size()); ++i) {
    Vec name = encoder.EncodeRelationName(table.name(i));
    auto it = memory.find(table.relation(i));
    if (it == memory.end() || it->second.empty()) {
      table.SetVector(i, std::move(name));
      continue;
    }
    table.SetVector(i, 0.5 * (name + Centroid(it->second, encoder)));
  }
}

void RefreshRelationEmbeddings(RelationTable &table, const MemoryStore &store,
                               const Encoder &encoder) {
  std::map<std::string, std::vector<Sample>> memory;
  for (const auto &e : store.entries()) memory[e.relation] = {e.exemplar};
  RefreshRelationEmbeddings(table, memory, encoder);
}

Sample ReplaceEntity(const Sample &target, const Sample &donor,
                     bool replace_head) {
  const Span &old_span = replace_head ? target.head : target.tail;
  const Span &donor_span = replace_head ? donor.head : donor.tail;
  Sample out = target;
  out.tokens.assign(target.tokens.begin(),
                    target.tokens.begin() + old_span.start);
  out.tokens.insert(out.tokens.end(), donor.tokens.begin() + donor_span.start,
                    donor.tokens.begin() + donor_span.end + 1);
  out.tokens.insert(out.tokens.end(), target.tokens.begin() + old_span.end + 1,
                    target.tokens.end());
  const int delta = donor_span.length() - old_span.length();
  Span replaced{old_span.start, old_span.start + donor_span.length() - 1};
  Span other = replace_head ? target.tail : target.head;
  if (other.start > old_span.end) {
    other.start += delta;
    other.end += delta;
  }
  out.head = replace_head ? replaced : other;
  out.tail = replace_head ? other : replaced;
  return out;
}

std::vector<std::vector<Sample>> GenerateHardNegatives(
    std::span<const Sample> batch, std::span<const size_t> memory_positions,
    int n_neg, std::mt19937_64 &rng) {
  if (batch.empty()) throw Error("hard negatives need a non-empty batch");
  std::vector<std::vector<Sample>> negatives(memory_positions.size());
  if (batch.size() < 2 || n_neg <= 0) return negatives;
  std::uniform_int_distribution<size_t> pick(0, batch.size() - 2);
  std::bernoulli_distribution coin(0.5);
  for (size_t m = 0; m < memory_positions.size(); ++m) {
    const size_t pos = memory_positions[m];
    const Sample &anchor = batch[pos];
    for (int j = 0; j < n_neg; ++j) {
      size_t partner = pick(rng);
      if (partner >= pos) ++partner;
      const Sample &donor = batch[partner];
      bool head = coin(rng);
      const bool same_head = donor.HeadText() == anchor.HeadText();
      const bool same_tail = donor.TailText() == anchor.TailText();
      if (same_head && same_tail) continue;
      if (head && same_head) head = false;
      if (!head && same_tail) head = true;
      negatives[m].push_back(ReplaceEntity(anchor, donor, head));
    }
  }
  return negatives;
}

}  // namespace cfrl
