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

#ifndef CFRL_MEMORY_H_
#define CFRL_MEMORY_H_

#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfrl/encoder.h"
#include "cfrl/objectives.h"
#include "cfrl/sample.h"

namespace cfrl {

struct MemoryEntry {
  std::string relation;
  Sample exemplar;
  int step = 0;
};

// One exemplar per seen relation, in insertion order. Append-only.
class MemoryStore {
 public:
  // Throws ProtocolError if the relation already has an exemplar, the
  // sample is augmented, or its label differs from `relation`.
  void Add(const std::string &relation, const Sample &exemplar, int step);

  const Sample *Find(const std::string &relation) const;
  const std::vector<MemoryEntry> &entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

  // JSON lines: {"relation", "step", "sample"}.
  void Save(const std::filesystem::path &path) const;
  static MemoryStore Load(const std::filesystem::path &path);

 private:
  std::vector<MemoryEntry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

// Relation anchors r_i, ordered by the step at which each relation appeared.
class RelationTable {
 public:
  int Add(const std::string &relation, std::vector<std::string> name,
          Vec vector);

  // -1 when unknown.
  int Index(const std::string &relation) const;
  bool Contains(const std::string &relation) const {
    return Index(relation) >= 0;
  }

  const std::string &relation(int i) const { return relations_[i]; }
  const std::vector<std::string> &name(int i) const { return names_[i]; }
  const Vec &vector(int i) const { return vectors_[i]; }
  void SetVector(int i, Vec vector);

  const std::vector<std::string> &relations() const { return relations_; }
  const std::vector<Vec> &vectors() const { return vectors_; }
  size_t size() const { return relations_.size(); }
  bool empty() const { return relations_.empty(); }

 private:
  std::vector<std::string> relations_;
  std::vector<std::vector<std::string>> names_;
  std::vector<Vec> vectors_;
  std::unordered_map<std::string, int> index_;
};

// Splits an identifier such as "P17:country_of/citizenship" on underscores,
// colons, slashes, hyphens, dots and whitespace.
std::vector<std::string> RelationNameTokens(const std::string &relation);

// Mean encoder output over `samples`. Throws Error if empty.
Vec Centroid(std::span<const Sample> samples, const Encoder &encoder);

// Index of the sample closest to the centroid (1 - cos for cosine, L2
// otherwise); lowest index wins ties. Samples must be original (not
// augmented) and share one relation.
size_t SelectExemplar(std::span<const Sample> samples, const Encoder &encoder,
                      Metric metric);

// r_i <- (name(r_i) + mean(f(memory samples of r_i))) / 2. Relations without
// memory keep their name-only encoding.
void RefreshRelationEmbeddings(
    RelationTable &table,
    const std::map<std::string, std::vector<Sample>> &memory,
    const Encoder &encoder);
void RefreshRelationEmbeddings(RelationTable &table, const MemoryStore &store,
                               const Encoder &encoder);

// Copy of `target` with its head (or tail) mention replaced by the donor's
// head (or tail) tokens. The other span is shifted accordingly.
Sample ReplaceEntity(const Sample &target, const Sample &donor,
                     bool replace_head);

// For each batch position in `memory_positions`, draws `n_neg` partners
// uniformly (with replacement) from the other batch members and swaps in the
// partner's head or tail mention with a fair coin. Partners whose mention on
// both sides equals the memory sample's yield no negative.
std::vector<std::vector<Sample>> GenerateHardNegatives(
    std::span<const Sample> batch, std::span<const size_t> memory_positions,
    int n_neg, std::mt19937_64 &rng);

}  // namespace cfrl

#endif  // CFRL_MEMORY_H_
