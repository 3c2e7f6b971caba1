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

#include "cfrl/benchmark.h"

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

namespace cfrl {

namespace {

std::ifstream OpenInput(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream OpenOutput(const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

void AddSample(RelationGroups &groups, Sample sample,
               const std::set<std::string> &filtered, int64_t line) {
  if (sample.relation.empty()) {
    throw ParseError("record has no relation", line);
  }
  if (filtered.count(sample.relation)) return;
  try {
    ValidateSpans(sample);
  } catch (const ValidationError &e) {
    throw ValidationError("line " + std::to_string(line) + ": " + e.what());
  }
  groups[sample.relation].push_back(std::move(sample));
}

RelationGroups LoadJsonLines(const std::filesystem::path &path,
                             const std::set<std::string> &filtered) {
  std::ifstream in = OpenInput(path);
  RelationGroups groups;
  std::string line;
  int64_t line_no = 0;
  int64_t record_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    Sample sample;
    try {
      sample = SampleFromJson(nlohmann::json::parse(line));
    } catch (const std::exception &e) {
      throw ParseError(e.what(), line_no);
    }
    sample.id = record_no++;
    sample.source = Source::kOriginal;
    AddSample(groups, std::move(sample), filtered, line_no);
  }
  return groups;
}

// FewRel stores the mention as a list of token-position lists; the first
// occurrence defines the span.
Span FewRelSpan(const nlohmann::json &mention) {
  const auto &positions = mention.at(2).at(0);
  if (!positions.is_array() || positions.empty()) {
    throw Error("empty FewRel mention positions");
  }
  int lo = positions[0].get<int>();
  int hi = lo;
  for (const auto &p : positions) {
    lo = std::min(lo, p.get<int>());
    hi = std::max(hi, p.get<int>());
  }
  return Span{lo, hi};
}

RelationGroups LoadFewRel(const std::filesystem::path &path,
                          const std::set<std::string> &filtered) {
  std::ifstream in = OpenInput(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const std::exception &e) {
    throw ParseError(e.what(), 0);
  }
  RelationGroups groups;
  int64_t record_no = 0;
  for (const auto &[relation, records] : doc.items()) {
    for (const auto &record : records) {
      Sample sample;
      try {
        sample.tokens = record.at("tokens").get<std::vector<std::string>>();
        sample.head = FewRelSpan(record.at("h"));
        sample.tail = FewRelSpan(record.at("t"));
      } catch (const std::exception &e) {
        throw ParseError(relation + " record " + std::to_string(record_no) +
                             ": " + e.what(),
                         0);
      }
      sample.relation = relation;
      sample.id = record_no++;
      AddSample(groups, std::move(sample), filtered, 0);
    }
  }
  return groups;
}

RelationGroups LoadTacred(const std::filesystem::path &path,
                          const std::set<std::string> &filtered) {
  std::ifstream in = OpenInput(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const std::exception &e) {
    throw ParseError(e.what(), 0);
  }
  RelationGroups groups;
  int64_t record_no = 0;
  for (const auto &record : doc) {
    Sample sample;
    try {
      sample.tokens = record.at("token").get<std::vector<std::string>>();
      sample.head = {record.at("subj_start").get<int>(),
                     record.at("subj_end").get<int>()};
      sample.tail = {record.at("obj_start").get<int>(),
                     record.at("obj_end").get<int>()};
      sample.relation = record.at("relation").get<std::string>();
    } catch (const std::exception &e) {
      throw ParseError("record " + std::to_string(record_no) + ": " + e.what(),
                       0);
    }
    sample.id = record_no++;
    AddSample(groups, std::move(sample), filtered, 0);
  }
  return groups;
}

}  // namespace

DatasetFormat ParseDatasetFormat(const std::string &name) {
  if (name == "jsonl") return DatasetFormat::kJsonLines;
  if (name == "fewrel") return DatasetFormat::kFewRel;
  if (name == "tacred") return DatasetFormat::kTacred;
  throw Error("unknown dataset format '" + name + "'");
}

RelationGroups LoadDataset(const std::filesystem::path &path,
                           DatasetFormat format,
                           const std::vector<std::string> &filter_relations) {
  std::set<std::string> filtered(filter_relations.begin(),
                                 filter_relations.end());
  switch (format) {
    case DatasetFormat::kJsonLines:
      return LoadJsonLines(path, filtered);
    case DatasetFormat::kFewRel:
      return LoadFewRel(path, filtered);
    case DatasetFormat::kTacred:
      return LoadTacred(path, filtered);
  }
  throw Error("unsupported dataset format");
}

const Task &TaskSequence::task(int k) const {
  if (k < 1 || k > size()) {
    throw RangeError("task index " + std::to_string(k) + " outside [1, " +
                     std::to_string(size()) + "]");
  }
  return tasks[k - 1];
}

TaskSequence BuildTaskSequence(const RelationGroups &groups,
                               const TaskSequenceOptions &options) {
  if (options.n_tasks < 1 || options.n_way < 1 || options.k_shot < 1 ||
      options.base_samples_per_relation < 1) {
    throw ConstructionError("task counts, n_way, k_shot and base_n must be >= 1");
  }
  if (options.valid_fraction < 0.0 || options.valid_fraction >= 1.0) {
    throw ConstructionError("valid_fraction must lie in [0, 1)");
  }
  const int n_relations = static_cast<int>(groups.size());
  const int later = (options.n_tasks - 1) * options.n_way;
  const int first = n_relations - later;
  if (first < 1) {
    throw ConstructionError(
        "need at least " + std::to_string(later + 1) + " relations for " +
        std::to_string(options.n_tasks) + " tasks of " +
        std::to_string(options.n_way) + "-way, have " +
        std::to_string(n_relations) + " (deficit " +
        std::to_string(later + 1 - n_relations) + ")");
  }

  std::mt19937_64 rng(options.seed);
  std::vector<std::string> relations;
  relations.reserve(groups.size());
  for (const auto &entry : groups) relations.push_back(entry.first);
  std::shuffle(relations.begin(), relations.end(), rng);

  TaskSequence sequence;
  sequence.n_way = options.n_way;
  sequence.k_shot = options.k_shot;
  sequence.base_samples_per_relation = options.base_samples_per_relation;
  sequence.seed = options.seed;

  size_t next = 0;
  for (int t = 1; t <= options.n_tasks; ++t) {
    Task task;
    task.index = t;
    const int width = t == 1 ? first : options.n_way;
    const int n_train = t == 1 ? options.base_samples_per_relation
                               : options.k_shot;
    for (int r = 0; r < width; ++r) {
      const std::string &relation = relations[next++];
      std::vector<Sample> pool = groups.at(relation);
      const int available = static_cast<int>(pool.size());
      if (available < n_train + 1) {
        throw ConstructionError(
            "relation '" + relation + "' has " + std::to_string(available) +
            " samples, task " + std::to_string(t) + " needs " +
            std::to_string(n_train + 1) + " (deficit " +
            std::to_string(n_train + 1 - available) + ")");
      }
      std::shuffle(pool.begin(), pool.end(), rng);
      const int remaining = available - n_train;
      const int n_valid = static_cast<int>(remaining * options.valid_fraction);
      auto it = pool.begin();
      task.train.insert(task.train.end(), it, it + n_train);
      it += n_train;
      task.valid.insert(task.valid.end(), it, it + n_valid);
      it += n_valid;
      task.test.insert(task.test.end(), it, pool.end());
      task.relations.push_back(relation);
    }
    sequence.tasks.push_back(std::move(task));
  }
  return sequence;
}

std::vector<Sample> CumulativeTestSet(const TaskSequence &sequence, int k) {
  if (k < 1 || k > sequence.size()) {
    throw RangeError("step " + std::to_string(k) + " outside [1, " +
                     std::to_string(sequence.size()) + "]");
  }
  std::vector<Sample> out;
  for (int i = 0; i < k; ++i) {
    const auto &test = sequence.tasks[i].test;
    out.insert(out.end(), test.begin(), test.end());
  }
  return out;
}

void WriteSamples(const std::vector<Sample> &samples,
                  const std::filesystem::path &path) {
  std::ofstream out = OpenOutput(path);
  for (const auto &s : samples) out << SampleToJson(s).dump() << '\n';
}

namespace {

std::string TaskFileName(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "task_%02d.jsonl", index);
  return buf;
}

}  // namespace

void WriteTaskSequence(const TaskSequence &sequence,
                       const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest;
  manifest["seed"] = sequence.seed;
  manifest["n_way"] = sequence.n_way;
  manifest["k_shot"] = sequence.k_shot;
  manifest["base_samples_per_relation"] = sequence.base_samples_per_relation;
  manifest["tasks"] = nlohmann::json::array();
  for (const auto &task : sequence.tasks) {
    const std::string file = TaskFileName(task.index);
    std::ofstream out = OpenOutput(dir / file);
    auto emit = [&out](const std::vector<Sample> &split, const char *name) {
      for (const auto &s : split) {
        nlohmann::json record = SampleToJson(s);
        record["split"] = name;
        out << record.dump() << '\n';
      }
    };
    emit(task.train, "train");
    emit(task.valid, "valid");
    emit(task.test, "test");
    manifest["tasks"].push_back({{"index", task.index},
                                 {"relations", task.relations},
                                 {"file", file},
                                 {"train", task.train.size()},
                                 {"valid", task.valid.size()},
                                 {"test", task.test.size()}});
  }
  std::ofstream out = OpenOutput(dir / "manifest.json");
  out << manifest.dump(2) << '\n';
}

TaskSequence ReadTaskSequence(const std::filesystem::path &dir) {
  std::ifstream in = OpenInput(dir / "manifest.json");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const std::exception &e) {
    throw ParseError(std::string("manifest.json: ") + e.what(), 0);
  }
  TaskSequence sequence;
  sequence.seed = manifest.at("seed").get<uint64_t>();
  sequence.n_way = manifest.at("n_way").get<int>();
  sequence.k_shot = manifest.at("k_shot").get<int>();
  sequence.base_samples_per_relation =
      manifest.at("base_samples_per_relation").get<int>();
  for (const auto &entry : manifest.at("tasks")) {
    Task task;
    task.index = entry.at("index").get<int>();
    task.relations = entry.at("relations").get<std::vector<std::string>>();
    std::ifstream records = OpenInput(dir / entry.at("file").get<std::string>());
    std::string line;
    int64_t line_no = 0;
    while (std::getline(records, line)) {
      ++line_no;
      if (line.empty()) continue;
      nlohmann::json record;
      Sample sample;
      try {
        record = nlohmann::json::parse(line);
        sample = SampleFromJson(record);
      } catch (const std::exception &e) {
        throw ParseError(e.what(), line_no);
      }
      const std::string split = record.value("split", "");
      if (split == "train") {
        task.train.push_back(std::move(sample));
      } else if (split == "valid") {
        task.valid.push_back(std::move(sample));
      } else if (split == "test") {
        task.test.push_back(std::move(sample));
      } else {
        throw ParseError("unknown split '" + split + "'", line_no);
      }
    }
    sequence.tasks.push_back(std::move(task));
  }
  return sequence;
}

uint64_t Fnv1a(std::string_view data, uint64_t hash) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

Corpus::Corpus(std::vector<Sample> records) : records_(std::move(records)) {
  BuildIndex();
}

Corpus Corpus::Load(const std::filesystem::path &path) {
  std::ifstream in = OpenInput(path);
  Corpus corpus;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
    } catch (const std::exception &e) {
      throw ParseError(e.what(), line_no);
    }
    Sample sample;
    try {
      sample = SampleFromJson(record);
      ValidateSpans(sample);
    } catch (const std::exception &) {
      ++corpus.skipped_;
      continue;
    }
    sample.relation.clear();
    sample.id = static_cast<int64_t>(corpus.records_.size());
    corpus.records_.push_back(std::move(sample));
  }
  corpus.BuildIndex();
  return corpus;
}

void Corpus::BuildIndex() {
  pair_index_.clear();
  head_index_.clear();
  tail_index_.clear();
  for (size_t i = 0; i < records_.size(); ++i) {
    const std::string head = records_[i].HeadText();
    const std::string tail = records_[i].TailText();
    pair_index_[{head, tail}].push_back(i);
    head_index_[head].push_back(i);
    tail_index_[tail].push_back(i);
  }
}

namespace {

std::span<const size_t> Find(
    const std::map<std::string, std::vector<size_t>> &index,
    const std::string &key) {
  auto it = index.find(key);
  if (it == index.end()) return {};
  return it->second;
}

}  // namespace

std::span<const size_t> Corpus::Lookup(const std::string &head,
                                       const std::string &tail) const {
  auto it = pair_index_.find({head, tail});
  if (it == pair_index_.end()) return {};
  return it->second;
}

std::span<const size_t> Corpus::WithHead(const std::string &head) const {
  return Find(head_index_, head);
}

std::span<const size_t> Corpus::WithTail(const std::string &tail) const {
  return Find(tail_index_, tail);
}

uint64_t Corpus::Fingerprint() const {
  uint64_t hash = Fnv1a("corpus");
  for (const auto &record : records_) {
    hash = Fnv1a(SampleToJson(record).dump(), hash);
    hash = Fnv1a("\n", hash);
  }
  return hash;
}

}  // namespace cfrl
