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

#include "cfrl/synthetic.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

namespace cfrl {

namespace {

std::string Name(const char *prefix, int i, const char *suffix = "") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s%03d%s", prefix, i, suffix);
  return buf;
}

std::string TriggerWord(int relation, int j) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "w%03d%c", relation, 'a' + j % 26);
  return j < 26 ? std::string(buf) : std::string(buf) + std::to_string(j / 26);
}

std::string RelationId(int relation) {
  return Name("rel", relation) + "_" + TriggerWord(relation, 0) + "_" +
         TriggerWord(relation, 1);
}

std::vector<std::string> EntityTokens(int entity) {
  if (entity % 3 == 0) return {Name("E", entity), Name("E", entity, "x")};
  return {Name("E", entity)};
}

class Generator {
 public:
  explicit Generator(const SyntheticOptions &o) : o_(o), rng_(o.seed) {}

  Sample Sentence(int relation, int head, int tail) {
    std::uniform_int_distribution<int> filler(0, o_.n_fillers - 1);
    std::uniform_int_distribution<int> trigger(0,
                                               o_.triggers_per_relation - 1);
    std::uniform_int_distribution<int> other(0, o_.n_relations - 1);
    std::bernoulli_distribution noise(o_.trigger_noise);
    std::bernoulli_distribution inverted(0.3);
    auto fillers = [&](std::vector<std::string> &out) {
      const int n =
          std::uniform_int_distribution<int>(0, o_.max_filler_run)(rng_);
      for (int i = 0; i < n; ++i) out.push_back(Name("f", filler(rng_)));
    };

    const bool tail_first = inverted(rng_);
    const auto first = EntityTokens(tail_first ? tail : head);
    const auto second = EntityTokens(tail_first ? head : tail);
    Sample s;
    fillers(s.tokens);
    const Span first_span{static_cast<int>(s.tokens.size()),
                          static_cast<int>(s.tokens.size() + first.size()) - 1};
    s.tokens.insert(s.tokens.end(), first.begin(), first.end());
    fillers(s.tokens);
    for (int i = 0; i < o_.triggers_per_sentence; ++i) {
      const int r = noise(rng_) ? other(rng_) : relation;
      s.tokens.push_back(TriggerWord(r, trigger(rng_)));
    }
    fillers(s.tokens);
    const Span second_span{
        static_cast<int>(s.tokens.size()),
        static_cast<int>(s.tokens.size() + second.size()) - 1};
    s.tokens.insert(s.tokens.end(), second.begin(), second.end());
    fillers(s.tokens);
    s.head = tail_first ? second_span : first_span;
    s.tail = tail_first ? first_span : second_span;
    return s;
  }

  WordVectors Vectors() {
    const int d = o_.embedding_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::normal_distribution<double> normal(0.0, 1.0);
    auto draw = [&](const std::vector<double> &center, double spread) {
      std::vector<double> v(d);
      for (int c = 0; c < d; ++c) {
        v[c] = (center.empty() ? 0.0 : center[c]) + spread * normal(rng_) * scale;
      }
      return v;
    };
    WordVectors out;
    for (int r = 0; r < o_.n_relations; ++r) {
      const std::vector<double> center = draw({}, 1.0);
      out[Name("rel", r)] = draw(center, o_.cluster_spread);
      for (int j = 0; j < o_.triggers_per_relation; ++j) {
        out[TriggerWord(r, j)] = draw(center, o_.cluster_spread);
      }
    }
    for (int f = 0; f < o_.n_fillers; ++f) out[Name("f", f)] = draw({}, 1.0);
    for (int e = 0; e < o_.n_entities; ++e) {
      for (const auto &t : EntityTokens(e)) out[t] = draw({}, 1.0);
    }
    return out;
  }

  std::mt19937_64 &rng() { return rng_; }

 private:
  const SyntheticOptions &o_;
  std::mt19937_64 rng_;
};

}  // namespace

SyntheticData GenerateSynthetic(const SyntheticOptions &o) {
  if (o.n_relations < 2 || o.samples_per_relation < 1 ||
      o.triggers_per_relation < 1 || o.n_fillers < 1 || o.n_entities < 2) {
    throw Error("synthetic options out of range");
  }
  const long long pairs_needed =
      static_cast<long long>(o.n_relations) * o.samples_per_relation;
  if (pairs_needed > static_cast<long long>(o.n_entities) *
                         (o.n_entities - 1) / 2) {
    throw Error("too few entities for unique entity pairs");
  }
  Generator gen(o);
  SyntheticData data;
  data.word_vectors = gen.Vectors();

  std::uniform_int_distribution<int> entity(0, o.n_entities - 1);
  std::uniform_int_distribution<int> any_relation(0, o.n_relations - 1);
  std::bernoulli_distribution distractor(o.distractor_rate);
  std::set<std::pair<int, int>> used;
  std::vector<Sample> corpus;
  auto add_corpus = [&](Sample s, int relation, bool planted) {
    s.id = static_cast<int64_t>(corpus.size());
    corpus.push_back(std::move(s));
    data.corpus_relation.push_back(RelationId(relation));
    data.corpus_planted.push_back(planted);
  };

  int64_t id = 0;
  for (int r = 0; r < o.n_relations; ++r) {
    auto &group = data.dataset[RelationId(r)];
    for (int i = 0; i < o.samples_per_relation; ++i) {
      int h = 0;
      int t = 0;
      do {
        h = entity(gen.rng());
        t = entity(gen.rng());
      } while (h == t || used.count({h, t}));
      used.insert({h, t});
      Sample s = gen.Sentence(r, h, t);
      s.relation = RelationId(r);
      s.id = id++;
      group.push_back(std::move(s));
      for (int p = 0; p < o.paraphrases_per_sample; ++p) {
        add_corpus(gen.Sentence(r, h, t), r, true);
      }
      if (distractor(gen.rng())) {
        int other = any_relation(gen.rng());
        if (other == r) other = (other + 1) % o.n_relations;
        add_corpus(gen.Sentence(other, h, t), other, false);
      }
    }
  }
  for (int b = 0; b < o.background_records; ++b) {
    int h = 0;
    int t = 0;
    do {
      h = entity(gen.rng());
      t = entity(gen.rng());
    } while (h == t);
    const int r = any_relation(gen.rng());
    add_corpus(gen.Sentence(r, h, t), r, false);
  }
  data.corpus = Corpus(std::move(corpus));
  return data;
}

void WriteSynthetic(const SyntheticData &data,
                    const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  std::vector<Sample> all;
  for (const auto &[relation, samples] : data.dataset) {
    all.insert(all.end(), samples.begin(), samples.end());
  }
  WriteSamples(all, dir / "dataset.jsonl");
  WriteSamples(data.corpus.records(), dir / "corpus.jsonl");
  SaveWordVectors(data.word_vectors, dir / "word_vectors.txt");
  std::ofstream truth(dir / "corpus_truth.jsonl");
  if (!truth) throw Error("cannot write corpus_truth.jsonl");
  for (size_t i = 0; i < data.corpus_relation.size(); ++i) {
    truth << nlohmann::json{{"index", i},
                            {"relation", data.corpus_relation[i]},
                            {"planted", static_cast<bool>(
                                            data.corpus_planted[i])}}
                 .dump()
          << '\n';
  }
}

}  // namespace cfrl
