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


#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "test_util.h"

#include "cfrl/augmentation.h"

namespace cfrl {
namespace {

using testing::HeadEncoder;
using testing::MakeSample;
using testing::TempDir;

Vec V2(double a, double b) { return (Vec(2) << a, b).finished(); }

Sample Pair(const std::string &head, const std::string &tail,
            const std::string &word = "z") {
  return MakeSample({head, word, tail}, {0, 0}, {2, 2});
}

double Logit(double p) { return std::log(p / (1.0 - p)); }

TEST_CASE("sigma of unit vectors") {
  Vec a = V2(1, 0);
  CHECK(Sigma(a, a) == doctest::Approx(0.7310585786).epsilon(1e-9));
  CHECK(Sigma(a, V2(0, 1)) == 0.5);
  CHECK(Sigma(a, V2(-1, 0)) == doctest::Approx(0.2689414214).epsilon(1e-9));
}

TEST_CASE("sigma is symmetric and bounded on random pairs") {
  std::mt19937_64 rng(5);
  Vocabulary vocab;
  for (int i = 0; i < 30; ++i) vocab.Add("w" + std::to_string(i));
  SimilarityModel model(Encoder::Create(vocab, 4, 6, 3));
  std::uniform_int_distribution<int> w(0, 29);
  auto sentence = [&] {
    return MakeSample({"w" + std::to_string(w(rng)), "w" + std::to_string(w(rng)),
                       "w" + std::to_string(w(rng))},
                      {0, 0}, {2, 2});
  };
  for (int i = 0; i < 1000; ++i) {
    Sample a = sentence(), b = sentence();
    double ab = model.Sigma(a, b), ba = model.Sigma(b, a);
    CHECK(std::abs(ab - ba) <= 1e-12);
    CHECK(ab > 1.0 / (1.0 + std::exp(1.0)) - 1e-12);
    CHECK(ab < 1.0 / (1.0 + std::exp(-1.0)) + 1e-12);
  }
}

TEST_CASE("unique entity pairs give no pair batches") {
  Corpus c({Pair("A", "B"), Pair("A", "C"), Pair("D", "B")});
  PairBatchStream stream(c, 4, 1);
  CHECK(stream.empty());
  CHECK(BuildPairBatches(c, 3, 4, 1).empty());
}

TEST_CASE("two records sharing a pair plus one sharing the head") {
  Corpus c({Pair("A", "B"), Pair("A", "B", "y"), Pair("A", "C")});
  PairBatchStream stream(c, 8, 2);
  REQUIRE_FALSE(stream.empty());
  PairBatch b = stream.Next();
  REQUIRE(b.positives.size() == 8);
  REQUIRE(b.negatives.size() == 8);
  for (size_t i = 0; i < 8; ++i) {
    std::set<size_t> pos = {b.positives[i].first, b.positives[i].second};
    CHECK(pos == std::set<size_t>{0, 1});
    CHECK(b.negatives[i].second == 2);
  }
}

TEST_CASE("every emitted pair on a 1k corpus has the right overlap") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> ent(0, 39);
  std::vector<Sample> records;
  for (int i = 0; i < 1000; ++i) {
    records.push_back(Pair("H" + std::to_string(ent(rng)),
                           "T" + std::to_string(ent(rng))));
  }
  Corpus c(records);
  auto batches = BuildPairBatches(c, 20, 16, 9);
  REQUIRE(batches.size() == 20);
  for (const PairBatch &b : batches) {
    CHECK(b.positives.size() == b.negatives.size());
    for (const auto &p : b.positives) {
      const Sample &x = records[p.first], &y = records[p.second];
      CHECK(p.first != p.second);
      CHECK(x.HeadText() == y.HeadText());
      CHECK(x.TailText() == y.TailText());
    }
    for (const auto &n : b.negatives) {
      const Sample &x = records[n.first], &y = records[n.second];
      const bool head = x.HeadText() == y.HeadText();
      const bool tail = x.TailText() == y.TailText();
      CHECK(head != tail);
    }
  }
}

TEST_CASE("pair loss equals the summed log terms") {
  std::mt19937_64 rng(3);
  std::vector<Sample> records;
  for (int i = 0; i < 60; ++i) {
    records.push_back(Pair("H" + std::to_string(i % 7), "T" + std::to_string(i % 5),
                           "w" + std::to_string(i % 4)));
  }
  Corpus c(records);
  Vocabulary vocab;
  for (const Sample &s : records) vocab.AddAll(s.tokens);
  SimilarityModel model(Encoder::Create(vocab, 4, 5, 8));
  PairBatch b = BuildPairBatches(c, 1, 10, 4).front();
  double expect = 0;
  for (const auto &p : b.positives) {
    expect -= std::log(model.Sigma(records[p.first], records[p.second]));
  }
  for (const auto &p : b.negatives) {
    expect -= std::log(1.0 - model.Sigma(records[p.first], records[p.second]));
  }
  CHECK(PairLoss(model, c, b) == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("pretraining with zero steps leaves the model unchanged") {
  Corpus c({Pair("A", "B"), Pair("A", "B", "y"), Pair("A", "C")});
  Vocabulary vocab;
  vocab.AddAll({"A", "B", "C", "y", "z"});
  SimilarityModel model(Encoder::Create(vocab, 3, 3, 1));
  const uint64_t before = model.encoder().Fingerprint();
  auto batches = BuildPairBatches(c, 2, 4, 1);
  PretrainReport r = PretrainSimilarity(model, c, batches, 0, 0.5);
  CHECK(r.losses.empty());
  CHECK(model.encoder().Fingerprint() == before);
  PretrainSimilarity(model, c, batches, 3, 0.5);
  CHECK(model.encoder().Fingerprint() != before);
}

TEST_CASE("entity match is ordered and exact") {
  Corpus empty;
  CHECK(EntityMatch(empty, Pair("A", "B")).empty());
  Corpus c({Pair("A", "B"), Pair("B", "A"), Pair("A", "B", "y"),
            Pair("a", "B"), Pair("A", "B", "q")});
  CHECK(EntityMatch(c, Pair("A", "B")) == std::vector<size_t>{0, 2, 4});
  CHECK(EntityMatch(c, Pair("B", "A")) == std::vector<size_t>{1});
}

TEST_CASE("threshold keeps scores strictly above alpha") {
  // Output = head embedding. The query head is (1, 0); candidate heads sit
  // at dot products logit(0.7) and logit(0.6).
  auto at = [](double dot) { return V2(dot, std::sqrt(1.0 - dot * dot)); };
  SimilarityModel model(HeadEncoder(
      {{"Q", V2(1, 0)}, {"P", at(Logit(0.7))}, {"S", at(Logit(0.6))}}));
  Corpus c({Pair("P", "z"), Pair("S", "z")});
  Sample q = Pair("Q", "z");
  q.relation = "born_in";
  std::vector<size_t> both = {0, 1};
  auto kept = FilterByThreshold(model, q, c, both, 0.65);
  REQUIRE(kept.size() == 1);
  CHECK(kept[0].corpus_index == 0);
  CHECK(kept[0].score == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(kept[0].sample.relation == "born_in");
  CHECK(kept[0].sample.source == Source::kAugmented);
  CHECK(FilterByThreshold(model, q, c, both, 1.0).empty());
  CHECK(FilterByThreshold(model, q, c, both, 0.0).size() == 2);
}

CorpusVectors VectorsOf(const std::vector<Vec> &rows) {
  std::map<std::string, Vec> words;
  std::vector<Sample> records;
  for (size_t i = 0; i < rows.size(); ++i) {
    words["r" + std::to_string(i)] = rows[i];
    records.push_back(Pair("r" + std::to_string(i), "z"));
  }
  SimilarityModel model(HeadEncoder(words));
  return CorpusVectors::Compute(model, Corpus(records));
}

TEST_CASE("top-k search small cases") {
  CorpusVectors one = VectorsOf({V2(0, 1)});
  auto hits = SimilaritySearchTopK(V2(1, 0), one, 3);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].index == 0);

  CorpusVectors two = VectorsOf({V2(1, 0), V2(0, 1)});
  Vec q = V2(0.9, 0.1).normalized();
  hits = SimilaritySearchTopK(q, two, 1);
  REQUIRE(hits.size() == 1);
  CHECK(hits[0].index == 0);
  CHECK_THROWS(SimilaritySearchTopK(q, two, 0));

  // Ties go to the lower index.
  CorpusVectors tied = VectorsOf({V2(0, 1), V2(1, 0), V2(1, 0)});
  hits = SimilaritySearchTopK(V2(1, 0), tied, 2);
  CHECK(hits[0].index == 1);
  CHECK(hits[1].index == 2);
}

TEST_CASE("top-k search matches a selection-sort scan") {
  std::mt19937_64 rng(21);
  std::vector<Vec> rows;
  for (int i = 0; i < 1000; ++i) rows.push_back(testing::RandomVec(8, rng).normalized());
  CorpusVectors vectors = VectorsOf(rows);
  for (int trial = 0; trial < 20; ++trial) {
    Vec q = testing::RandomVec(8, rng).normalized();
    size_t k = 1 + rng() % 50;
    std::vector<double> scores;
    for (const Vec &r : rows) scores.push_back(r.dot(q));
    auto expect = oracle::TopK(scores, k);
    auto hits = SimilaritySearchTopK(q, vectors, k);
    REQUIRE(hits.size() == expect.size());
    for (size_t i = 0; i < k; ++i) CHECK(hits[i].index == expect[i]);
  }
}

TEST_CASE("corpus vectors round-trip and cache by fingerprint") {
  TempDir dir("aug");
  std::vector<Sample> records = {Pair("A", "B"), Pair("C", "D", "y")};
  Corpus c(records);
  Vocabulary vocab;
  vocab.AddAll({"A", "B", "C", "D", "y", "z"});
  SimilarityModel model(Encoder::Create(vocab, 3, 4, 2));
  CorpusVectors v = CorpusVectors::LoadOrCompute(dir.path() / "v.bin", model, c);
  CorpusVectors back = CorpusVectors::Load(dir.path() / "v.bin");
  CHECK(back.vectors() == v.vectors());
  CHECK(back.corpus_hash() == c.Fingerprint());
  CHECK(back.model_hash() == model.encoder().Fingerprint());
  for (size_t i = 0; i < v.size(); ++i) {
    CHECK(std::abs(v.vectors().row(i).norm() - 1.0) < 1e-12);
  }
  // A different model invalidates the cache.
  SimilarityModel other(Encoder::Create(vocab, 3, 4, 3));
  CorpusVectors redone =
      CorpusVectors::LoadOrCompute(dir.path() / "v.bin", other, c);
  CHECK(redone.model_hash() == other.encoder().Fingerprint());
}

Task FewShot(std::vector<Sample> train) {
  Task t;
  t.index = 2;
  t.train = std::move(train);
  return t;
}

TEST_CASE("augmenting against an empty corpus changes nothing") {
  Vocabulary vocab;
  vocab.AddAll({"A", "B", "z"});
  SimilarityModel model(Encoder::Create(vocab, 3, 3, 1));
  Sample s = Pair("A", "B");
  s.relation = "r";
  Task t = FewShot({s});
  Corpus empty;
  AugmentationResult r = AugmentTask(t, empty, model, CorpusVectors(), 0.65, 1);
  CHECK(r.expanded == t.train);
  CHECK(r.added.empty());
  t.index = 1;
  CHECK_THROWS_AS(AugmentTask(t, empty, model, CorpusVectors(), 0.65, 1),
                  ProtocolError);
}

TEST_CASE("augmentation respects the per-query cardinality bound") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> ent(0, 14);
  std::vector<Sample> records;
  Vocabulary vocab;
  for (int i = 0; i < 300; ++i) {
    records.push_back(Pair("E" + std::to_string(ent(rng)),
                           "E" + std::to_string(ent(rng)),
                           "w" + std::to_string(i % 6)));
    vocab.AddAll(records.back().tokens);
  }
  Corpus corpus(records);
  SimilarityModel model(Encoder::Create(vocab, 4, 4, 5));
  CorpusVectors vectors = CorpusVectors::Compute(model, corpus);
  std::vector<Sample> train;
  size_t cap = 0;
  for (int i = 0; i < 50; ++i) {
    Sample s = Pair("E" + std::to_string(ent(rng)), "E" + std::to_string(ent(rng)),
                    "w" + std::to_string(i % 6));
    s.relation = "r" + std::to_string(i % 5);
    cap += std::max<size_t>(EntityMatch(corpus, s).size(), 2);
    train.push_back(s);
  }
  for (double alpha : {0.0, 0.5, 0.65}) {
    AugmentationResult r = AugmentTask(FewShot(train), corpus, model, vectors,
                                       alpha, 2);
    CHECK(r.expanded.size() <= train.size() + cap);
    CHECK(r.expanded.size() == train.size() + r.added.size());
    CHECK(r.entity_queries + r.search_queries == train.size());
    std::set<size_t> seen;
    for (const auto &a : r.added) {
      CHECK(seen.insert(a.corpus_index).second);
      CHECK(a.sample.source == Source::kAugmented);
      CHECK(a.sample.relation == train[a.query_index].relation);
      if (a.matched_by == MatchedBy::kEntity) CHECK(a.score > alpha);
    }
  }
}

TEST_CASE("paraphrases sharing an entity pair are recovered with labels") {
  // The similarity model reads the middle word only: paraphrases reuse the
  // query's word, the distractor does not.
  Vocabulary vocab;
  vocab.AddAll({"A", "B", "C", "D", "born", "died"});
  EncoderParams p = EncoderParams::Zeros(vocab.size(), 2, 2);
  p.token_embeddings.row(vocab.Id("born")) << 7, 0;
  p.token_embeddings.row(vocab.Id("died")) << 0, 7;
  p.projection.block(0, 0, 2, 2).setIdentity();
  SimilarityModel model(Encoder(vocab, p));
  Corpus corpus({Pair("A", "B", "born"), Pair("A", "B", "died"),
                 Pair("A", "B", "born"), Pair("C", "D", "died")});
  CorpusVectors vectors = CorpusVectors::Compute(model, corpus);
  Sample q1 = Pair("A", "B", "born");
  q1.relation = "place_of_birth";
  Sample q2 = Pair("X", "Y", "died");
  q2.relation = "place_of_death";
  AugmentationResult r =
      AugmentTask(FewShot({q1, q2}), corpus, model, vectors, 0.65, 1);
  std::map<size_t, std::string> labels;
  for (const auto &a : r.added) labels[a.corpus_index] = a.sample.relation;
  CHECK(labels == std::map<size_t, std::string>{{0, "place_of_birth"},
                                                {1, "place_of_death"},
                                                {2, "place_of_birth"}});
  CHECK(r.entity_queries == 1);
  CHECK(r.search_queries == 1);
}

}  // namespace
}  // namespace cfrl
