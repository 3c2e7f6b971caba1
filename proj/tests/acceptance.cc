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


// End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. Each criterion also has a wall-clock
// budget that counts toward its verdict.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_check.h"
#include "oracles.h"
#include "test_util.h"

#include "cfrl/augmentation.h"
#include "cfrl/memory.h"
#include "cfrl/objectives.h"
#include "cfrl/stats.h"
#include "cfrl/synthetic.h"
#include "cfrl/trainer.h"

namespace cfrl {
namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  // Records a failed check without stopping the criterion.
  void Require(bool ok, const std::string &what) {
    if (ok) return;
    if (pass) detail = what;
    pass = false;
  }
};

std::string Format(const char *fmt, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), fmt, a, b, c);
  return buf;
}

// ---------------------------------------------------------------------------
// 1. Hand-evaluated losses.

Outcome LossUnits() {
  Outcome o;
  const double tol = 1e-10;
  double worst = 0;
  auto expect = [&](double got, double want, const char *what) {
    worst = std::max(worst, std::abs(got - want));
    o.Require(std::abs(got - want) <= tol, what);
  };
  auto batch = [](std::vector<double> row, int t) {
    ScoredBatch b;
    b.scores = {std::move(row)};
    b.targets = {t};
    return b;
  };
  auto at = [](double c) { return (Vec(2) << c, std::sqrt(1 - c * c)).finished(); };
  std::vector<Vec> rel = {(Vec(2) << 1, 0).finished()};

  expect(LossCe(batch({0.3, 0.3}, 0)), std::log(2.0), "uniform ce");
  expect(LossCe(batch({1.0, 0.0}, 0)), std::log1p(std::exp(-1.0)), "ce 0.3133");
  expect(LossCe(batch({0.5}, 0)), 0.0, "singleton ce");
  expect(LossMm(batch({0.9, 0.5, 0.8}, 0), 0.2), 0.1, "mm 0.1");
  expect(LossMm(batch({0.9, 0.6, 0.7}, 0), 0.2), 0.0, "mm inactive");
  expect(LossMm(batch({0.9}, 0), 0.2), 0.0, "mm singleton");
  expect(LossPm(batch({0.9, 0.85}, 0), 0.2), 0.15, "pm 0.15");
  expect(LossPm(batch({0.9, 0.3}, 0), 0.2), 0.0, "pm inactive");
  expect(LossPm(batch({0.5, 0.8, 0.8}, 0), 0.2), 0.5, "pm tie");
  std::vector<Vec> e = {at(0.9), at(0.1), at(0.1), at(0.5), at(0.5)};
  std::vector<ContrastiveItem> quiet = {{0, 0, {1, 2}}}, loud = {{0, 0, {3, 4}}},
                               none;
  expect(LossCon(e, quiet, rel, 0.01, Metric::kCosine), 0.0, "con inactive");
  expect(LossCon(e, loud, rel, 0.01, Metric::kCosine), 0.11, "con 0.11");
  expect(LossCon(e, none, rel, 0.01, Metric::kCosine), 0.0, "con empty");
  Margins m{0.1, 0.15, 0.01};
  expect(LossNew(batch({0.3, 0.3}, 0), {1, 1, 1, 0}, m), std::log(2.0) + 0.25,
         "new 0.9431");
  expect(LossNew(batch({0.3, 0.3}, 0), {0, 0, 0, 0}, m), 0.0, "new zero");
  const double gap = std::log(std::exp(0.5) - 1.0);
  Margins mm{0.1 - gap, 0.05 - gap, 0.01};
  std::vector<Vec> e2 = {at(0.9), at(0.5), at(0.5)};
  std::vector<ContrastiveItem> item = {{0, 0, {1, 2}}};
  expect(LossMem(batch({0.2, 0.2 + gap}, 0), e2, item, rel, LossWeights{}, mm,
                 Metric::kCosine),
         0.661, "mem 0.661");
  o.detail = o.pass ? Format("17 hand values, max error %.1e", worst) : o.detail;
  return o;
}

// ---------------------------------------------------------------------------
// 2. Analytic gradients against central differences.

Outcome Gradients() {
  Outcome o;
  struct Case {
    const char *name;
    LossWeights w;
    bool items;
  } cases[] = {{"ce", {1, 0, 0, 0}, false},    {"mm", {0, 1, 0, 0}, false},
               {"pm", {0, 0, 1, 0}, false},    {"con", {0, 0, 0, 1}, true},
               {"new", {1, 1, 1, 0.1}, false}, {"mem", {1, 1, 1, 0.1}, true}};
  double worst = 0;
  int points = 0;
  for (const Case &c : cases) {
    for (uint64_t seed = 1; seed <= 10; ++seed) {
      auto p = testing::MakeGradientProblem(1000 + seed, c.w, c.items,
                                            Metric::kCosine);
      auto r = testing::CheckGradient(p.params, p.inputs, p.objective, 1e-5);
      worst = std::max(worst, r.max_relative_error);
      ++points;
      o.Require(r.loss > 0, std::string(c.name) + " inactive at a test point");
      o.Require(r.max_relative_error <= 1e-4,
                std::string(c.name) + Format(" relative error %.2e",
                                             r.max_relative_error));
    }
  }
  if (o.pass) {
    o.detail = Format("6 losses x 10 points, max relative error %.2e", worst);
  }
  return o;
}

// ---------------------------------------------------------------------------
// 3. Library routines against naive re-implementations.

Outcome Oracles() {
  Outcome o;
  std::mt19937_64 rng(77);
  size_t compared = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 100);
    const int r = 1 + static_cast<int>(rng() % 10);
    const int d = 2 + static_cast<int>(rng() % 6);

    // Losses.
    std::vector<Vec> rel, emb;
    std::vector<int> targets;
    for (int j = 0; j < r; ++j) rel.push_back(testing::RandomVec(d, rng));
    for (int i = 0; i < n; ++i) {
      emb.push_back(testing::RandomVec(d, rng));
      targets.push_back(static_cast<int>(rng() % r));
    }
    ScoredBatch b = ScoreBatch(emb, targets, rel, Metric::kCosine);
    oracle::Scores s(n, std::vector<double>(r));
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < r; ++j) s[i][j] = oracle::Cosine(emb[i], rel[j]);
    }
    std::vector<ContrastiveItem> items;
    std::vector<oracle::ConItem> naive;
    for (int i = 0; i < std::min(n, 8); ++i) {
      ContrastiveItem it{static_cast<size_t>(i), targets[i],
                         {rng() % n, rng() % n}};
      items.push_back(it);
      naive.push_back({it.anchor, it.target, it.negatives});
    }
    o.Require(std::abs(LossCe(b) - oracle::Ce(s, targets)) <= 1e-10, "ce");
    o.Require(std::abs(LossMm(b, 0.2) - oracle::Mm(s, targets, 0.2)) <= 1e-10,
              "mm");
    o.Require(std::abs(LossPm(b, 0.2) - oracle::Pm(s, targets, 0.2)) <= 1e-10,
              "pm");
    o.Require(std::abs(LossCon(emb, items, rel, 0.01, Metric::kCosine) -
                       oracle::Con(emb, naive, rel, 0.01)) <= 1e-10,
              "con");

    // Exemplar selection and inference through an encoder that outputs the
    // head-word embedding.
    std::map<std::string, Vec> words;
    Vec offset = testing::RandomVec(d, rng, 2.0);
    for (int i = 0; i < n; ++i) {
      words["s" + std::to_string(i)] = offset + testing::RandomVec(d, rng);
    }
    for (int j = 0; j < r; ++j) words["q" + std::to_string(j)] = rel[j];
    Encoder enc = testing::HeadEncoder(words);
    std::vector<Sample> samples;
    Vec c = Vec::Zero(d);
    for (int i = 0; i < n; ++i) {
      samples.push_back(testing::MakeSample({"s" + std::to_string(i), "z", "z"},
                                            {0, 0}, {2, 2}, "x"));
      c += words["s" + std::to_string(i)];
    }
    c /= n;
    std::vector<double> dist;
    for (int i = 0; i < n; ++i) {
      dist.push_back(1.0 - oracle::Cosine(words["s" + std::to_string(i)], c));
    }
    o.Require(SelectExemplar(samples, enc, Metric::kCosine) ==
                  oracle::ArgMin(dist),
              "select_exemplar");

    RunConfig cfg;
    cfg.iter1 = 0;
    cfg.iter2 = 0;
    ContinualLearner learner(cfg, enc, 1);
    Task task;
    task.index = 1;
    for (int j = 0; j < r; ++j) {
      std::string name = "q" + std::to_string(j);
      task.relations.push_back(name);
      task.train.push_back(
          testing::MakeSample({name, "z", "z"}, {0, 0}, {2, 2}, name));
    }
    learner.TrainInitialTask(task);
    for (int i = 0; i < n; ++i) {
      std::vector<double> scores;
      for (int j = 0; j < r; ++j) {
        scores.push_back(oracle::Cosine(words["s" + std::to_string(i)], rel[j]));
      }
      o.Require(learner.Infer(samples[i]) ==
                    task.relations[oracle::ArgMax(scores)],
                "infer");
    }

    // Top-K search.
    std::vector<Sample> records;
    std::map<std::string, Vec> unit;
    for (int i = 0; i < n; ++i) {
      unit["s" + std::to_string(i)] = words["s" + std::to_string(i)].normalized();
      records.push_back(samples[i]);
    }
    SimilarityModel sim(testing::HeadEncoder(unit));
    CorpusVectors vectors = CorpusVectors::Compute(sim, Corpus(records));
    Vec q = testing::RandomVec(d, rng).normalized();
    const size_t k = 1 + rng() % n;
    std::vector<double> dots;
    for (int i = 0; i < n; ++i) {
      dots.push_back(vectors.vectors().row(i).dot(q));
    }
    auto hits = SimilaritySearchTopK(q, vectors, k);
    auto expect = oracle::TopK(dots, k);
    o.Require(hits.size() == expect.size(), "top-k size");
    for (size_t i = 0; i < hits.size() && i < expect.size(); ++i) {
      o.Require(hits[i].index == expect[i], "top-k order");
    }
    compared += 4 + 1 + n + hits.size();
  }
  if (o.pass) {
    o.detail = Format("100 randomized trials, %.0f comparisons, all equal",
                      static_cast<double>(compared));
  }
  return o;
}

// ---------------------------------------------------------------------------
// Shared synthetic benchmark for criteria 4-6 and 8.

struct Bench {
  SyntheticData data;
  RunConfig config;
};

const Bench &Benchmark() {
  static const Bench bench = [] {
    SyntheticOptions o;
    o.seed = 11;
    Bench b{GenerateSynthetic(o), {}};
    RunConfig &c = b.config;
    c.n_tasks = 8;
    c.n_way = 5;
    c.k_shot = 5;
    c.base_samples_per_relation = 40;
    c.embedding_dim = o.embedding_dim;
    c.output_dim = 32;
    c.epochs_per_iter = 10;
    c.learning_rate = 0.03;
    c.update_embeddings = false;
    c.seeds = {1, 2, 3, 4, 5, 6};
    return b;
  }();
  return bench;
}

const SimilarityModel &BenchSimilarity() {
  static const SimilarityModel model =
      TrainSimilarityModel(Benchmark().data.corpus, Benchmark().config,
                           &Benchmark().data.word_vectors);
  return model;
}

ExperimentResult Run(Method method, const std::vector<uint64_t> &seeds,
                     const std::filesystem::path &out_dir = {},
                     const StepHook &hook = {}) {
  const Bench &b = Benchmark();
  RunConfig c = b.config;
  c.method = method;
  c.seeds = seeds;
  ExperimentInputs in{&b.data.dataset, &b.data.corpus, &BenchSimilarity(),
                      &b.data.word_vectors};
  return RunExperiment(c, in, out_dir, hook);
}

double MeanAt(const ExperimentResult &r, size_t step) {
  return Mean(r.matrix().Column(step));
}

// ---------------------------------------------------------------------------
// 4. Protocol invariants on a full ERDA run.

Outcome Protocol() {
  Outcome o;
  std::vector<MemoryEntry> previous;
  std::map<std::pair<uint64_t, int>, double> hook_accuracy;
  size_t steps = 0;
  StepHook hook = [&](uint64_t seed, const TaskSequence &seq,
                      const ContinualLearner &learner, const StepReport &r) {
    ++steps;
    const int k = r.step;
    if (k == 1) previous.clear();
    const auto &entries = learner.memory().entries();
    o.Require(entries.size() == learner.relations().size(), "|M| != |R|");
    o.Require(entries.size() >= previous.size(), "memory shrank");
    for (size_t i = 0; i < previous.size() && i < entries.size(); ++i) {
      o.Require(entries[i].relation == previous[i].relation &&
                    entries[i].exemplar == previous[i].exemplar &&
                    entries[i].step == previous[i].step,
                "memory entry changed");
    }
    for (const MemoryEntry &e : entries) {
      o.Require(e.exemplar.source == Source::kOriginal, "augmented exemplar");
      const auto &train = seq.task(e.step).train;
      o.Require(std::find(train.begin(), train.end(), e.exemplar) != train.end(),
                "exemplar not from its task's training data");
    }
    previous = entries;
    // The evaluation set is exactly the union of test splits 1..k.
    std::vector<Sample> union_test;
    for (int i = 1; i <= k; ++i) {
      const auto &t = seq.task(i).test;
      union_test.insert(union_test.end(), t.begin(), t.end());
    }
    o.Require(CumulativeTestSet(seq, k) == union_test, "cumulative test set");
    hook_accuracy[{seed, k}] = learner.EvaluateSamples(union_test);
  };
  ExperimentResult r = Run(Method::kErda, {1}, {}, hook);
  o.Require(steps == 8, "expected 8 steps");
  for (const SeedRun &run : r.runs) {
    for (size_t k = 0; k < run.accuracy.size(); ++k) {
      o.Require(run.accuracy[k] == hook_accuracy[{run.seed, int(k) + 1}],
                "reported accuracy differs from the union evaluation");
    }
    for (const StepReport &s : run.steps) {
      if (s.step > 1) o.Require(s.augmented > 0, "no augmentation happened");
    }
  }
  if (o.pass) {
    o.detail = "8 steps checked: |M|=|R|, append-only, union test set, "
               "original-only exemplars";
  }
  return o;
}

// ---------------------------------------------------------------------------
// 5 and 6 share the 6-seed runs.

struct Runs {
  ExperimentResult seqrun, erda, erda_no_da;
};

const Runs &SixSeedRuns() {
  static const Runs runs = [] {
    const auto &seeds = Benchmark().config.seeds;
    return Runs{Run(Method::kSeqRun, seeds), Run(Method::kErda, seeds),
                Run(Method::kErdaNoDa, seeds)};
  }();
  return runs;
}

Outcome Forgetting() {
  Outcome o;
  const Runs &r = SixSeedRuns();
  double first_step1 = 0, first_step8 = 0;
  for (const SeedRun &run : r.seqrun.runs) {
    first_step1 += run.first_task_accuracy.front() / r.seqrun.runs.size();
    first_step8 += run.first_task_accuracy.back() / r.seqrun.runs.size();
  }
  const double drop = first_step1 - first_step8;
  const double seq8 = MeanAt(r.seqrun, 7), erda8 = MeanAt(r.erda, 7);
  const TTestResult t = PairedTTest(r.erda.matrix().Column(7),
                                    r.seqrun.matrix().Column(7));
  o.Require(drop >= 0.30, "(a) task-1 drop below 30 points");
  o.Require(erda8 - seq8 >= 0.15, "(b) ERDA margin below 15 points");
  o.Require(t.p_value < 0.05, "(c) p >= 0.05");
  std::string detail = Format(
      "(a) SeqRun task-1 %.3f -> %.3f; ", first_step1, first_step8);
  detail += Format("(b) step-8 ERDA %.3f vs SeqRun %.3f; ", erda8, seq8);
  detail += Format("(c) p = %.2e", t.p_value);
  o.detail = o.pass ? detail : o.detail + " | " + detail;
  return o;
}

Outcome Ablation() {
  Outcome o;
  const Runs &r = SixSeedRuns();
  const double with = MeanAt(r.erda, 7), without = MeanAt(r.erda_no_da, 7);
  o.Require(with >= without, "ERDA below ERDA without augmentation");

  // Paraphrase recovery over every few-shot task of every seed's sequence.
  const Bench &b = Benchmark();
  const Corpus &corpus = b.data.corpus;
  const SimilarityModel &sim = BenchSimilarity();
  CorpusVectors vectors = CorpusVectors::Compute(sim, corpus);
  size_t planted = 0, recovered = 0;
  for (uint64_t seed : b.config.seeds) {
    TaskSequenceOptions opt;
    opt.n_tasks = b.config.n_tasks;
    opt.n_way = b.config.n_way;
    opt.k_shot = b.config.k_shot;
    opt.base_samples_per_relation = b.config.base_samples_per_relation;
    opt.seed = seed;
    TaskSequence seq = BuildTaskSequence(b.data.dataset, opt);
    for (int k = 2; k <= seq.size(); ++k) {
      const Task &task = seq.task(k);
      AugmentationResult a = AugmentTask(task, corpus, sim, vectors,
                                         b.config.alpha, b.config.top_k);
      std::map<size_t, std::string> labels;
      for (const auto &x : a.added) labels[x.corpus_index] = x.sample.relation;
      for (const Sample &s : task.train) {
        for (size_t i : corpus.Lookup(s.HeadText(), s.TailText())) {
          if (!b.data.corpus_planted[i] ||
              b.data.corpus_relation[i] != s.relation) {
            continue;
          }
          ++planted;
          auto it = labels.find(i);
          if (it != labels.end() && it->second == s.relation) ++recovered;
        }
      }
    }
  }
  const double rate = planted ? static_cast<double>(recovered) / planted : 0.0;
  o.Require(planted > 0, "no planted paraphrases found");
  o.Require(rate >= 0.80, "paraphrase recovery below 80%");
  std::string detail =
      Format("step-8 ERDA %.3f vs no-DA %.3f; ", with, without) +
      Format("recovered %.0f/%.0f planted paraphrases (%.1f%%)",
             static_cast<double>(recovered), static_cast<double>(planted),
             100.0 * rate);
  o.detail = o.pass ? detail : o.detail + " | " + detail;
  return o;
}

// ---------------------------------------------------------------------------
// 7. Similarity model on held-out pairs.

Outcome SimilarityProperty() {
  Outcome o;
  SyntheticOptions opt;
  opt.seed = 23;
  SyntheticData data = GenerateSynthetic(opt);
  // Split by entity pair so held-out pairs are never seen in training.
  std::set<std::pair<std::string, std::string>> held_pairs;
  size_t g = 0;
  for (const auto &[pair, members] : data.corpus.pair_index()) {
    if (g++ % 4 == 0) held_pairs.insert(pair);
  }
  std::vector<Sample> train_records, held_records;
  for (const Sample &s : data.corpus.records()) {
    (held_pairs.count({s.HeadText(), s.TailText()}) ? held_records
                                                    : train_records)
        .push_back(s);
  }
  Corpus train(train_records), held(held_records);
  RunConfig c;
  c.embedding_dim = opt.embedding_dim;
  SimilarityModel model = TrainSimilarityModel(train, c, &data.word_vectors);

  double pos = 0, neg = 0;
  size_t n = 0;
  for (const PairBatch &batch : BuildPairBatches(held, 40, 16, 99)) {
    for (size_t i = 0; i < batch.positives.size(); ++i) {
      const auto &p = batch.positives[i], &q = batch.negatives[i];
      pos += model.Sigma(held.records()[p.first], held.records()[p.second]);
      neg += model.Sigma(held.records()[q.first], held.records()[q.second]);
      ++n;
    }
  }
  o.Require(n > 0, "no held-out pairs");
  const double gap = n ? (pos - neg) / n : 0.0;
  o.Require(gap >= 0.15, "held-out sigma gap below 0.15");

  std::mt19937_64 rng(5);
  std::uniform_int_distribution<size_t> pick(0, data.corpus.size() - 1);
  double worst_asym = 0, lo = 1, hi = 0;
  for (int i = 0; i < 1000; ++i) {
    const Sample &a = data.corpus.records()[pick(rng)];
    const Sample &b = data.corpus.records()[pick(rng)];
    const double ab = model.Sigma(a, b), ba = model.Sigma(b, a);
    worst_asym = std::max(worst_asym, std::abs(ab - ba));
    lo = std::min(lo, ab);
    hi = std::max(hi, ab);
  }
  o.Require(worst_asym <= 1e-12, "sigma asymmetric");
  o.Require(lo > 0.0 && hi < 1.0, "sigma outside (0, 1)");
  std::string detail =
      Format("held-out positive %.3f vs negative %.3f (gap %.3f); ", pos / n,
             neg / n, gap) +
      Format("1k pairs: max asymmetry %.1e, range [%.3f, %.3f]", worst_asym, lo,
             hi);
  o.detail = o.pass ? detail : o.detail + " | " + detail;
  return o;
}

// ---------------------------------------------------------------------------
// 8. Byte-identical accuracy matrices from repeated runs.

std::string Slurp(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome Determinism() {
  Outcome o;
  testing::TempDir dir("acceptance");
  Run(Method::kErda, {3, 4}, dir.path() / "a");
  Run(Method::kErda, {3, 4}, dir.path() / "b");
  const std::string a = Slurp(dir.path() / "a" / "accuracy_matrix.csv");
  const std::string b = Slurp(dir.path() / "b" / "accuracy_matrix.csv");
  o.Require(!a.empty(), "empty accuracy matrix");
  o.Require(a == b, "accuracy matrices differ");
  if (o.pass) {
    o.detail = Format("two ERDA runs (seeds 3, 4): %.0f identical bytes",
                      static_cast<double>(a.size()));
  }
  return o;
}

struct Criterion {
  const char *name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace cfrl

int main() {
  using namespace cfrl;
  const Criterion criteria[] = {
      {"loss unit suite", 1, LossUnits},
      {"gradient suite", 30, Gradients},
      {"oracle equivalence", 60, Oracles},
      {"protocol invariants", 120, Protocol},
      {"catastrophic forgetting", 600, Forgetting},
      {"augmentation ablation", 600, Ablation},
      {"similarity model", 300, SimilarityProperty},
      {"determinism", 600, Determinism},
  };
  int failures = 0;
  int index = 0;
  for (const Criterion &c : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (seconds > c.budget_seconds) {
      o.pass = false;
      o.detail += Format(" | over budget (%.0f s)", c.budget_seconds);
    }
    if (!o.pass) ++failures;
    std::printf("%s [%d] %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", index,
                c.name, o.detail.c_str(), seconds);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
