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

// Command-line driver: synth, prepare, pretrain-sim, run, report.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "cfrl/augmentation.h"
#include "cfrl/benchmark.h"
#include "cfrl/config.h"
#include "cfrl/report.h"
#include "cfrl/synthetic.h"
#include "cfrl/trainer.h"

namespace {

cfrl::RunConfig ReadConfig(const std::string &path) {
  return path.empty() ? cfrl::RunConfig{} : cfrl::LoadRunConfig(path);
}

std::optional<cfrl::WordVectors> ReadWordVectors(const std::string &flag,
                                                 const cfrl::RunConfig &cfg) {
  const std::string path = flag.empty() ? cfg.embeddings_path : flag;
  if (path.empty()) return std::nullopt;
  return cfrl::LoadWordVectors(path);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Continual few-shot relation learning"};
  app.require_subcommand(1);

  // synth
  cfrl::SyntheticOptions synth;
  std::string synth_out;
  auto *synth_cmd = app.add_subcommand("synth", "Generate a synthetic benchmark");
  synth_cmd->add_option("--out", synth_out, "Output directory")->required();
  synth_cmd->add_option("--seed", synth.seed);
  synth_cmd->add_option("--relations", synth.n_relations);
  synth_cmd->add_option("--samples", synth.samples_per_relation);
  synth_cmd->add_option("--entities", synth.n_entities);
  synth_cmd->add_option("--embedding-dim", synth.embedding_dim);
  synth_cmd->add_option("--spread", synth.cluster_spread);
  synth_cmd->add_option("--filler-run", synth.max_filler_run);
  synth_cmd->add_option("--triggers", synth.triggers_per_sentence);
  synth_cmd->add_option("--noise", synth.trigger_noise);
  synth_cmd->add_option("--paraphrases", synth.paraphrases_per_sample);
  synth_cmd->add_option("--distractors", synth.distractor_rate);
  synth_cmd->add_option("--background", synth.background_records);

  // prepare
  std::string config_path, dataset_path, format = "jsonl", out_dir;
  std::vector<uint64_t> seeds;
  auto *prepare = app.add_subcommand("prepare", "Build task sequences");
  prepare->add_option("--dataset", dataset_path)->required();
  prepare->add_option("--format", format, "jsonl | fewrel | tacred");
  prepare->add_option("--config", config_path);
  prepare->add_option("--seeds", seeds, "Overrides the config seeds");
  prepare->add_option("--out", out_dir)->required();

  // pretrain-sim
  std::string corpus_path, vectors_path, model_path;
  auto *pretrain = app.add_subcommand("pretrain-sim",
                                      "Pretrain the sentence similarity model");
  pretrain->add_option("--corpus", corpus_path)->required();
  pretrain->add_option("--config", config_path);
  pretrain->add_option("--word-vectors", vectors_path);
  pretrain->add_option("--out", model_path, "Checkpoint file")->required();

  // run
  std::string method, sim_path;
  auto *run = app.add_subcommand("run", "Run one method over all seeds");
  run->add_option("--config", config_path);
  run->add_option("--dataset", dataset_path)->required();
  run->add_option("--format", format, "jsonl | fewrel | tacred");
  run->add_option("--corpus", corpus_path);
  run->add_option("--sim-model", sim_path, "Pretrained similarity checkpoint");
  run->add_option("--word-vectors", vectors_path);
  run->add_option("--method", method, "Overrides the config method");
  run->add_option("--seeds", seeds, "Overrides the config seeds");
  run->add_option("--out", out_dir)->required();

  // report
  std::vector<std::string> run_dirs;
  std::string baseline;
  auto *report = app.add_subcommand("report", "Aggregate run directories");
  report->add_option("--run", run_dirs, "Run output directories")->required();
  report->add_option("--baseline", baseline, "Method to test against");
  report->add_option("--out", out_dir)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth_cmd) {
      const cfrl::SyntheticData data = cfrl::GenerateSynthetic(synth);
      cfrl::WriteSynthetic(data, synth_out);
      std::cout << "wrote " << data.dataset.size() << " relations, "
                << data.corpus.size() << " corpus records to " << synth_out
                << "\n";
    } else if (*prepare) {
      cfrl::RunConfig cfg = ReadConfig(config_path);
      if (!seeds.empty()) cfg.seeds = seeds;
      const auto groups = cfrl::LoadDataset(
          dataset_path, cfrl::ParseDatasetFormat(format), cfg.filter_relations);
      for (uint64_t seed : cfg.seeds) {
        cfrl::TaskSequenceOptions options;
        options.n_tasks = cfg.n_tasks;
        options.n_way = cfg.n_way;
        options.k_shot = cfg.k_shot;
        options.base_samples_per_relation = cfg.base_samples_per_relation;
        options.valid_fraction = cfg.valid_fraction;
        options.seed = seed;
        const auto sequence = cfrl::BuildTaskSequence(groups, options);
        const auto dir =
            std::filesystem::path(out_dir) / ("seed_" + std::to_string(seed));
        cfrl::WriteTaskSequence(sequence, dir);
        std::cout << "seed " << seed << ": " << sequence.size()
                  << " tasks -> " << dir.string() << "\n";
      }
    } else if (*pretrain) {
      const cfrl::RunConfig cfg = ReadConfig(config_path);
      const auto vectors = ReadWordVectors(vectors_path, cfg);
      const cfrl::Corpus corpus = cfrl::Corpus::Load(corpus_path);
      if (corpus.skipped() > 0) {
        std::cerr << "warning: skipped " << corpus.skipped()
                  << " corpus records without both entity spans\n";
      }
      cfrl::PretrainReport pretrain_report;
      const cfrl::SimilarityModel model = cfrl::TrainSimilarityModel(
          corpus, cfg, vectors ? &*vectors : nullptr, &pretrain_report);
      model.Save(model_path);
      if (!pretrain_report.losses.empty()) {
        std::printf("pair loss: first step %.4f, last step %.4f over %zu steps\n",
                    pretrain_report.losses.front(),
                    pretrain_report.losses.back(),
                    pretrain_report.losses.size());
      }
    } else if (*run) {
      cfrl::RunConfig cfg = ReadConfig(config_path);
      if (!method.empty()) cfg.method = cfrl::ParseMethod(method);
      if (!seeds.empty()) cfg.seeds = seeds;
      cfg.Validate();
      const auto groups = cfrl::LoadDataset(
          dataset_path, cfrl::ParseDatasetFormat(format), cfg.filter_relations);
      const auto vectors = ReadWordVectors(vectors_path, cfg);
      std::optional<cfrl::Corpus> corpus;
      if (!corpus_path.empty()) corpus = cfrl::Corpus::Load(corpus_path);
      std::optional<cfrl::SimilarityModel> sim;
      if (!sim_path.empty()) sim = cfrl::SimilarityModel::Load(sim_path);

      cfrl::ExperimentInputs inputs;
      inputs.groups = &groups;
      inputs.corpus = corpus ? &*corpus : nullptr;
      inputs.similarity = sim ? &*sim : nullptr;
      inputs.word_vectors = vectors ? &*vectors : nullptr;
      const auto result = cfrl::RunExperiment(
          cfg, inputs, out_dir,
          [](uint64_t seed, const cfrl::TaskSequence &,
             const cfrl::ContinualLearner &, const cfrl::StepReport &r) {
            std::fprintf(stderr, "seed %llu step %d: train %zu expanded %zu\n",
                         static_cast<unsigned long long>(seed), r.step,
                         r.train_size, r.expanded_size);
          });
      const auto mean = result.matrix().Mean();
      std::cout << cfrl::MethodName(cfg.method) << " mean accuracy per step:";
      for (double v : mean) std::printf(" %.4f", v);
      std::cout << "\n";
    } else if (*report) {
      std::vector<cfrl::NamedMatrix> runs;
      for (const auto &dir : run_dirs) {
        std::ifstream in(std::filesystem::path(dir) / "manifest.json");
        if (!in) throw cfrl::Error("no manifest.json in " + dir);
        const auto manifest = nlohmann::json::parse(in);
        runs.push_back(
            {manifest.at("method").get<std::string>(),
             cfrl::AccuracyMatrix::ReadCsv(std::filesystem::path(dir) /
                                           "accuracy_matrix.csv")});
      }
      cfrl::WriteReport(runs, baseline, out_dir);
      std::cout << "wrote summary.csv, significance.csv, curve.csv to "
                << out_dir << "\n";
    }
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
