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


// Central finite-difference check of encoder gradients, shared by the unit
// and acceptance suites.

#ifndef CFRL_TESTS_GRADIENT_CHECK_H_
#define CFRL_TESTS_GRADIENT_CHECK_H_

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "cfrl/encoder.h"
#include "cfrl/objectives.h"
#include "test_util.h"

namespace cfrl::testing {

struct GradientCheck {
  double max_relative_error = 0.0;
  double loss = 0.0;
  size_t checked = 0;
};

// Compares every analytic partial derivative with
// (L(p + h) - L(p - h)) / 2h. A coordinate's error is
// |a - n| / max(|a|, |n|), with coordinates where both sides are below
// `floor` in magnitude counted as agreeing.
inline GradientCheck CheckGradient(const EncoderParams &params,
                                   const std::vector<EncoderInput> &inputs,
                                   const OutputObjective &objective,
                                   double step = 1e-5, double floor = 1e-8) {
  GradientCheck result;
  LossAndGradient analytic = ComputeGradient(params, inputs, objective);
  result.loss = analytic.loss;
  EncoderParams probe = params;
  for (size_t i = 0; i < params.num_parameters(); ++i) {
    const double x = probe.flat(i);
    probe.flat(i) = x + step;
    const double up = EvaluateObjective(probe, inputs, objective);
    probe.flat(i) = x - step;
    const double down = EvaluateObjective(probe, inputs, objective);
    probe.flat(i) = x;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic.gradient.flat(i);
    const double scale = std::max(std::abs(a), std::abs(numeric));
    ++result.checked;
    if (scale < floor) continue;
    result.max_relative_error =
        std::max(result.max_relative_error, std::abs(a - numeric) / scale);
  }
  return result;
}

// A small random problem: six marked sentences over a ten-word vocabulary,
// four relation anchors, and one memory item (output 0) with two corrupted
// copies (outputs 4 and 5). Margins are widened so most hinges are active.
struct GradientProblem {
  EncoderParams params;
  std::vector<EncoderInput> inputs;
  TrainingObjective objective;
};

inline GradientProblem MakeGradientProblem(uint64_t seed, LossWeights weights,
                                           bool with_items, Metric metric) {
  std::mt19937_64 rng(seed);
  Vocabulary vocab;
  for (int i = 0; i < 7; ++i) vocab.Add("w" + std::to_string(i));
  const int de = 3, d = 4;
  GradientProblem p;
  p.params = EncoderParams::Random(vocab.size(), de, d, seed);
  std::normal_distribution<double> normal(0.0, 0.3);
  for (int i = 0; i < d; ++i) p.params.bias[i] = normal(rng);
  Encoder enc(vocab, p.params);
  std::uniform_int_distribution<int> word(0, 6);
  for (int s = 0; s < 6; ++s) {
    std::vector<std::string> tokens;
    for (int t = 0; t < 5; ++t) tokens.push_back("w" + std::to_string(word(rng)));
    Sample sample = MakeSample(tokens, {0, 1}, {3, 4});
    p.inputs.push_back(enc.Prepare(sample));
  }
  p.objective.targets = {0, 1, 2, 3};
  for (int r = 0; r < 4; ++r) p.objective.relations.push_back(RandomVec(d, rng));
  if (with_items) p.objective.items = {ContrastiveItem{0, 0, {4, 5}}};
  p.objective.weights = weights;
  // Distances under neg_l2 are larger than cosine gaps, so the contrastive
  // margin grows with them.
  p.objective.margins =
      Margins{0.8, 0.8, metric == Metric::kCosine ? 1.5 : 6.0};
  p.objective.metric = metric;
  return p;
}

}  // namespace cfrl::testing

#endif  // CFRL_TESTS_GRADIENT_CHECK_H_
