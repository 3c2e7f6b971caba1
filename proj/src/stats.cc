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

#include "cfrl/stats.h"

#include <cmath>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "cfrl/sample.h"

namespace cfrl {

double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double SampleVariance(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double mean = Mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(values.size() - 1);
}

TTestResult PairedTTest(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error("paired t-test needs equal-length samples");
  }
  if (a.size() < 2) throw Error("paired t-test needs at least two pairs");
  std::vector<double> diff(a.size());
  for (size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];

  TTestResult result;
  result.df = static_cast<int>(diff.size()) - 1;
  result.mean_difference = Mean(diff);
  const double variance = SampleVariance(diff);
  // Relative guard: a spread of rounding error around a constant offset is
  // still a zero-variance sample.
  const double scale = std::max(1.0, std::abs(result.mean_difference));
  if (variance <= 1e-24 * scale * scale) {
    result.degenerate = true;
    result.p_value = 1.0;
    return result;
  }
  const double se = std::sqrt(variance / static_cast<double>(diff.size()));
  result.t = result.mean_difference / se;
  boost::math::students_t dist(result.df);
  result.p_value =
      2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(result.t)));
  return result;
}

}  // namespace cfrl
