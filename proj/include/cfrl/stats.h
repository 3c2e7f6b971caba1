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

#ifndef CFRL_STATS_H_
#define CFRL_STATS_H_

#include <span>

namespace cfrl {

double Mean(std::span<const double> values);
// Unbiased (n - 1) variance; 0 for fewer than two values.
double SampleVariance(std::span<const double> values);

struct TTestResult {
  double t = 0.0;
  int df = 0;
  double p_value = 1.0;
  double mean_difference = 0.0;
  // Differences have zero variance (including all-zero), so t is undefined.
  // p_value is reported as 1.
  bool degenerate = false;
};

// Two-sided paired t-test on a - b. Throws Error unless both spans have the
// same length >= 2.
TTestResult PairedTTest(std::span<const double> a, std::span<const double> b);

}  // namespace cfrl

#endif  // CFRL_STATS_H_
