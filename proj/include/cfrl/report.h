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

#ifndef CFRL_REPORT_H_
#define CFRL_REPORT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cfrl {

// Accuracy on the cumulative test set, one row per seed and one column per
// task step.
struct AccuracyMatrix {
  std::vector<uint64_t> seeds;
  std::vector<std::vector<double>> rows;

  size_t num_steps() const { return rows.empty() ? 0 : rows.front().size(); }
  std::vector<double> Column(size_t step) const;  // 0-based
  std::vector<double> Mean() const;
  std::vector<double> Variance() const;  // unbiased, per step

  // "seed,step_1,...,step_n" then one row per seed with six decimals.
  void WriteCsv(const std::filesystem::path &path) const;
  static AccuracyMatrix ReadCsv(const std::filesystem::path &path);
};

struct NamedMatrix {
  std::string method;
  AccuracyMatrix matrix;
};

// Writes summary.csv (method, step, mean, variance, p-value against the
// baseline at that step), significance.csv (final-step paired t-test of
// each method against the baseline) and curve.csv (method, step, mean,
// stddev). Methods are paired with the baseline by seed; the baseline's
// p-value column is left empty.
void WriteReport(const std::vector<NamedMatrix> &runs,
                 const std::string &baseline,
                 const std::filesystem::path &out_dir);

}  // namespace cfrl

#endif  // CFRL_REPORT_H_
