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

#include "cfrl/report.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cfrl/sample.h"
#include "cfrl/stats.h"

namespace cfrl {

namespace {

std::string Fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::ofstream OpenOutput(const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

std::vector<double> AccuracyMatrix::Column(size_t step) const {
  std::vector<double> column;
  column.reserve(rows.size());
  for (const auto &row : rows) column.push_back(row.at(step));
  return column;
}

std::vector<double> AccuracyMatrix::Mean() const {
  std::vector<double> out;
  for (size_t k = 0; k < num_steps(); ++k) out.push_back(cfrl::Mean(Column(k)));
  return out;
}

std::vector<double> AccuracyMatrix::Variance() const {
  std::vector<double> out;
  for (size_t k = 0; k < num_steps(); ++k) {
    out.push_back(SampleVariance(Column(k)));
  }
  return out;
}

void AccuracyMatrix::WriteCsv(const std::filesystem::path &path) const {
  std::ofstream out = OpenOutput(path);
  out << "seed";
  for (size_t k = 1; k <= num_steps(); ++k) out << ",step_" << k;
  out << '\n';
  for (size_t i = 0; i < rows.size(); ++i) {
    out << seeds[i];
    for (double v : rows[i]) out << ',' << Fixed(v);
    out << '\n';
  }
}

AccuracyMatrix AccuracyMatrix::ReadCsv(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  AccuracyMatrix m;
  std::string line;
  int64_t line_no = 0;
  size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (line_no == 1) {
      if (fields.empty() || fields[0] != "seed") {
        throw ParseError("accuracy matrix header must start with 'seed'", 1);
      }
      width = fields.size();
      continue;
    }
    if (fields.size() != width) {
      throw ParseError("expected " + std::to_string(width) + " columns",
                       line_no);
    }
    try {
      m.seeds.push_back(std::stoull(fields[0]));
      std::vector<double> row;
      for (size_t i = 1; i < fields.size(); ++i) {
        row.push_back(std::stod(fields[i]));
      }
      m.rows.push_back(std::move(row));
    } catch (const std::exception &e) {
      throw ParseError(e.what(), line_no);
    }
  }
  return m;
}

namespace {

// Baseline column aligned to `run`'s seeds; empty if any seed is missing.
std::vector<double> AlignedBaseline(const AccuracyMatrix &run,
                                    const AccuracyMatrix &baseline,
                                    size_t step) {
  std::map<uint64_t, double> by_seed;
  for (size_t i = 0; i < baseline.rows.size(); ++i) {
    by_seed[baseline.seeds[i]] = baseline.rows[i].at(step);
  }
  std::vector<double> aligned;
  for (uint64_t seed : run.seeds) {
    auto it = by_seed.find(seed);
    if (it == by_seed.end()) return {};
    aligned.push_back(it->second);
  }
  return aligned;
}

}  // namespace

void WriteReport(const std::vector<NamedMatrix> &runs,
                 const std::string &baseline,
                 const std::filesystem::path &out_dir) {
  std::filesystem::create_directories(out_dir);
  const AccuracyMatrix *base = nullptr;
  for (const auto &run : runs) {
    if (run.method == baseline) base = &run.matrix;
  }
  if (!baseline.empty() && base == nullptr) {
    throw Error("baseline '" + baseline + "' is not among the runs");
  }

  std::ofstream summary = OpenOutput(out_dir / "summary.csv");
  std::ofstream curve = OpenOutput(out_dir / "curve.csv");
  std::ofstream significance = OpenOutput(out_dir / "significance.csv");
  summary << "method,step,mean,variance,p_value\n";
  curve << "method,step,mean,stddev\n";
  significance << "method,baseline,final_mean,baseline_final_mean,t,df,"
                  "p_value,degenerate\n";

  for (const auto &run : runs) {
    const auto mean = run.matrix.Mean();
    const auto variance = run.matrix.Variance();
    for (size_t k = 0; k < mean.size(); ++k) {
      std::string p;
      if (base != nullptr && &run.matrix != base && run.matrix.rows.size() >= 2) {
        const auto aligned = AlignedBaseline(run.matrix, *base, k);
        if (!aligned.empty()) {
          p = Fixed(PairedTTest(run.matrix.Column(k), aligned).p_value, 8);
        }
      }
      summary << run.method << ',' << k + 1 << ',' << Fixed(mean[k]) << ','
              << Fixed(variance[k], 8) << ',' << p << '\n';
      curve << run.method << ',' << k + 1 << ',' << Fixed(mean[k]) << ','
            << Fixed(std::sqrt(variance[k])) << '\n';
    }
    if (base == nullptr || &run.matrix == base || mean.empty()) continue;
    const size_t last = mean.size() - 1;
    const auto aligned = AlignedBaseline(run.matrix, *base, last);
    if (aligned.size() < 2) continue;
    const TTestResult t = PairedTTest(run.matrix.Column(last), aligned);
    significance << run.method << ',' << baseline << ',' << Fixed(mean[last])
                 << ',' << Fixed(cfrl::Mean(aligned)) << ',' << Fixed(t.t)
                 << ',' << t.df << ',' << Fixed(t.p_value, 8) << ','
                 << (t.degenerate ? "true" : "false") << '\n';
  }
}

}  // namespace cfrl
