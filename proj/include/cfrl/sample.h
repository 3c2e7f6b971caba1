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

#ifndef CFRL_SAMPLE_H_
#define CFRL_SAMPLE_H_

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace cfrl {

// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input record. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string &message, int64_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + message
                       : message),
        line_(line) {}
  int64_t line() const { return line_; }

 private:
  int64_t line_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConstructionError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public Error {
 public:
  using Error::Error;
};

// Raised when a loss or parameter becomes NaN or infinite.
class NumericError : public Error {
 public:
  NumericError(const std::string &message, double value)
      : Error(message + " (value " + std::to_string(value) + ")"),
        value_(value) {}
  double value() const { return value_; }

 private:
  double value_;
};

// Inclusive, 0-based token interval.
struct Span {
  int start = 0;
  int end = 0;

  int length() const { return end - start + 1; }
  bool Contains(int i) const { return i >= start && i <= end; }
  bool Overlaps(const Span &other) const {
    return start <= other.end && other.start <= end;
  }
  bool operator==(const Span &) const = default;
};

enum class Source { kOriginal, kAugmented };

// A tokenized sentence with head/tail entity mentions. Labeled samples carry
// a relation identifier; corpus records leave it empty.
struct Sample {
  std::vector<std::string> tokens;
  Span head;
  Span tail;
  std::string relation;
  Source source = Source::kOriginal;
  // Position of the record in the file it was loaded from.
  int64_t id = -1;

  std::string HeadText() const;
  std::string TailText() const;

  bool operator==(const Sample &) const = default;
};

// Space-joined surface form of a token interval.
std::string SpanText(const std::vector<std::string> &tokens, const Span &span);

// Throws ValidationError unless both spans lie inside the sentence without
// overlapping.
void ValidateSpans(const Sample &sample);

// Line-record encoding: {"tokens": [...], "head": {"span": [s, e]},
// "tail": {"span": [s, e]}, "relation": "..."}. `relation` is omitted when
// empty; `source` and `id` are written only when non-default.
nlohmann::json SampleToJson(const Sample &sample);
Sample SampleFromJson(const nlohmann::json &record);

}  // namespace cfrl

#endif  // CFRL_SAMPLE_H_
