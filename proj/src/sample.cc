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

#include "cfrl/sample.h"

namespace cfrl {

std::string SpanText(const std::vector<std::string> &tokens, const Span &span) {
  std::string text;
  for (int i = span.start; i <= span.end; ++i) {
    if (i > span.start) text.push_back(' ');
    text += tokens[i];
  }
  return text;
}

std::string Sample::HeadText() const { return SpanText(tokens, head); }
std::string Sample::TailText() const { return SpanText(tokens, tail); }

void ValidateSpans(const Sample &sample) {
  const int n = static_cast<int>(sample.tokens.size());
  auto check = [n](const Span &span, const char *what) {
    if (span.start < 0 || span.end < span.start || span.end >= n) {
      throw ValidationError(std::string(what) + " span [" +
                            std::to_string(span.start) + ", " +
                            std::to_string(span.end) + "] out of bounds for " +
                            std::to_string(n) + " tokens");
    }
  };
  check(sample.head, "head");
  check(sample.tail, "tail");
  if (sample.head.Overlaps(sample.tail)) {
    throw ValidationError("head and tail spans overlap");
  }
}

nlohmann::json SampleToJson(const Sample &sample) {
  nlohmann::json record;
  record["tokens"] = sample.tokens;
  record["head"] = {{"span", {sample.head.start, sample.head.end}}};
  record["tail"] = {{"span", {sample.tail.start, sample.tail.end}}};
  if (!sample.relation.empty()) record["relation"] = sample.relation;
  if (sample.source == Source::kAugmented) record["source"] = "augmented";
  if (sample.id >= 0) record["id"] = sample.id;
  return record;
}

namespace {

Span ReadSpan(const nlohmann::json &record, const char *key) {
  if (!record.contains(key)) {
    throw Error(std::string("missing field '") + key + "'");
  }
  const auto &span = record.at(key).at("span");
  if (!span.is_array() || span.size() != 2) {
    throw Error(std::string("field '") + key + ".span' must be [start, end]");
  }
  return Span{span[0].get<int>(), span[1].get<int>()};
}

}  // namespace

Sample SampleFromJson(const nlohmann::json &record) {
  if (!record.is_object()) throw Error("record is not an object");
  Sample sample;
  sample.tokens = record.at("tokens").get<std::vector<std::string>>();
  sample.head = ReadSpan(record, "head");
  sample.tail = ReadSpan(record, "tail");
  if (record.contains("relation")) {
    sample.relation = record["relation"].get<std::string>();
  }
  if (record.contains("source") && record["source"] == "augmented") {
    sample.source = Source::kAugmented;
  }
  if (record.contains("id")) sample.id = record["id"].get<int64_t>();
  return sample;
}

}  // namespace cfrl
