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

#include "cfrl/encoder.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "cfrl/benchmark.h"

namespace cfrl {

Vocabulary::Vocabulary() {
  Add(kUnknownToken);
  Add(kHeadMarker);
  Add(kTailMarker);
}

int Vocabulary::Add(const std::string &word) {
  auto [it, inserted] = ids_.emplace(word, size());
  if (inserted) words_.push_back(word);
  return it->second;
}

int Vocabulary::Id(const std::string &word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? kUnk : it->second;
}

MarkedSentence MarkEntities(const Sample &sample) {
  ValidateSpans(sample);
  MarkedSentence marked;
  marked.tokens.reserve(sample.tokens.size() + 4);
  const int n = static_cast<int>(sample.tokens.size());
  for (int i = 0; i < n; ++i) {
    if (i == sample.head.start) marked.tokens.push_back(kHeadMarker);
    if (i == sample.tail.start) marked.tokens.push_back(kTailMarker);
    const int pos = static_cast<int>(marked.tokens.size());
    marked.tokens.push_back(sample.tokens[i]);
    if (i == sample.head.start) marked.head.start = pos;
    if (i == sample.head.end) marked.head.end = pos;
    if (i == sample.tail.start) marked.tail.start = pos;
    if (i == sample.tail.end) marked.tail.end = pos;
    if (i == sample.head.end) marked.tokens.push_back(kHeadMarker);
    if (i == sample.tail.end) marked.tokens.push_back(kTailMarker);
  }
  return marked;
}

std::vector<std::string> UnmarkEntities(const MarkedSentence &marked) {
  const int n = static_cast<int>(marked.tokens.size());
  const int markers[4] = {marked.head.start - 1, marked.head.end + 1,
                          marked.tail.start - 1, marked.tail.end + 1};
  std::vector<std::string> tokens;
  tokens.reserve(n >= 4 ? n - 4 : 0);
  for (int i = 0; i < n; ++i) {
    if (std::find(std::begin(markers), std::end(markers), i) ==
        std::end(markers)) {
      tokens.push_back(marked.tokens[i]);
    }
  }
  return tokens;
}

double &EncoderParams::flat(size_t i) {
  const size_t ne = token_embeddings.size();
  const size_t np = projection.size();
  if (i < ne) return token_embeddings.data()[i];
  if (i < ne + np) return projection.data()[i - ne];
  return bias.data()[i - ne - np];
}

double EncoderParams::flat(size_t i) const {
  return const_cast<EncoderParams *>(this)->flat(i);
}

double EncoderGradients::flat(size_t i) const {
  const size_t ne = token_embeddings.size();
  const size_t np = projection.size();
  if (i < ne) return token_embeddings.data()[i];
  if (i < ne + np) return projection.data()[i - ne];
  return bias.data()[i - ne - np];
}

EncoderParams EncoderParams::Zeros(int vocab_size, int embedding_dim,
                                   int output_dim) {
  EncoderParams p;
  p.token_embeddings = Mat::Zero(vocab_size, embedding_dim);
  p.projection = Mat::Zero(output_dim, 3 * embedding_dim);
  p.bias = Vec::Zero(output_dim);
  return p;
}

EncoderParams EncoderParams::Random(int vocab_size, int embedding_dim,
                                    int output_dim, uint64_t seed) {
  EncoderParams p = Zeros(vocab_size, embedding_dim, output_dim);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0,
                                          1.0 / std::sqrt(embedding_dim));
  for (Eigen::Index i = 0; i < p.token_embeddings.size(); ++i) {
    p.token_embeddings.data()[i] = normal(rng);
  }
  const double limit = std::sqrt(6.0 / (3 * embedding_dim + output_dim));
  std::uniform_real_distribution<double> uniform(-limit, limit);
  for (Eigen::Index i = 0; i < p.projection.size(); ++i) {
    p.projection.data()[i] = uniform(rng);
  }
  return p;
}

bool EncoderParams::AllFinite() const {
  return token_embeddings.allFinite() && projection.allFinite() &&
         bias.allFinite();
}

void EncoderParams::Validate() const {
  if (token_embeddings.rows() < 3) {
    throw ValidationError("embedding table must hold the reserved tokens");
  }
  if (projection.rows() != bias.size() ||
      projection.cols() != 3 * token_embeddings.cols()) {
    throw ValidationError("projection shape does not match embedding/output "
                          "dimensions");
  }
  if (!AllFinite()) throw ValidationError("non-finite encoder parameter");
}

namespace {

// Pooled feature [mean(all); mean(head); mean(tail)].
Vec Pool(const EncoderParams &params, const EncoderInput &input) {
  if (input.ids.empty()) throw Error("cannot encode an empty token list");
  const int de = params.embedding_dim();
  Vec pooled = Vec::Zero(3 * de);
  auto all = pooled.segment(0, de);
  for (int id : input.ids) all += params.token_embeddings.row(id).transpose();
  all /= static_cast<double>(input.ids.size());
  auto head = pooled.segment(de, de);
  for (int i = input.head.start; i <= input.head.end; ++i) {
    head += params.token_embeddings.row(input.ids[i]).transpose();
  }
  head /= static_cast<double>(input.head.length());
  auto tail = pooled.segment(2 * de, de);
  for (int i = input.tail.start; i <= input.tail.end; ++i) {
    tail += params.token_embeddings.row(input.ids[i]).transpose();
  }
  tail /= static_cast<double>(input.tail.length());
  return pooled;
}

}  // namespace

Vec EncodeInput(const EncoderParams &params, const EncoderInput &input) {
  return params.projection * Pool(params, input) + params.bias;
}

LossAndGradient ComputeGradient(const EncoderParams &params,
                                std::span<const EncoderInput> inputs,
                                const OutputObjective &objective) {
  std::vector<Vec> pooled;
  std::vector<Vec> outputs;
  pooled.reserve(inputs.size());
  outputs.reserve(inputs.size());
  for (const auto &input : inputs) {
    pooled.push_back(Pool(params, input));
    outputs.push_back(params.projection * pooled.back() + params.bias);
  }
  OutputLoss loss = objective(outputs);
  if (!std::isfinite(loss.value)) {
    throw NumericError("non-finite loss", loss.value);
  }
  if (loss.output_grads.size() != outputs.size()) {
    throw Error("objective returned " +
                std::to_string(loss.output_grads.size()) +
                " output gradients for " + std::to_string(outputs.size()) +
                " outputs");
  }

  const int de = params.embedding_dim();
  LossAndGradient result;
  result.loss = loss.value;
  EncoderGradients &g = result.gradient;
  g.token_embeddings = Mat::Zero(params.vocab_size(), de);
  g.projection = Mat::Zero(params.projection.rows(), params.projection.cols());
  g.bias = Vec::Zero(params.output_dim());

  for (size_t i = 0; i < inputs.size(); ++i) {
    const Vec &dy = loss.output_grads[i];
    if (dy.size() == 0) continue;
    g.bias += dy;
    g.projection.noalias() += dy * pooled[i].transpose();
    const Vec dp = params.projection.transpose() * dy;
    const EncoderInput &input = inputs[i];
    const Vec d_all = dp.segment(0, de) / static_cast<double>(input.ids.size());
    const Vec d_head = dp.segment(de, de) / input.head.length();
    const Vec d_tail = dp.segment(2 * de, de) / input.tail.length();
    for (int id : input.ids) {
      g.token_embeddings.row(id) += d_all.transpose();
      g.touched_rows.push_back(id);
    }
    for (int j = input.head.start; j <= input.head.end; ++j) {
      g.token_embeddings.row(input.ids[j]) += d_head.transpose();
    }
    for (int j = input.tail.start; j <= input.tail.end; ++j) {
      g.token_embeddings.row(input.ids[j]) += d_tail.transpose();
    }
  }
  std::sort(g.touched_rows.begin(), g.touched_rows.end());
  g.touched_rows.erase(
      std::unique(g.touched_rows.begin(), g.touched_rows.end()),
      g.touched_rows.end());
  return result;
}

double EvaluateObjective(const EncoderParams &params,
                         std::span<const EncoderInput> inputs,
                         const OutputObjective &objective) {
  std::vector<Vec> outputs;
  outputs.reserve(inputs.size());
  for (const auto &input : inputs) outputs.push_back(EncodeInput(params, input));
  return objective(outputs).value;
}

WordVectors LoadWordVectors(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  WordVectors vectors;
  std::string line;
  int64_t line_no = 0;
  size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string word;
    if (!(fields >> word)) continue;
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (values.empty()) throw ParseError("word vector has no values", line_no);
    if (dim == 0) dim = values.size();
    if (values.size() != dim) {
      throw ParseError("expected " + std::to_string(dim) + " values, got " +
                           std::to_string(values.size()),
                       line_no);
    }
    vectors[word] = std::move(values);
  }
  return vectors;
}

void SaveWordVectors(const WordVectors &vectors,
                     const std::filesystem::path &path) {
  std::vector<std::string> words;
  for (const auto &entry : vectors) words.push_back(entry.first);
  std::sort(words.begin(), words.end());
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out.precision(17);
  for (const auto &w : words) {
    out << w;
    for (double v : vectors.at(w)) out << ' ' << v;
    out << '\n';
  }
}

Encoder::Encoder(Vocabulary vocab, EncoderParams params)
    : vocab_(std::move(vocab)), params_(std::move(params)) {
  params_.Validate();
  if (params_.vocab_size() != vocab_.size()) {
    throw ValidationError("embedding rows (" +
                          std::to_string(params_.vocab_size()) +
                          ") do not match vocabulary size (" +
                          std::to_string(vocab_.size()) + ")");
  }
}

Encoder Encoder::Create(Vocabulary vocab, int embedding_dim, int output_dim,
                        uint64_t seed, const WordVectors *pretrained) {
  EncoderParams params =
      EncoderParams::Random(vocab.size(), embedding_dim, output_dim, seed);
  if (pretrained != nullptr) {
    for (int id = 0; id < vocab.size(); ++id) {
      auto it = pretrained->find(vocab.words()[id]);
      if (it == pretrained->end()) continue;
      if (static_cast<int>(it->second.size()) != embedding_dim) {
        throw ValidationError("pretrained vector for '" + it->first +
                              "' has dimension " +
                              std::to_string(it->second.size()) +
                              ", expected " + std::to_string(embedding_dim));
      }
      for (int c = 0; c < embedding_dim; ++c) {
        params.token_embeddings(id, c) = it->second[c];
      }
    }
  }
  return Encoder(std::move(vocab), std::move(params));
}

EncoderInput Encoder::Prepare(const MarkedSentence &sentence) const {
  EncoderInput input;
  input.ids.reserve(sentence.tokens.size());
  for (const auto &t : sentence.tokens) input.ids.push_back(vocab_.Id(t));
  input.head = sentence.head;
  input.tail = sentence.tail;
  return input;
}

EncoderInput Encoder::Prepare(const Sample &sample) const {
  return Prepare(MarkEntities(sample));
}

EncoderInput Encoder::PrepareName(const std::vector<std::string> &name) const {
  if (name.empty()) throw Error("relation name is empty");
  EncoderInput input;
  for (const auto &t : name) input.ids.push_back(vocab_.Id(t));
  const int last = static_cast<int>(input.ids.size()) - 1;
  input.head = {0, last};
  input.tail = {0, last};
  return input;
}

Vec Encoder::EncodeSentence(const MarkedSentence &sentence) const {
  return EncodeInput(params_, Prepare(sentence));
}

Vec Encoder::Encode(const Sample &sample) const {
  return EncodeInput(params_, Prepare(sample));
}

Vec Encoder::EncodeRelationName(const std::vector<std::string> &name) const {
  return EncodeInput(params_, PrepareName(name));
}

void Encoder::ApplyGradient(const EncoderGradients &gradient,
                            double learning_rate, bool update_embeddings) {
  params_.projection -= learning_rate * gradient.projection;
  params_.bias -= learning_rate * gradient.bias;
  if (update_embeddings) {
    for (int row : gradient.touched_rows) {
      params_.token_embeddings.row(row) -=
          learning_rate * gradient.token_embeddings.row(row);
    }
  }
  if (!params_.AllFinite()) {
    throw NumericError("parameter update produced a non-finite value",
                       std::nan(""));
  }
}

namespace {

constexpr char kCheckpointMagic[8] = {'C', 'F', 'R', 'L', 'C', 'K', 'P', '1'};

struct NamedTensor {
  const char *name;
  double *data;
  Eigen::Index rows;
  Eigen::Index cols;
};

}  // namespace

void Encoder::Save(const std::filesystem::path &path) const {
  nlohmann::json manifest;
  manifest["vocab"] = vocab_.words();
  manifest["embedding_dim"] = params_.embedding_dim();
  manifest["output_dim"] = params_.output_dim();
  const EncoderParams &p = params_;
  manifest["tensors"] = {
      {{"name", "token_embeddings"},
       {"rows", p.token_embeddings.rows()},
       {"cols", p.token_embeddings.cols()}},
      {{"name", "projection"},
       {"rows", p.projection.rows()},
       {"cols", p.projection.cols()}},
      {{"name", "bias"}, {"rows", p.bias.size()}, {"cols", 1}}};
  const std::string text = manifest.dump();
  const uint64_t length = text.size();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  out.write(reinterpret_cast<const char *>(&length), sizeof(length));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  auto write = [&out](const double *data, Eigen::Index n) {
    out.write(reinterpret_cast<const char *>(data),
              static_cast<std::streamsize>(n * sizeof(double)));
  };
  write(p.token_embeddings.data(), p.token_embeddings.size());
  write(p.projection.data(), p.projection.size());
  write(p.bias.data(), p.bias.size());
  if (!out) throw Error("write failed for " + path.string());
}

Encoder Encoder::Load(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ParseError(path.string() + " is not an encoder checkpoint", 0);
  }
  uint64_t length = 0;
  in.read(reinterpret_cast<char *>(&length), sizeof(length));
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const std::exception &e) {
    throw ParseError(std::string("checkpoint manifest: ") + e.what(), 0);
  }
  Vocabulary vocab;
  const auto words = manifest.at("vocab").get<std::vector<std::string>>();
  for (const auto &w : words) vocab.Add(w);
  if (vocab.size() != static_cast<int>(words.size())) {
    throw ParseError("checkpoint vocabulary has duplicate entries", 0);
  }
  EncoderParams p = EncoderParams::Zeros(
      vocab.size(), manifest.at("embedding_dim").get<int>(),
      manifest.at("output_dim").get<int>());
  NamedTensor tensors[] = {
      {"token_embeddings", p.token_embeddings.data(), p.token_embeddings.rows(),
       p.token_embeddings.cols()},
      {"projection", p.projection.data(), p.projection.rows(),
       p.projection.cols()},
      {"bias", p.bias.data(), p.bias.size(), 1}};
  const auto &listed = manifest.at("tensors");
  if (listed.size() != std::size(tensors)) {
    throw ParseError("checkpoint lists " + std::to_string(listed.size()) +
                         " tensors, expected 3",
                     0);
  }
  for (size_t i = 0; i < std::size(tensors); ++i) {
    const auto &t = tensors[i];
    if (listed[i].at("name") != t.name ||
        listed[i].at("rows").get<Eigen::Index>() != t.rows ||
        listed[i].at("cols").get<Eigen::Index>() != t.cols) {
      throw ParseError(std::string("tensor '") + t.name +
                           "' does not match the manifest dimensions",
                       0);
    }
    in.read(reinterpret_cast<char *>(t.data),
            static_cast<std::streamsize>(t.rows * t.cols * sizeof(double)));
  }
  if (!in) throw ParseError("truncated checkpoint " + path.string(), 0);
  return Encoder(std::move(vocab), std::move(p));
}

uint64_t Encoder::Fingerprint() const {
  uint64_t hash = Fnv1a("encoder");
  for (const auto &w : vocab_.words()) {
    hash = Fnv1a(w, hash);
    hash = Fnv1a(std::string_view("\0", 1), hash);
  }
  auto mix = [&hash](const double *data, Eigen::Index n) {
    hash = Fnv1a(std::string_view(reinterpret_cast<const char *>(data),
                                  n * sizeof(double)),
                 hash);
  };
  mix(params_.token_embeddings.data(), params_.token_embeddings.size());
  mix(params_.projection.data(), params_.projection.size());
  mix(params_.bias.data(), params_.bias.size());
  return hash;
}

}  // namespace cfrl
