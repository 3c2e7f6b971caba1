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

#ifndef CFRL_ENCODER_H_
#define CFRL_ENCODER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "cfrl/sample.h"

namespace cfrl {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr const char *kUnknownToken = "<unk>";
inline constexpr const char *kHeadMarker = "#";
inline constexpr const char *kTailMarker = "@";

// Word to row mapping. Ids 0..2 are reserved for the unknown token and the
// two entity markers.
class Vocabulary {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kHead = 1;
  static constexpr int kTail = 2;

  Vocabulary();

  int Add(const std::string &word);
  void AddAll(const std::vector<std::string> &words) {
    for (const auto &w : words) Add(w);
  }
  // Returns kUnk for out-of-vocabulary words.
  int Id(const std::string &word) const;
  bool Contains(const std::string &word) const { return ids_.count(word) > 0; }

  const std::vector<std::string> &words() const { return words_; }
  int size() const { return static_cast<int>(words_.size()); }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> ids_;
};

// A sentence with '#' around the head mention and '@' around the tail
// mention. The spans cover the original entity tokens, not the markers.
struct MarkedSentence {
  std::vector<std::string> tokens;
  Span head;
  Span tail;
};

MarkedSentence MarkEntities(const Sample &sample);

// Drops the four marker tokens, recovering the original token sequence.
std::vector<std::string> UnmarkEntities(const MarkedSentence &marked);

// Token ids plus the head and tail pooling windows. For relation names both
// windows cover the whole input.
struct EncoderInput {
  std::vector<int> ids;
  Span head;
  Span tail;
};

struct EncoderParams {
  Mat token_embeddings;  // vocab x d_e
  Mat projection;        // d x 3*d_e
  Vec bias;              // d

  int vocab_size() const { return static_cast<int>(token_embeddings.rows()); }
  int embedding_dim() const {
    return static_cast<int>(token_embeddings.cols());
  }
  int output_dim() const { return static_cast<int>(bias.size()); }
  size_t num_parameters() const {
    return token_embeddings.size() + projection.size() + bias.size();
  }

  // Flat view used by finite-difference checks: embeddings, then projection,
  // then bias, each in column-major order.
  double &flat(size_t i);
  double flat(size_t i) const;

  static EncoderParams Zeros(int vocab_size, int embedding_dim, int output_dim);
  // Gaussian embeddings with stddev 1/sqrt(d_e), Glorot-uniform projection,
  // zero bias.
  static EncoderParams Random(int vocab_size, int embedding_dim,
                              int output_dim, uint64_t seed);

  bool AllFinite() const;
  // Throws ValidationError on inconsistent shapes or non-finite entries.
  void Validate() const;
};

struct EncoderGradients {
  Mat token_embeddings;
  Mat projection;
  Vec bias;
  // Embedding rows with nonzero contribution, sorted and unique.
  std::vector<int> touched_rows;

  double flat(size_t i) const;
};

// projection * [mean(all); mean(head); mean(tail)] + bias.
Vec EncodeInput(const EncoderParams &params, const EncoderInput &input);

// Objective over encoder outputs: returns the scalar value and its gradient
// with respect to every output vector.
struct OutputLoss {
  double value = 0.0;
  std::vector<Vec> output_grads;
};
using OutputObjective = std::function<OutputLoss(const std::vector<Vec> &)>;

struct LossAndGradient {
  double loss = 0.0;
  EncoderGradients gradient;
};

// Backpropagates the objective through the encoder into the parameters.
// Throws NumericError if the loss is not finite.
LossAndGradient ComputeGradient(const EncoderParams &params,
                                std::span<const EncoderInput> inputs,
                                const OutputObjective &objective);

// Forward-only evaluation of the same composition.
double EvaluateObjective(const EncoderParams &params,
                         std::span<const EncoderInput> inputs,
                         const OutputObjective &objective);

// Whitespace-separated "word v1 v2 ..." lines, one word per line.
using WordVectors = std::unordered_map<std::string, std::vector<double>>;
WordVectors LoadWordVectors(const std::filesystem::path &path);
void SaveWordVectors(const WordVectors &vectors,
                     const std::filesystem::path &path);

class Encoder {
 public:
  Encoder() = default;
  Encoder(Vocabulary vocab, EncoderParams params);

  // Random initialization; rows of words found in `pretrained` are copied
  // from it instead (dimension must match).
  static Encoder Create(Vocabulary vocab, int embedding_dim, int output_dim,
                        uint64_t seed, const WordVectors *pretrained = nullptr);

  EncoderInput Prepare(const MarkedSentence &sentence) const;
  EncoderInput Prepare(const Sample &sample) const;
  EncoderInput PrepareName(const std::vector<std::string> &name) const;

  Vec EncodeSentence(const MarkedSentence &sentence) const;
  Vec Encode(const Sample &sample) const;
  Vec EncodeRelationName(const std::vector<std::string> &name) const;

  LossAndGradient Gradient(std::span<const EncoderInput> inputs,
                           const OutputObjective &objective) const {
    return ComputeGradient(params_, inputs, objective);
  }

  // Plain SGD step. Embeddings stay fixed when `update_embeddings` is false.
  void ApplyGradient(const EncoderGradients &gradient, double learning_rate,
                     bool update_embeddings = true);

  const Vocabulary &vocab() const { return vocab_; }
  const EncoderParams &params() const { return params_; }
  EncoderParams &mutable_params() { return params_; }
  int output_dim() const { return params_.output_dim(); }

  // Binary checkpoint: magic, JSON manifest (tensor names, shapes,
  // vocabulary), raw little-endian doubles. Round-trips bitwise.
  void Save(const std::filesystem::path &path) const;
  static Encoder Load(const std::filesystem::path &path);

  // FNV-1a over the vocabulary and raw parameter bytes.
  uint64_t Fingerprint() const;

 private:
  Vocabulary vocab_;
  EncoderParams params_;
};

}  // namespace cfrl

#endif  // CFRL_ENCODER_H_
