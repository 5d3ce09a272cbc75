// Copyright 2026 The readrank Authors.
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

#ifndef READRANK_DSDR_H_
#define READRANK_DSDR_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "readrank/autograd.h"
#include "readrank/corpus.h"
#include "readrank/encoder.h"
#include "readrank/layers.h"
#include "readrank/mdem.h"

namespace readrank {

// Maps one sentence to a 1 x dim() vector.
class SentenceEncoder {
 public:
  virtual ~SentenceEncoder() = default;

  virtual int dim() const = 0;
  // `ids` is a PAD-padded id row, `tokens` the matching surface tokens.
  virtual Var Encode(Graph &g, std::span<const int> ids,
                     const TokenList &tokens) const = 0;
  // Parameters updated by fine-tuning, or nullptr for fixed encoders.
  virtual ParameterSet *trainable() { return nullptr; }
  // Number of sentence grades the encoder was trained on, 0 if unknown.
  virtual int levels() const { return 0; }
};

// Word layer of the hierarchical encoder trained on sentence labels.
class InternalSentenceEncoder : public SentenceEncoder {
 public:
  InternalSentenceEncoder(const EncoderConfig &config, std::uint64_t seed);
  InternalSentenceEncoder(const InternalSentenceEncoder &) = delete;
  InternalSentenceEncoder &operator=(const InternalSentenceEncoder &) = delete;

  int dim() const override { return config_.d(); }
  Var Encode(Graph &g, std::span<const int> ids,
             const TokenList &tokens) const override;
  ParameterSet *trainable() override { return &params_; }
  int levels() const override { return levels_; }
  void set_levels(int levels) { levels_ = levels; }

  const EncoderConfig &config() const { return config_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

 private:
  EncoderConfig config_;
  ParameterSet params_;
  WordLayer word_;
  int levels_ = 0;
};

// Lookup table of precomputed sentence vectors keyed by token sequence.
class ExternalSentenceEncoder : public SentenceEncoder {
 public:
  // Reads JSONL lines {"tokens": [...], "vector": [...]}.
  static ExternalSentenceEncoder Load(const std::string &path);

  void Add(const TokenList &tokens, const RowVector &vector);
  int dim() const override { return dim_; }
  // Throws DataError for sentences missing from the table.
  Var Encode(Graph &g, std::span<const int> ids,
             const TokenList &tokens) const override;
  std::size_t size() const { return table_.size(); }

 private:
  static std::string Key(const TokenList &tokens);

  int dim_ = 0;
  std::unordered_map<std::string, RowVector> table_;
};

// PAD-padded id row of length m_max for one sentence.
std::vector<int> EncodeSentence(const TokenList &tokens,
                                const Vocabulary &vocab, int m_max);

struct EptmResult {
  std::vector<double> epoch_loss;
  double probe_accuracy = 0.0;
};

// Trains `encoder` plus a temporary affine probe by cross-entropy on
// sentence labels in 1..levels. The probe is discarded afterwards.
EptmResult PretrainEptm(InternalSentenceEncoder &encoder,
                        std::span<const SentenceRecord> sentences,
                        const Vocabulary &vocab, int levels,
                        const TrainConfig &config);

struct DsdrConfig {
  int context_layers = 1;
  int heads = 8;
  int prototypes = 0;  // 0 means one per grade
  bool freeze_eptm = true;
  int eptm_epochs = 10;

  void Validate(int d) const;
};

// Sentence-context transformer, difficulty prototypes with cross-attention,
// mean fusion and a classifier over the fused vector.
class DsdrModel {
 public:
  struct Output {
    Var context;     // H^t, n x d
    Var attention;   // m_lvl x n
    Var views;       // R, m_lvl x d
    Var doc_vector;  // T, 1 x d
    Var logits;      // 1 x Y
    Var probs;       // 1 x Y
  };

  DsdrModel(int d, int levels, const DsdrConfig &config, std::uint64_t seed);
  DsdrModel(const DsdrModel &) = delete;
  DsdrModel &operator=(const DsdrModel &) = delete;

  static Matrix PositionalEncoding(int n, int d);

  // Adds sentence positions and runs the context blocks.
  Var Context(Graph &g, Var sentences) const;
  // Prototype queries attend over `context`.
  Var MultiView(Graph &g, Var context, Var *attention = nullptr) const;
  static Var Fuse(Var views);
  Var Classify(Graph &g, Var doc_vector) const;
  Output Forward(Graph &g, Var sentences) const;

  int d() const { return d_; }
  int levels() const { return levels_; }
  int prototypes() const { return static_cast<int>(prototypes_->value.rows()); }
  const DsdrConfig &config() const { return config_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

 private:
  struct Block {
    MultiHeadAttention attention;
    LayerNorm norm1;
    Linear ffn1;
    Linear ffn2;
    LayerNorm norm2;
  };

  int d_;
  int levels_;
  DsdrConfig config_;
  ParameterSet params_;
  std::vector<Block> blocks_;
  Parameter *prototypes_ = nullptr;
  Linear query_;
  Linear key_;
  Linear value_;
  Linear classifier_;
};

// n_real x d sentence vectors of a document.
Var EncodeDocSentences(Graph &g, const SentenceEncoder &encoder,
                       const TokenizedDocument &doc);

struct DsdrEpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0;
};

using DsdrEpochCallback = std::function<void(const DsdrEpochStats &)>;

// Trains the context encoder, prototypes and classifier on document grades.
// The encoder is fine-tuned only when `config.freeze_eptm` is false and it
// exposes trainable parameters. Throws DataError when grade counts disagree.
std::vector<DsdrEpochStats> TrainDsdr(
    DsdrModel &model, SentenceEncoder &encoder,
    const std::vector<TokenizedDocument> &train, const TrainConfig &config,
    const DsdrEpochCallback &on_epoch = {});

// Fused vectors T, one row per document.
Matrix DocumentVectors(const DsdrModel &model, const SentenceEncoder &encoder,
                       std::span<const TokenizedDocument> docs);
// Class probabilities, one row per document.
Matrix PredictDsdr(const DsdrModel &model, const SentenceEncoder &encoder,
                   std::span<const TokenizedDocument> docs);

}  // namespace readrank

#endif  // READRANK_DSDR_H_
