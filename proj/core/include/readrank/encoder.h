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

#ifndef READRANK_ENCODER_H_
#define READRANK_ENCODER_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "readrank/autograd.h"
#include "readrank/corpus.h"
#include "readrank/layers.h"

namespace readrank {

// How the word layer pools word states into a sentence vector.
enum class ContextMode {
  kMultiDim,   // per-feature context weights from attention over conv context
  kSingleDim,  // one weight per word from mean-pooled valid-window context
  kNone,       // plain mean of word states
};

const char *ContextModeName(ContextMode mode);
ContextMode ParseContextMode(const std::string &name);
const char *CellTypeName(CellType cell);
CellType ParseCellType(const std::string &name);

struct EncoderConfig {
  int vocab_size = 2;
  int d_embed = 400;
  int d_hidden = 100;  // per direction; word states are 2 * d_hidden wide
  int kernels = 200;   // must equal 2 * d_hidden
  int window = 3;
  int heads = 8;
  int layers = 2;
  int levels = 3;
  int n_max = 50;
  int m_max = 50;
  CellType cell = CellType::kLstm;
  ContextMode context = ContextMode::kMultiDim;

  int d() const { return 2 * d_hidden; }
  // Throws ConfigError describing the first violated constraint.
  void Validate() const;
};

// Embedding, bidirectional recurrence, and context-weighted pooling of one
// sentence into a d-wide vector. Shared by the hierarchical encoder and the
// sentence pre-training encoder.
class WordLayer {
 public:
  WordLayer() = default;
  WordLayer(ParameterSet &params, const std::string &prefix,
            const EncoderConfig &config, std::mt19937_64 &rng);

  // Embeds a row of ids; PAD ids map to zero rows. Throws DataError on ids
  // outside the vocabulary.
  Var Embed(Graph &g, std::span<const int> ids) const;
  // Word states for the real (non-PAD) prefix: m_real x d.
  Var EncodeWords(Graph &g, Var embedded) const;
  // Same-padded convolution, m_real x kernels.
  Var ContextVectors(Graph &g, Var states) const;
  // Along-column normalized weights, m_real x d.
  Var ContextWeights(Graph &g, Var states, Var context) const;
  // Column sums of weights (.) states, 1 x d.
  static Var SentenceVector(Var states, Var weights);
  // Single-dimensional context pooling, 1 x d.
  Var SingleDimSentenceVector(Graph &g, Var states) const;

  // Full pipeline over the real prefix of `ids`, 1 x d.
  Var Encode(Graph &g, std::span<const int> ids) const;

  const EncoderConfig &config() const { return config_; }
  Parameter *embedding() const { return embedding_; }

 private:
  EncoderConfig config_;
  Parameter *embedding_ = nullptr;
  BiRnn rnn_;
  Linear conv_;  // (window * d) x kernels
  MultiHeadAttention attention_;
};

// Stacked gated transformer blocks over sentence vectors followed by the
// feature fusion gate.
class SentenceLayer {
 public:
  struct Block {
    MultiHeadAttention attention;
    LayerNorm norm1;
    Linear gate1_o;  // W11
    Linear gate1_h;  // W12, b1
    Linear ffn;
    LayerNorm norm2;
    Linear gate2_f;  // W21
    Linear gate2_e;  // W22, b2
  };

  // Intermediate values of one block, for inspection and tests.
  struct Trace {
    Var attended;  // norm(MHSA(h))
    Var gate1;
    Var residual;  // e
    Var transformed;  // norm(f(e))
    Var gate2;
    Var output;  // v
  };

  SentenceLayer() = default;
  SentenceLayer(ParameterSet &params, const std::string &prefix,
                const EncoderConfig &config, std::mt19937_64 &rng);

  Var BlockForward(Graph &g, const Block &block, Var h,
                   Trace *trace = nullptr) const;
  // Feature fusion gate merging block input `h` with stack output `v`.
  Var Fuse(Graph &g, Var h, Var v, Var *fused = nullptr,
           Var *gate = nullptr) const;
  // h: n_real x d -> u: n_real x d.
  Var Forward(Graph &g, Var h) const;

  const std::vector<Block> &blocks() const { return blocks_; }

 private:
  std::vector<Block> blocks_;
  Linear fuse_f_;  // W3, b3
  Linear fuse_g_;  // W4, b4
};

// "source2token" attention compressing sentence vectors to one vector.
class DocumentLayer {
 public:
  struct Output {
    Var vector;         // 1 x d
    Var weights;        // n_real x 1, sums to 1
    Var feature_weights;  // n_real x d, each column sums to 1
  };

  DocumentLayer() = default;
  DocumentLayer(ParameterSet &params, const std::string &prefix, int d,
                std::mt19937_64 &rng);

  Output Forward(Graph &g, Var u) const;

 private:
  Linear inner_;  // W2d, b1d
  Linear outer_;  // W1d, b2d
};

// The full hierarchical encoder with its document classifier.
class HierarchicalEncoder {
 public:
  struct Output {
    std::vector<int> real_rows;  // grid rows that hold real sentences
    Var sentence_vectors;  // h^s, n_real x d
    Var sentence_reps;     // u^s, n_real x d
    Var doc_vector;        // 1 x d
    Var doc_attention;     // n_real x 1
    Var logits;            // 1 x Y
    Var probs;             // 1 x Y
  };

  HierarchicalEncoder(const EncoderConfig &config, std::uint64_t seed,
                      const std::string &prefix = "");
  HierarchicalEncoder(const HierarchicalEncoder &) = delete;
  HierarchicalEncoder &operator=(const HierarchicalEncoder &) = delete;

  // Throws DataError when the document has no real sentence.
  Output Forward(Graph &g, const TokenizedDocument &doc) const;
  Var Classify(Graph &g, Var doc_vector) const;

  // Expands n_real rows to the n_max grid, zero at PAD rows.
  static Matrix ToGrid(const Matrix &rows, std::span<const int> real_rows,
                       int n_max);

  const EncoderConfig &config() const { return config_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }
  const WordLayer &word_layer() const { return word_; }
  const SentenceLayer &sentence_layer() const { return sentence_; }
  const DocumentLayer &document_layer() const { return document_; }
  const std::string &prefix() const { return prefix_; }

 private:
  EncoderConfig config_;
  std::string prefix_;
  ParameterSet params_;
  WordLayer word_;
  SentenceLayer sentence_;
  DocumentLayer document_;
  Linear classifier_;
};

// Copies static word vectors into the rows of `embedding` whose vocabulary
// token appears in a whitespace-separated text file ("token v1 ... vD" per
// line, optional "count D" header). PAD stays zero. Returns the number of
// rows filled. Throws DataError on unreadable files or width mismatches.
int LoadWordVectors(const std::string &path, const Vocabulary &vocab,
                    Parameter &embedding);

}  // namespace readrank

#endif  // READRANK_ENCODER_H_
