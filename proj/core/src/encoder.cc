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

#include "readrank/encoder.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "readrank/errors.h"

namespace readrank {

const char *ContextModeName(ContextMode mode) {
  switch (mode) {
    case ContextMode::kMultiDim:
      return "multidim";
    case ContextMode::kSingleDim:
      return "singledim";
    case ContextMode::kNone:
      return "none";
  }
  return "?";
}

ContextMode ParseContextMode(const std::string &name) {
  if (name == "multidim") return ContextMode::kMultiDim;
  if (name == "singledim") return ContextMode::kSingleDim;
  if (name == "none") return ContextMode::kNone;
  throw ConfigError("unknown context mode '" + name +
                    "' (expected multidim, singledim or none)");
}

const char *CellTypeName(CellType cell) {
  return cell == CellType::kLstm ? "lstm" : "gru";
}

CellType ParseCellType(const std::string &name) {
  if (name == "lstm") return CellType::kLstm;
  if (name == "gru") return CellType::kGru;
  throw ConfigError("unknown recurrent cell '" + name + "'");
}

void EncoderConfig::Validate() const {
  auto fail = [](const std::string &msg) { throw ConfigError(msg); };
  if (vocab_size < 2) fail("vocabulary must hold at least PAD and UNK");
  if (d_embed < 1 || d_hidden < 1) fail("embedding and hidden widths must be positive");
  if (kernels != d()) {
    fail("kernel count (" + std::to_string(kernels) +
         ") must equal the word-state width 2*d_hidden (" +
         std::to_string(d()) + ")");
  }
  if (window < 1 || window % 2 == 0) fail("convolution window must be odd");
  if (heads < 1 || d() % heads != 0) {
    fail("word-state width " + std::to_string(d()) +
         " is not divisible by " + std::to_string(heads) + " heads");
  }
  if (layers < 1) fail("sentence layer needs at least one block");
  if (levels < 2) fail("at least two readability levels are required");
  if (n_max < 1 || m_max < 1) fail("n_max and m_max must be positive");
}

WordLayer::WordLayer(ParameterSet &params, const std::string &prefix,
                     const EncoderConfig &config, std::mt19937_64 &rng)
    : config_(config) {
  const int d = config.d();
  embedding_ = &params.Add(prefix + "embed", config.vocab_size, config.d_embed);
  GlorotInit(embedding_->value, rng);
  embedding_->value.row(Vocabulary::kPad).setZero();
  rnn_ = BiRnn::Create(params, prefix + "rnn", config.cell, config.d_embed,
                       config.d_hidden, rng);
  conv_ = Linear::Create(params, prefix + "conv", config.window * d,
                         config.kernels, rng);
  if (config.context == ContextMode::kMultiDim) {
    attention_ = MultiHeadAttention::Create(params, prefix + "attn", d,
                                            config.kernels, d, config.heads,
                                            rng);
  }
}

Var WordLayer::Embed(Graph &g, std::span<const int> ids) const {
  bool has_pad = false;
  for (int id : ids) {
    if (id < 0 || id >= config_.vocab_size) {
      throw DataError("token id " + std::to_string(id) +
                      " outside vocabulary of size " +
                      std::to_string(config_.vocab_size));
    }
    has_pad = has_pad || id == Vocabulary::kPad;
  }
  Var rows = ad::GatherRows(g.Param(*embedding_), ids);
  if (!has_pad) return rows;
  Matrix mask(static_cast<Eigen::Index>(ids.size()), config_.d_embed);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    mask.row(static_cast<Eigen::Index>(i))
        .setConstant(ids[i] == Vocabulary::kPad ? 0.0 : 1.0);
  }
  return ad::Mul(rows, g.Constant(std::move(mask)));
}

Var WordLayer::EncodeWords(Graph &g, Var embedded) const {
  return rnn_.Forward(g, embedded);
}

Var WordLayer::ContextVectors(Graph &g, Var states) const {
  const int half = config_.window / 2;
  std::vector<Var> taps;
  taps.reserve(static_cast<std::size_t>(config_.window));
  for (int t = 0; t < config_.window; ++t) {
    taps.push_back(t == half ? states : ad::ShiftRows(states, t - half));
  }
  return conv_.Forward(g, ad::ConcatCols(taps));
}

Var WordLayer::ContextWeights(Graph &g, Var states, Var context) const {
  if (config_.context != ContextMode::kMultiDim) {
    throw std::logic_error("context weights need the multidim word layer");
  }
  if (states.rows() != context.rows() || context.cols() != config_.kernels) {
    throw std::invalid_argument("context vectors do not match word states");
  }
  Var scores = attention_.Forward(g, states, states, context);
  return ad::SoftmaxCols(ad::Relu(scores));
}

Var WordLayer::SentenceVector(Var states, Var weights) {
  return ad::ColSums(ad::Mul(weights, states));
}

Var WordLayer::SingleDimSentenceVector(Graph &g, Var states) const {
  const int m = states.rows();
  const int l = config_.window;
  Var padded = states;
  if (m < l) {
    std::vector<int> rows(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) rows[static_cast<std::size_t>(i)] = i;
    padded = ad::ScatterRows(states, rows, l);
  }
  const int windows = std::max(m, l) - l + 1;
  std::vector<Var> taps;
  taps.reserve(static_cast<std::size_t>(l));
  for (int t = 0; t < l; ++t) taps.push_back(ad::SliceRows(padded, t, windows));
  Var windowed = conv_.Forward(g, ad::ConcatCols(taps));  // windows x k
  Var pooled = ad::MeanRows(windowed);                    // 1 x k
  Var word_scores = ad::MatMul(states, ad::Transpose(pooled));  // m x 1
  Var weights = ad::SoftmaxCols(word_scores);
  return ad::MatMul(ad::Transpose(weights), states);
}

Var WordLayer::Encode(Graph &g, std::span<const int> ids) const {
  std::size_t m = 0;
  while (m < ids.size() && ids[m] != Vocabulary::kPad) ++m;
  if (m == 0) throw DataError("cannot encode an all-PAD sentence");
  Var states = EncodeWords(g, Embed(g, ids.first(m)));
  switch (config_.context) {
    case ContextMode::kMultiDim: {
      Var context = ContextVectors(g, states);
      return SentenceVector(states, ContextWeights(g, states, context));
    }
    case ContextMode::kSingleDim:
      return SingleDimSentenceVector(g, states);
    case ContextMode::kNone:
      return ad::MeanRows(states);
  }
  return Var{};
}

SentenceLayer::SentenceLayer(ParameterSet &params, const std::string &prefix,
                             const EncoderConfig &config,
                             std::mt19937_64 &rng) {
  const int d = config.d();
  for (int i = 0; i < config.layers; ++i) {
    const std::string p = prefix + std::to_string(i) + ".";
    Block b;
    b.attention =
        MultiHeadAttention::Create(params, p + "attn", d, d, d, config.heads, rng);
    b.norm1 = LayerNorm::Create(params, p + "norm1", d);
    b.gate1_o = Linear::Create(params, p + "gate1.o", d, d, rng, false);
    b.gate1_h = Linear::Create(params, p + "gate1.h", d, d, rng);
    b.ffn = Linear::Create(params, p + "ffn", d, d, rng);
    b.norm2 = LayerNorm::Create(params, p + "norm2", d);
    b.gate2_f = Linear::Create(params, p + "gate2.f", d, d, rng, false);
    b.gate2_e = Linear::Create(params, p + "gate2.e", d, d, rng);
    blocks_.push_back(b);
  }
  fuse_f_ = Linear::Create(params, prefix + "fuse.f", 2 * d, d, rng);
  fuse_g_ = Linear::Create(params, prefix + "fuse.g", 2 * d, d, rng);
}

namespace {

// gate (.) a + (1 - gate) (.) b
Var Interpolate(Var gate, Var a, Var b) {
  return ad::Add(ad::Mul(gate, a), ad::Mul(ad::OneMinus(gate), b));
}

}  // namespace

Var SentenceLayer::BlockForward(Graph &g, const Block &block, Var h,
                                Trace *trace) const {
  Var o = block.norm1.Forward(g, block.attention.Forward(g, h, h, h));
  Var g1 = ad::Sigmoid(
      ad::Add(block.gate1_o.Forward(g, o), block.gate1_h.Forward(g, h)));
  Var e = Interpolate(g1, h, o);
  Var f = block.norm2.Forward(g, ad::Relu(block.ffn.Forward(g, e)));
  Var g2 = ad::Sigmoid(
      ad::Add(block.gate2_f.Forward(g, f), block.gate2_e.Forward(g, e)));
  Var v = Interpolate(g2, e, f);
  if (trace != nullptr) *trace = Trace{o, g1, e, f, g2, v};
  return v;
}

Var SentenceLayer::Fuse(Graph &g, Var h, Var v, Var *fused, Var *gate) const {
  std::vector<Var> parts = {h, v};
  Var hv = ad::ConcatCols(parts);
  Var f = ad::Relu(fuse_f_.Forward(g, hv));
  Var gt = ad::Sigmoid(fuse_g_.Forward(g, hv));
  if (fused != nullptr) *fused = f;
  if (gate != nullptr) *gate = gt;
  return Interpolate(gt, f, h);
}

Var SentenceLayer::Forward(Graph &g, Var h) const {
  Var v = h;
  for (const Block &b : blocks_) v = BlockForward(g, b, v);
  return Fuse(g, h, v);
}

DocumentLayer::DocumentLayer(ParameterSet &params, const std::string &prefix,
                             int d, std::mt19937_64 &rng) {
  inner_ = Linear::Create(params, prefix + "inner", d, d, rng);
  outer_ = Linear::Create(params, prefix + "outer", d, d, rng);
}

DocumentLayer::Output DocumentLayer::Forward(Graph &g, Var u) const {
  if (u.rows() < 1) throw DataError("document has no real sentences");
  Var scores = outer_.Forward(g, ad::Relu(inner_.Forward(g, u)));
  Output out;
  out.feature_weights = ad::SoftmaxCols(scores);
  out.vector = ad::ColSums(ad::Mul(out.feature_weights, u));
  out.weights =
      ad::Scale(ad::RowSums(out.feature_weights), 1.0 / static_cast<double>(u.cols()));
  return out;
}

HierarchicalEncoder::HierarchicalEncoder(const EncoderConfig &config,
                                         std::uint64_t seed,
                                         const std::string &prefix)
    : config_(config), prefix_(prefix) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  word_ = WordLayer(params_, prefix + "word.", config_, rng);
  sentence_ = SentenceLayer(params_, prefix + "sent.", config_, rng);
  document_ = DocumentLayer(params_, prefix + "doc.", config_.d(), rng);
  classifier_ =
      Linear::Create(params_, prefix + "cls", config_.d(), config_.levels, rng);
}

HierarchicalEncoder::Output HierarchicalEncoder::Forward(
    Graph &g, const TokenizedDocument &doc) const {
  if (doc.n_max != config_.n_max || doc.m_max != config_.m_max) {
    throw DataError("document grid " + std::to_string(doc.n_max) + "x" +
                    std::to_string(doc.m_max) + " does not match encoder " +
                    std::to_string(config_.n_max) + "x" +
                    std::to_string(config_.m_max));
  }
  Output out;
  out.real_rows = doc.RealSentenceRows();
  if (out.real_rows.empty()) {
    throw DataError("document '" + doc.id + "' has no real sentences");
  }
  std::vector<Var> sentences;
  sentences.reserve(out.real_rows.size());
  for (int row : out.real_rows) sentences.push_back(word_.Encode(g, doc.row(row)));
  out.sentence_vectors = ad::ConcatRows(sentences);
  out.sentence_reps = sentence_.Forward(g, out.sentence_vectors);
  DocumentLayer::Output d = document_.Forward(g, out.sentence_reps);
  out.doc_vector = d.vector;
  out.doc_attention = d.weights;
  out.logits = classifier_.Forward(g, out.doc_vector);
  out.probs = ad::SoftmaxRows(out.logits);
  return out;
}

Var HierarchicalEncoder::Classify(Graph &g, Var doc_vector) const {
  return ad::SoftmaxRows(classifier_.Forward(g, doc_vector));
}

Matrix HierarchicalEncoder::ToGrid(const Matrix &rows,
                                   std::span<const int> real_rows, int n_max) {
  Matrix grid = Matrix::Zero(n_max, rows.cols());
  for (std::size_t i = 0; i < real_rows.size(); ++i) {
    grid.row(real_rows[i]) = rows.row(static_cast<Eigen::Index>(i));
  }
  return grid;
}

int LoadWordVectors(const std::string &path, const Vocabulary &vocab,
                    Parameter &embedding) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open word vectors: " + path);
  if (embedding.value.rows() != vocab.size()) {
    throw DataError("embedding table has " +
                    std::to_string(embedding.value.rows()) +
                    " rows for a vocabulary of " + std::to_string(vocab.size()));
  }
  const Eigen::Index width = embedding.value.cols();
  std::string line;
  int line_no = 0;
  int filled = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> values;
    double v = 0.0;
    while (fields >> v) values.push_back(v);
    if (!fields.eof()) {
      throw DataError(path + ":" + std::to_string(line_no) +
                      ": non-numeric vector component");
    }
    if (line_no == 1 && values.size() == 1) continue;  // "count D" header
    if (static_cast<Eigen::Index>(values.size()) != width) {
      throw DataError(path + ":" + std::to_string(line_no) + ": vector has " +
                      std::to_string(values.size()) + " components, expected " +
                      std::to_string(width));
    }
    if (!vocab.Contains(token)) continue;
    const int id = vocab.Lookup(token);
    if (id == Vocabulary::kPad) continue;
    for (Eigen::Index j = 0; j < width; ++j) {
      embedding.value(id, j) = values[static_cast<std::size_t>(j)];
    }
    ++filled;
  }
  return filled;
}

}  // namespace readrank
