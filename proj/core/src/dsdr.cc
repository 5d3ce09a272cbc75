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

#include "readrank/dsdr.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "readrank/errors.h"
#include "readrank/optimizer.h"

namespace readrank {
namespace {

// Per-document sentence matrices computed once for a frozen encoder.
std::vector<Matrix> CacheSentenceVectors(
    const SentenceEncoder &encoder, std::span<const TokenizedDocument> docs) {
  std::vector<Matrix> cache;
  cache.reserve(docs.size());
  for (const TokenizedDocument &doc : docs) {
    Graph g(false);
    cache.push_back(EncodeDocSentences(g, encoder, doc).value());
  }
  return cache;
}

void CheckGrades(std::span<const TokenizedDocument> docs, int levels) {
  for (const TokenizedDocument &doc : docs) {
    if (doc.grade < 1 || doc.grade > levels) {
      throw DataError("document '" + doc.id + "' has grade " +
                      std::to_string(doc.grade) + " outside 1.." +
                      std::to_string(levels));
    }
  }
}

}  // namespace

InternalSentenceEncoder::InternalSentenceEncoder(const EncoderConfig &config,
                                                 std::uint64_t seed)
    : config_(config) {
  config_.Validate();
  std::mt19937_64 rng(seed);
  word_ = WordLayer(params_, "eptm.word.", config_, rng);
}

Var InternalSentenceEncoder::Encode(Graph &g, std::span<const int> ids,
                                    const TokenList &) const {
  return word_.Encode(g, ids);
}

std::string ExternalSentenceEncoder::Key(const TokenList &tokens) {
  std::string key;
  for (const std::string &t : tokens) {
    key += t;
    key += '\x1f';
  }
  return key;
}

void ExternalSentenceEncoder::Add(const TokenList &tokens,
                                  const RowVector &vector) {
  if (vector.size() == 0) throw DataError("empty sentence vector");
  if (dim_ == 0) dim_ = static_cast<int>(vector.size());
  if (vector.size() != dim_) {
    throw DataError("sentence vector width " + std::to_string(vector.size()) +
                    " differs from " + std::to_string(dim_));
  }
  table_[Key(tokens)] = vector;
}

ExternalSentenceEncoder ExternalSentenceEncoder::Load(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open sentence vectors: " + path);
  ExternalSentenceEncoder enc;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      const auto tokens = j.at("tokens").get<TokenList>();
      const auto values = j.at("vector").get<std::vector<double>>();
      RowVector v(static_cast<Eigen::Index>(values.size()));
      for (std::size_t i = 0; i < values.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = values[i];
      }
      enc.Add(tokens, v);
    } catch (const nlohmann::json::exception &e) {
      throw DataError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (enc.size() == 0) throw DataError("no sentence vectors in " + path);
  return enc;
}

Var ExternalSentenceEncoder::Encode(Graph &g, std::span<const int>,
                                    const TokenList &tokens) const {
  auto it = table_.find(Key(tokens));
  if (it == table_.end()) {
    std::string text;
    for (const auto &t : tokens) text += t;
    throw DataError("no external vector for sentence '" + text + "'");
  }
  return g.Constant(Matrix(it->second));
}

std::vector<int> EncodeSentence(const TokenList &tokens,
                                const Vocabulary &vocab, int m_max) {
  if (tokens.empty()) throw DataError("empty sentence");
  std::vector<int> ids(static_cast<std::size_t>(m_max), Vocabulary::kPad);
  const int m = std::min<int>(m_max, static_cast<int>(tokens.size()));
  for (int i = 0; i < m; ++i) {
    ids[static_cast<std::size_t>(i)] = vocab.Lookup(tokens[static_cast<std::size_t>(i)]);
  }
  return ids;
}

EptmResult PretrainEptm(InternalSentenceEncoder &encoder,
                        std::span<const SentenceRecord> sentences,
                        const Vocabulary &vocab, int levels,
                        const TrainConfig &config) {
  config.Validate();
  if (sentences.empty()) throw DataError("sentence corpus is empty");
  if (levels < 2) throw DataError("sentence corpus needs at least 2 grades");
  const int m_max = encoder.config().m_max;
  std::vector<std::vector<int>> ids;
  ids.reserve(sentences.size());
  for (const SentenceRecord &s : sentences) {
    if (s.label < 1 || s.label > levels) {
      throw DataError("sentence label " + std::to_string(s.label) +
                      " outside 1.." + std::to_string(levels));
    }
    ids.push_back(EncodeSentence(s.tokens, vocab, m_max));
  }

  std::mt19937_64 rng(config.seed);
  ParameterSet probe_params;
  const Linear probe =
      Linear::Create(probe_params, "eptm.probe", encoder.dim(), levels, rng);
  Adam optimizer({&encoder.params(), &probe_params}, config.adam());

  const std::size_t n = sentences.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  EptmResult result;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      Graph g;
      std::vector<Var> terms;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t k = order[i];
        Var v = encoder.Encode(g, ids[k], sentences[k].tokens);
        Var logp = ad::LogSoftmaxRows(probe.Forward(g, v));
        terms.push_back(ad::Pick(logp, 0, sentences[k].label - 1));
      }
      Var loss = ad::Scale(ad::Sum(ad::ConcatCols(terms)),
                           -1.0 / static_cast<double>(terms.size()));
      if (!std::isfinite(loss.scalar())) {
        throw NumericalError("EPTM loss is not finite");
      }
      g.Backward(loss);
      optimizer.Step();
      epoch_loss += loss.scalar() * static_cast<double>(end - start);
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }

  int correct = 0;
  for (std::size_t k = 0; k < n; ++k) {
    Graph g(false);
    const Matrix logits =
        probe.Forward(g, encoder.Encode(g, ids[k], sentences[k].tokens)).value();
    Eigen::Index best = 0;
    logits.row(0).maxCoeff(&best);
    correct += static_cast<int>(best) == sentences[k].label - 1;
  }
  result.probe_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  encoder.set_levels(levels);
  return result;
}

void DsdrConfig::Validate(int d) const {
  if (context_layers < 0) throw ConfigError("dsdr.context_layers must be >= 0");
  if (heads < 1 || d % heads != 0) {
    throw ConfigError("dsdr.heads must divide the sentence vector width " +
                      std::to_string(d));
  }
  if (prototypes < 0) throw ConfigError("dsdr.prototypes must be >= 0");
  if (eptm_epochs < 0) throw ConfigError("dsdr.eptm_epochs must be >= 0");
}

DsdrModel::DsdrModel(int d, int levels, const DsdrConfig &config,
                     std::uint64_t seed)
    : d_(d), levels_(levels), config_(config) {
  if (d < 1) throw ConfigError("DSDR width must be positive");
  if (levels < 2) throw ConfigError("DSDR needs at least 2 grades");
  config_.Validate(d);
  std::mt19937_64 rng(seed);
  for (int l = 0; l < config_.context_layers; ++l) {
    const std::string p = "dsdr.context." + std::to_string(l);
    Block b;
    b.attention =
        MultiHeadAttention::Create(params_, p + ".attn", d, d, d, config_.heads, rng);
    b.norm1 = LayerNorm::Create(params_, p + ".norm1", d);
    b.ffn1 = Linear::Create(params_, p + ".ffn1", d, d, rng);
    b.ffn2 = Linear::Create(params_, p + ".ffn2", d, d, rng);
    b.norm2 = LayerNorm::Create(params_, p + ".norm2", d);
    blocks_.push_back(b);
  }
  const int m = config_.prototypes > 0 ? config_.prototypes : levels;
  prototypes_ = &params_.Add("dsdr.proto", m, d);
  GlorotInit(prototypes_->value, rng);
  query_ = Linear::Create(params_, "dsdr.cross.q", d, d, rng, false);
  key_ = Linear::Create(params_, "dsdr.cross.k", d, d, rng, false);
  value_ = Linear::Create(params_, "dsdr.cross.v", d, d, rng, false);
  classifier_ = Linear::Create(params_, "dsdr.cls", d, levels, rng);
}

Matrix DsdrModel::PositionalEncoding(int n, int d) {
  Matrix pe(n, d);
  for (int pos = 0; pos < n; ++pos) {
    for (int i = 0; i < d; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(i - i % 2) / d);
      pe(pos, i) = i % 2 == 0 ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return pe;
}

Var DsdrModel::Context(Graph &g, Var sentences) const {
  if (sentences.cols() != d_) {
    throw std::invalid_argument("sentence vectors have width " +
                                std::to_string(sentences.cols()) + ", expected " +
                                std::to_string(d_));
  }
  Var x = ad::Add(sentences, g.Constant(PositionalEncoding(sentences.rows(), d_)));
  for (const Block &b : blocks_) {
    x = b.norm1.Forward(g, ad::Add(x, b.attention.Forward(g, x, x, x)));
    Var f = b.ffn2.Forward(g, ad::Relu(b.ffn1.Forward(g, x)));
    x = b.norm2.Forward(g, ad::Add(x, f));
  }
  return x;
}

Var DsdrModel::MultiView(Graph &g, Var context, Var *attention) const {
  Var q = query_.Forward(g, g.Param(*prototypes_));
  Var k = key_.Forward(g, context);
  Var v = value_.Forward(g, context);
  Var scores = ad::Scale(ad::MatMul(q, ad::Transpose(k)),
                         1.0 / std::sqrt(static_cast<double>(d_)));
  Var weights = ad::SoftmaxRows(scores);
  if (attention != nullptr) *attention = weights;
  return ad::MatMul(weights, v);
}

Var DsdrModel::Fuse(Var views) { return ad::MeanRows(views); }

Var DsdrModel::Classify(Graph &g, Var doc_vector) const {
  return classifier_.Forward(g, doc_vector);
}

DsdrModel::Output DsdrModel::Forward(Graph &g, Var sentences) const {
  Output out;
  out.context = Context(g, sentences);
  out.views = MultiView(g, out.context, &out.attention);
  out.doc_vector = Fuse(out.views);
  out.logits = Classify(g, out.doc_vector);
  out.probs = ad::SoftmaxRows(out.logits);
  return out;
}

Var EncodeDocSentences(Graph &g, const SentenceEncoder &encoder,
                       const TokenizedDocument &doc) {
  const std::vector<int> rows = doc.RealSentenceRows();
  if (rows.empty()) throw DataError("document '" + doc.id + "' has no sentences");
  std::vector<Var> parts;
  parts.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    parts.push_back(encoder.Encode(g, doc.row(rows[i]), doc.tokens.at(i)));
  }
  return ad::ConcatRows(parts);
}

std::vector<DsdrEpochStats> TrainDsdr(DsdrModel &model,
                                      SentenceEncoder &encoder,
                                      const std::vector<TokenizedDocument> &train,
                                      const TrainConfig &config,
                                      const DsdrEpochCallback &on_epoch) {
  config.Validate();
  if (train.empty()) throw DataError("training set is empty");
  if (encoder.dim() != model.d()) {
    throw ConfigError("sentence encoder width " + std::to_string(encoder.dim()) +
                      " differs from DSDR width " + std::to_string(model.d()));
  }
  if (encoder.levels() != 0 && encoder.levels() != model.levels()) {
    throw DataError("sentence corpus has " + std::to_string(encoder.levels()) +
                    " grades but the document corpus has " +
                    std::to_string(model.levels()));
  }
  CheckGrades(train, model.levels());

  const bool fine_tune =
      !model.config().freeze_eptm && encoder.trainable() != nullptr;
  std::vector<Matrix> cache;
  if (!fine_tune) cache = CacheSentenceVectors(encoder, train);
  std::vector<ParameterSet *> trained = {&model.params()};
  if (fine_tune) trained.push_back(encoder.trainable());
  Adam optimizer(trained, config.adam());

  std::mt19937_64 rng(config.seed);
  const std::size_t n = train.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<DsdrEpochStats> history;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    DsdrEpochStats stats;
    stats.epoch = epoch;
    int correct = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      Graph g;
      std::vector<Var> terms;
      for (std::size_t i = start; i < end; ++i) {
        const TokenizedDocument &doc = train[order[i]];
        Var sentences = fine_tune ? EncodeDocSentences(g, encoder, doc)
                                  : g.Constant(cache[order[i]]);
        DsdrModel::Output out = model.Forward(g, sentences);
        Var logp = ad::LogSoftmaxRows(out.logits);
        terms.push_back(ad::Pick(logp, 0, doc.grade - 1));
        Eigen::Index best = 0;
        out.logits.value().row(0).maxCoeff(&best);
        correct += static_cast<int>(best) == doc.grade - 1;
      }
      Var loss = ad::Scale(ad::Sum(ad::ConcatCols(terms)),
                           -1.0 / static_cast<double>(terms.size()));
      if (!std::isfinite(loss.scalar())) {
        throw NumericalError("DSDR loss is not finite");
      }
      g.Backward(loss);
      optimizer.Step();
      if (!model.params().AllFinite()) {
        throw NumericalError("DSDR parameters diverged");
      }
      stats.loss += loss.scalar() * static_cast<double>(end - start) /
                    static_cast<double>(n);
    }
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

Matrix DocumentVectors(const DsdrModel &model, const SentenceEncoder &encoder,
                       std::span<const TokenizedDocument> docs) {
  Matrix out(static_cast<Eigen::Index>(docs.size()), model.d());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Graph g(false);
    DsdrModel::Output o = model.Forward(g, EncodeDocSentences(g, encoder, docs[i]));
    out.row(static_cast<Eigen::Index>(i)) = o.doc_vector.value().row(0);
  }
  return out;
}

Matrix PredictDsdr(const DsdrModel &model, const SentenceEncoder &encoder,
                   std::span<const TokenizedDocument> docs) {
  Matrix out(static_cast<Eigen::Index>(docs.size()), model.levels());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Graph g(false);
    DsdrModel::Output o = model.Forward(g, EncodeDocSentences(g, encoder, docs[i]));
    out.row(static_cast<Eigen::Index>(i)) = o.probs.value().row(0);
  }
  return out;
}

}  // namespace readrank
