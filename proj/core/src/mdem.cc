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

#include "readrank/mdem.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "readrank/errors.h"
#include "readrank/layers.h"

namespace readrank {

void TrainConfig::Validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
  if (!(tau > 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in (0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
  if (!(lr > 0.0)) throw ConfigError("learning rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("weight decay must be >= 0");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (tsa_schedule != "linear" && tsa_schedule != "none") {
    throw ConfigError("unknown TSA schedule '" + tsa_schedule + "'");
  }
}

AdamConfig TrainConfig::adam() const {
  AdamConfig a;
  a.lr = lr;
  a.weight_decay = weight_decay;
  return a;
}

Mdem::Mdem(int d, int heads, int levels, std::uint64_t seed)
    : heads_(heads), levels_(levels) {
  if (heads < 1 || d % heads != 0) {
    throw ConfigError("MDEM width " + std::to_string(d) +
                      " is not divisible by " + std::to_string(heads) +
                      " heads");
  }
  head_width_ = d / heads;
  matrix_ = &params_.Add("mdem.M", d, levels);
  std::mt19937_64 rng(seed);
  // Each head slice is initialized as its own z x Y matrix.
  for (int h = 0; h < heads_; ++h) {
    Matrix slice(head_width_, levels_);
    GlorotInit(slice, rng);
    matrix_->value.middleRows(h * head_width_, head_width_) = slice;
  }
}

Matrix Mdem::Head(int h) const {
  return matrix_->value.middleRows(h * head_width_, head_width_);
}

Var SentenceScores(Graph &g, Var u, const Mdem &mdem) {
  const int z = mdem.head_width();
  if (u.cols() != z * mdem.heads()) {
    throw std::invalid_argument("sentence width does not match MDEM");
  }
  Var m = g.Param(*mdem.parameter());
  Var total;
  for (int h = 0; h < mdem.heads(); ++h) {
    Var a = ad::MatMul(ad::SliceCols(u, h * z, z), ad::SliceRows(m, h * z, z));
    total = total.valid() ? ad::Add(total, a) : a;
  }
  return total;
}

Var DocumentScore(Var scores, Var weights) {
  return ad::MatMul(ad::Transpose(weights), scores);
}

Var CrossEntropy(Var probs, int label) {
  return ad::Scale(ad::Log(ad::Pick(probs, 0, label)), -1.0);
}

double SupervisedLoss(const Matrix &probs, std::span<const int> labels) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size() ||
      labels.empty()) {
    throw std::invalid_argument("SupervisedLoss: one label per row required");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    total -= std::log(
        std::max(probs(static_cast<Eigen::Index>(i), labels[i]), 1e-12));
  }
  return total / static_cast<double>(labels.size());
}

Var ConsistencyLoss(Var scores, const RowVector &target) {
  Graph &g = *scores.graph;
  if (target.size() != scores.cols()) {
    throw std::invalid_argument("ConsistencyLoss: target width mismatch");
  }
  double neg_entropy = 0.0;
  for (Eigen::Index k = 0; k < target.size(); ++k) {
    if (target(k) > 0.0) neg_entropy += target(k) * std::log(target(k));
  }
  Matrix t = target.transpose();
  Var cross = ad::MatMul(ad::LogSoftmaxRows(scores), g.Constant(std::move(t)));
  return ad::AddScalar(ad::Scale(cross, -1.0), neg_entropy);
}

double KlDivergence(const RowVector &p, const RowVector &q) {
  double kl = 0.0;
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    if (p(k) > 0.0) kl += p(k) * std::log(p(k) / std::max(q(k), 1e-300));
  }
  return kl;
}

double TsaThreshold(long step, long total, int levels) {
  const double floor = 1.0 / static_cast<double>(levels);
  if (total <= 0) return 1.0;
  const double frac =
      std::clamp(static_cast<double>(step) / static_cast<double>(total), 0.0, 1.0);
  return frac * (1.0 - floor) + floor;
}

double ApplyTsaMask(std::span<const double> losses,
                    std::span<const double> true_probs, double eta) {
  if (losses.size() != true_probs.size()) {
    throw std::invalid_argument("ApplyTsaMask: misaligned inputs");
  }
  double sum = 0.0;
  int kept = 0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (true_probs[i] > eta) continue;
    sum += losses[i];
    ++kept;
  }
  return kept == 0 ? 0.0 : sum / kept;
}

std::vector<bool> ConfidenceMask(const Matrix &probs, double beta) {
  std::vector<bool> mask(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    mask[static_cast<std::size_t>(r)] = probs.row(r).maxCoeff() >= beta;
  }
  return mask;
}

RowVector Sharpen(const RowVector &probs, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("Sharpen: tau must be > 0");
  // Work in log space so small temperatures do not underflow.
  RowVector logp = probs.unaryExpr([](double p) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  });
  logp /= tau;
  const double mx = logp.maxCoeff();
  RowVector out = (logp.array() - mx).exp();
  return out / out.sum();
}

int ArgMax(const RowVector &v) {
  int best = 0;
  for (Eigen::Index k = 1; k < v.size(); ++k) {
    if (v(k) > v(best)) best = static_cast<int>(k);
  }
  return best;
}

RowVector Softmax(const RowVector &v) {
  RowVector e = (v.array() - v.maxCoeff()).exp();
  return e / e.sum();
}

HhnnTrainer::HhnnTrainer(HierarchicalEncoder &encoder, Mdem &mdem,
                         const TrainConfig &config, long total_steps)
    : encoder_(encoder),
      mdem_(mdem),
      config_(config),
      total_steps_(total_steps),
      optimizer_({&encoder.params(), &mdem.params()}, config.adam()) {
  config_.Validate();
  if (mdem.levels() != encoder.config().levels ||
      mdem.head_width() * mdem.heads() != encoder.config().d()) {
    throw ConfigError("MDEM shape does not match the encoder");
  }
}

namespace {

Var SumOrZero(Graph &g, std::vector<Var> &terms) {
  if (terms.empty()) return g.Constant(Matrix::Zero(1, 1));
  return ad::Sum(ad::ConcatRows(terms));
}

}  // namespace

LossBreakdown HhnnTrainer::ComputeGradients(
    std::span<const TokenizedDocument *const> batch, long step) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const int levels = encoder_.config().levels;
  LossBreakdown out;
  out.count = static_cast<int>(batch.size());
  out.eta = config_.tsa_schedule == "linear"
                ? TsaThreshold(step, total_steps_, levels)
                : 1.0;
  Graph g;
  std::vector<Var> sup_terms;
  std::vector<Var> unsup_terms;
  for (const TokenizedDocument *doc : batch) {
    if (doc->grade < 1 || doc->grade > levels) {
      throw DataError("grade " + std::to_string(doc->grade) + " of '" +
                      doc->id + "' outside 1.." + std::to_string(levels));
    }
    HierarchicalEncoder::Output fwd = encoder_.Forward(g, *doc);
    const RowVector probs = fwd.probs.value();
    const int label = doc->grade - 1;
    if (ArgMax(probs) == label) ++out.correct;
    if (probs(label) <= out.eta) {
      sup_terms.push_back(CrossEntropy(fwd.probs, label));
    }
    if (probs.maxCoeff() >= config_.beta) {
      Var scores = SentenceScores(g, fwd.sentence_reps, mdem_);
      Var doc_score = DocumentScore(scores, fwd.doc_attention);
      unsup_terms.push_back(
          ConsistencyLoss(doc_score, Sharpen(probs, config_.tau)));
    }
  }
  out.tsa_kept = static_cast<int>(sup_terms.size());
  out.confident = static_cast<int>(unsup_terms.size());
  Var sup = SumOrZero(g, sup_terms);
  if (!sup_terms.empty()) {
    sup = ad::Scale(sup, 1.0 / static_cast<double>(sup_terms.size()));
  }
  Var unsup = ad::Scale(SumOrZero(g, unsup_terms),
                        1.0 / static_cast<double>(batch.size()));
  Var total = ad::Add(sup, ad::Scale(unsup, config_.lambda));
  out.sup = sup.scalar();
  out.unsup = unsup.scalar();
  out.total = total.scalar();
  if (!std::isfinite(out.total)) {
    std::ostringstream msg;
    msg << "non-finite loss at step " << step << ": L_sup=" << out.sup
        << " L_unsup=" << out.unsup << " eta=" << out.eta;
    throw NumericalError(msg.str());
  }
  g.Backward(total);
  return out;
}

LossBreakdown HhnnTrainer::Step(
    std::span<const TokenizedDocument *const> batch, long step) {
  LossBreakdown out = ComputeGradients(batch, step);
  optimizer_.Step();
  if (!encoder_.params().AllFinite() || !mdem_.params().AllFinite()) {
    throw NumericalError("parameters became non-finite at step " +
                         std::to_string(step));
  }
  return out;
}

std::vector<EpochStats> TrainHhnn(HierarchicalEncoder &encoder, Mdem &mdem,
                                  const std::vector<TokenizedDocument> &train,
                                  const TrainConfig &config,
                                  const EpochCallback &on_epoch) {
  config.Validate();
  if (train.empty()) throw DataError("training set is empty");
  const long n = static_cast<long>(train.size());
  const long batches = (n + config.batch_size - 1) / config.batch_size;
  const long total_steps = batches * config.epochs;
  HhnnTrainer trainer(encoder, mdem, config, total_steps);
  std::mt19937_64 rng(config.seed);
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::vector<EpochStats> history;
  long step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochStats stats;
    stats.epoch = epoch;
    int correct = 0;
    for (long b = 0; b < batches; ++b) {
      std::vector<const TokenizedDocument *> batch;
      for (long i = b * config.batch_size;
           i < std::min(n, (b + 1) * config.batch_size); ++i) {
        batch.push_back(&train[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
      }
      LossBreakdown loss = trainer.Step(batch, step++);
      const double w = static_cast<double>(batch.size()) / static_cast<double>(n);
      stats.sup += w * loss.sup;
      stats.unsup += w * loss.unsup;
      stats.total += w * loss.total;
      stats.eta = loss.eta;
      correct += loss.correct;
    }
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(n);
    history.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return history;
}

void WriteTrainingLogCsv(const std::string &path,
                         std::span<const EpochStats> stats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write training log: " + path);
  out << "epoch,L_sup,L_unsup,L,train_acc,eta\n";
  out.precision(17);
  for (const EpochStats &s : stats) {
    out << s.epoch << ',' << s.sup << ',' << s.unsup << ',' << s.total << ','
        << s.train_acc << ',' << s.eta << '\n';
  }
}

std::vector<SentenceRecord> ExtractSentenceLabels(
    const HierarchicalEncoder &encoder, const Mdem &mdem,
    std::span<const TokenizedDocument> docs, double min_confidence) {
  std::vector<SentenceRecord> records;
  for (const TokenizedDocument &doc : docs) {
    Graph g(false);
    HierarchicalEncoder::Output fwd = encoder.Forward(g, doc);
    const Matrix scores = SentenceScores(g, fwd.sentence_reps, mdem).value();
    for (std::size_t i = 0; i < fwd.real_rows.size(); ++i) {
      const RowVector p = Softmax(scores.row(static_cast<Eigen::Index>(i)));
      const int label = ArgMax(p);
      const double confidence = p(label);
      if (confidence < min_confidence) continue;
      SentenceRecord r;
      r.doc_id = doc.id;
      r.index = fwd.real_rows[i];
      r.tokens = doc.tokens[i];
      r.label = label + 1;
      r.confidence = confidence;
      records.push_back(std::move(r));
    }
  }
  return records;
}

void WriteSentenceCorpusJsonl(const std::string &path,
                              std::span<const SentenceRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write sentence corpus: " + path);
  for (const SentenceRecord &r : records) {
    nlohmann::json j;
    j["doc_id"] = r.doc_id;
    j["index"] = r.index;
    j["tokens"] = r.tokens;
    j["label"] = r.label;
    j["confidence"] = r.confidence;
    out << j.dump() << '\n';
  }
}

std::vector<SentenceRecord> LoadSentenceCorpusJsonl(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open sentence corpus: " + path);
  std::vector<SentenceRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      nlohmann::json j = nlohmann::json::parse(line);
      SentenceRecord r;
      r.doc_id = j.at("doc_id").get<std::string>();
      r.index = j.at("index").get<int>();
      r.tokens = j.at("tokens").get<TokenList>();
      r.label = j.at("label").get<int>();
      r.confidence = j.at("confidence").get<double>();
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception &e) {
      throw DataError("sentence corpus line " + std::to_string(line_no) +
                      ": " + e.what());
    }
  }
  return records;
}

}  // namespace readrank
