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

#ifndef READRANK_MDEM_H_
#define READRANK_MDEM_H_

// Hybrid training of the hierarchical encoder: supervised cross-entropy on
// document labels plus a KL consistency term between the document
// prediction and the attention-weighted sentence difficulty scores produced
// by the multi-head difficulty embedding matrix. The trained matrix then
// labels individual sentences.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "readrank/autograd.h"
#include "readrank/corpus.h"
#include "readrank/encoder.h"
#include "readrank/optimizer.h"

namespace readrank {

struct TrainConfig {
  double lambda = 1.0;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  int epochs = 30;
  int batch_size = 16;
  std::string tsa_schedule = "linear";  // "linear" or "none"
  double beta = 0.45;  // confidence-mask threshold
  double tau = 0.85;   // sharpening temperature
  std::uint64_t seed = 1;

  void Validate() const;
  AdamConfig adam() const;
};

// Multi-head difficulty embedding matrix, stored as h stacked z x Y slices
// (a d x Y parameter).
class Mdem {
 public:
  Mdem(int d, int heads, int levels, std::uint64_t seed);
  Mdem(const Mdem &) = delete;
  Mdem &operator=(const Mdem &) = delete;

  int heads() const { return heads_; }
  int head_width() const { return head_width_; }
  int levels() const { return levels_; }
  Parameter &matrix() { return *matrix_; }
  const Parameter &matrix() const { return *matrix_; }
  // Mutable handle for binding into a Graph from const contexts.
  Parameter *parameter() const { return matrix_; }
  // z x Y slice for head `h`.
  Matrix Head(int h) const;
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

 private:
  int heads_;
  int head_width_;
  int levels_;
  ParameterSet params_;
  Parameter *matrix_;
};

// Per-head products of the reshaped sentence representations with the
// matching MDEM slice, summed over heads. u: n x d -> n x Y.
Var SentenceScores(Graph &g, Var u, const Mdem &mdem);
// Attention-weighted sum of score rows. scores: n x Y, weights: n x 1.
Var DocumentScore(Var scores, Var weights);

// -log p[label], with p clamped at 1e-12. probs: 1 x Y, label 0-based.
Var CrossEntropy(Var probs, int label);
// Batch mean of CrossEntropy over rows of `probs`; labels 0-based.
double SupervisedLoss(const Matrix &probs, std::span<const int> labels);
// KL(target || softmax(scores)), target held fixed. scores: 1 x Y.
Var ConsistencyLoss(Var scores, const RowVector &target);
double KlDivergence(const RowVector &p, const RowVector &q);

// Linear annealing from 1/Y at step 0 to 1 at `total`.
double TsaThreshold(long step, long total, int levels);
// Mean loss over examples whose true-class probability is at most `eta`;
// zero when every example is masked.
double ApplyTsaMask(std::span<const double> losses,
                    std::span<const double> true_probs, double eta);
// True where the row maximum reaches `beta`.
std::vector<bool> ConfidenceMask(const Matrix &probs, double beta);
// p^(1/tau), renormalized.
RowVector Sharpen(const RowVector &probs, double tau);
// Index of the maximum; the lowest index wins ties.
int ArgMax(const RowVector &v);
RowVector Softmax(const RowVector &v);

struct LossBreakdown {
  double sup = 0.0;
  double unsup = 0.0;
  double total = 0.0;
  double eta = 1.0;
  int tsa_kept = 0;
  int confident = 0;
  int correct = 0;
  int count = 0;
};

// Runs forward/backward for one batch and applies the optimizer.
class HhnnTrainer {
 public:
  HhnnTrainer(HierarchicalEncoder &encoder, Mdem &mdem,
              const TrainConfig &config, long total_steps);

  // Accumulates gradients of L_sup + lambda * L_unsup into the parameters
  // without updating them.
  LossBreakdown ComputeGradients(std::span<const TokenizedDocument *const> batch,
                                 long step);
  // ComputeGradients followed by an Adam update. Throws NumericalError when
  // the loss or the updated parameters are not finite.
  LossBreakdown Step(std::span<const TokenizedDocument *const> batch,
                     long step);

  Adam &optimizer() { return optimizer_; }

 private:
  HierarchicalEncoder &encoder_;
  Mdem &mdem_;
  TrainConfig config_;
  long total_steps_;
  Adam optimizer_;
};

struct EpochStats {
  int epoch = 0;
  double sup = 0.0;
  double unsup = 0.0;
  double total = 0.0;
  double train_acc = 0.0;
  double eta = 0.0;
};

using EpochCallback = std::function<void(const EpochStats &)>;

std::vector<EpochStats> TrainHhnn(HierarchicalEncoder &encoder, Mdem &mdem,
                                  const std::vector<TokenizedDocument> &train,
                                  const TrainConfig &config,
                                  const EpochCallback &on_epoch = {});
void WriteTrainingLogCsv(const std::string &path,
                         std::span<const EpochStats> stats);

struct SentenceRecord {
  std::string doc_id;
  int index = 0;
  TokenList tokens;
  int label = 0;  // 1-based grade
  double confidence = 0.0;
};

std::vector<SentenceRecord> ExtractSentenceLabels(
    const HierarchicalEncoder &encoder, const Mdem &mdem,
    std::span<const TokenizedDocument> docs, double min_confidence = 0.0);

void WriteSentenceCorpusJsonl(const std::string &path,
                              std::span<const SentenceRecord> records);
std::vector<SentenceRecord> LoadSentenceCorpusJsonl(const std::string &path);

}  // namespace readrank

#endif  // READRANK_MDEM_H_
