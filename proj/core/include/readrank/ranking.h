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

#ifndef READRANK_RANKING_H_
#define READRANK_RANKING_H_

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "readrank/autograd.h"
#include "readrank/layers.h"
#include "readrank/mdem.h"

namespace readrank {

// One document per grade; members[g - 1] indexes a document of grade g.
struct DataSubset {
  std::vector<int> members;
};

struct PairExample {
  int a = 0;  // document indices
  int b = 0;
  int diff = 0;  // grade(a) - grade(b)
};

// Deals each grade's shuffled documents round-robin into as many subsets as
// the largest grade has documents; smaller grades are topped up by sampling
// with replacement. Throws DataError naming a grade with no documents.
std::vector<DataSubset> BuildSubsets(std::span<const int> grades, int levels,
                                     std::uint64_t seed);
// All Y(Y-1) ordered pairs of distinct subset members.
std::vector<PairExample> MakePairs(const DataSubset &subset,
                                   std::span<const int> grades);

inline int DiffToClass(int diff, int levels) { return diff + levels - 1; }
inline int ClassToDiff(int cls, int levels) { return cls - (levels - 1); }

// Affine classifier over [a; b] with 2Y-1 grade-difference classes.
class RankingHead {
 public:
  RankingHead(int d, int levels, std::uint64_t seed);
  RankingHead(const RankingHead &) = delete;
  RankingHead &operator=(const RankingHead &) = delete;

  // Throws std::invalid_argument on width mismatch.
  Var PairLogits(Graph &g, Var a, Var b) const;
  RowVector PairLogits(const RowVector &a, const RowVector &b) const;
  int PredictDiff(const RowVector &a, const RowVector &b) const;

  int d() const { return d_; }
  int levels() const { return levels_; }
  Parameter &weight() { return *linear_.weight; }
  Parameter &bias() { return *linear_.bias; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

 private:
  int d_;
  int levels_;
  ParameterSet params_;
  Linear linear_;
};

// Produces the 1 x d vector of document `index` inside graph `g`.
using VectorProvider = std::function<Var(Graph &g, int index)>;

struct RankingEpochStats {
  int epoch = 0;
  double loss = 0.0;
  double pair_acc = 0.0;
};

// One subset's pairs form one batch. `extra` lists backbone parameters
// updated alongside the head (empty for a frozen backbone).
std::vector<RankingEpochStats> TrainRanking(
    RankingHead &head, std::span<const DataSubset> subsets,
    std::span<const int> grades, const VectorProvider &vectors,
    const TrainConfig &config, std::vector<ParameterSet *> extra = {});

struct VoteRecord {
  std::map<int, int> counts;  // candidate grade -> votes
  int winner = 0;
};

// Deterministic choice of `count` reference subsets.
std::vector<DataSubset> SelectReferences(std::span<const DataSubset> subsets,
                                         int count, std::uint64_t seed);
// Winner of a vote, lowest grade on ties.
int VoteWinner(const std::map<int, int> &counts);
// Hard vote over candidates clamp(grade(ref) + diff(test, ref), 1, Y).
VoteRecord InferGrade(const RankingHead &head, const RowVector &test,
                      std::span<const DataSubset> references,
                      std::span<const int> grades, const Matrix &vectors);

// Scalar score with Y-1 increasing thresholds t_k = t_{k-1} + softplus(d_k).
class OrdinalHead {
 public:
  OrdinalHead(int d, int levels, std::uint64_t seed);
  OrdinalHead(const OrdinalHead &) = delete;
  OrdinalHead &operator=(const OrdinalHead &) = delete;

  Var Score(Graph &g, Var doc_vector) const;  // 1 x 1
  Var Thresholds(Graph &g) const;             // 1 x (Y-1)
  std::vector<double> ThresholdValues() const;
  double Score(const RowVector &doc_vector) const;

  int levels() const { return levels_; }
  ParameterSet &params() { return params_; }
  const ParameterSet &params() const { return params_; }

 private:
  int levels_;
  ParameterSet params_;
  Linear score_;
  Parameter *base_ = nullptr;
  Parameter *increments_ = nullptr;
};

// -log(sigmoid(t_y - s) - sigmoid(t_{y-1} - s)) with t_0 = -inf, t_Y = +inf
// and y in 1..Y; the difference is floored at 1e-12.
double OrdinalLoss(double score, int grade, std::span<const double> thresholds);
Var OrdinalLoss(Var score, Var thresholds, int grade);
std::vector<double> OrdinalProbabilities(double score,
                                         std::span<const double> thresholds);
int PredictOrdinal(double score, std::span<const double> thresholds);

std::vector<RankingEpochStats> TrainOrdinal(
    OrdinalHead &head, std::span<const int> grades,
    const VectorProvider &vectors, const TrainConfig &config,
    std::vector<ParameterSet *> extra = {});

struct PredictionRecord {
  std::string id;
  int truth = 0;
  int pred = 0;
  std::map<int, int> votes;
};

void WritePredictionsJsonl(const std::string &path,
                           std::span<const PredictionRecord> records);

}  // namespace readrank

#endif  // READRANK_RANKING_H_
