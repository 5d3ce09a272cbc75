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

#include "readrank/ranking.h"

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

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Var NegMean(std::vector<Var> &terms) {
  return ad::Scale(ad::Sum(ad::ConcatCols(terms)),
                   -1.0 / static_cast<double>(terms.size()));
}

}  // namespace

std::vector<DataSubset> BuildSubsets(std::span<const int> grades, int levels,
                                     std::uint64_t seed) {
  if (levels < 2) throw ConfigError("ranking needs at least 2 grades");
  std::vector<std::vector<int>> by_grade(static_cast<std::size_t>(levels));
  for (std::size_t i = 0; i < grades.size(); ++i) {
    const int g = grades[i];
    if (g < 1 || g > levels) {
      throw DataError("grade " + std::to_string(g) + " outside 1.." +
                      std::to_string(levels));
    }
    by_grade[static_cast<std::size_t>(g - 1)].push_back(static_cast<int>(i));
  }
  std::size_t count = 0;
  for (int g = 1; g <= levels; ++g) {
    const auto &docs = by_grade[static_cast<std::size_t>(g - 1)];
    if (docs.empty()) {
      throw DataError("grade " + std::to_string(g) +
                      " has no documents to build ranking subsets");
    }
    count = std::max(count, docs.size());
  }
  std::mt19937_64 rng(seed);
  for (auto &docs : by_grade) {
    std::shuffle(docs.begin(), docs.end(), rng);
    const std::size_t have = docs.size();
    std::uniform_int_distribution<std::size_t> pick(0, have - 1);
    while (docs.size() < count) docs.push_back(docs[pick(rng)]);
  }
  std::vector<DataSubset> subsets(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (const auto &docs : by_grade) subsets[i].members.push_back(docs[i]);
  }
  return subsets;
}

std::vector<PairExample> MakePairs(const DataSubset &subset,
                                   std::span<const int> grades) {
  std::vector<PairExample> pairs;
  const std::size_t y = subset.members.size();
  pairs.reserve(y * (y - 1));
  for (std::size_t i = 0; i < y; ++i) {
    for (std::size_t j = 0; j < y; ++j) {
      if (i == j) continue;
      PairExample p;
      p.a = subset.members[i];
      p.b = subset.members[j];
      p.diff = grades[static_cast<std::size_t>(p.a)] -
               grades[static_cast<std::size_t>(p.b)];
      pairs.push_back(p);
    }
  }
  return pairs;
}

RankingHead::RankingHead(int d, int levels, std::uint64_t seed)
    : d_(d), levels_(levels) {
  if (d < 1 || levels < 2) {
    throw ConfigError("ranking head needs width >= 1 and at least 2 grades");
  }
  std::mt19937_64 rng(seed);
  linear_ = Linear::Create(params_, "rank", 2 * d, 2 * levels - 1, rng);
}

Var RankingHead::PairLogits(Graph &g, Var a, Var b) const {
  if (a.cols() != d_ || b.cols() != d_ || a.rows() != b.rows()) {
    throw std::invalid_argument("pair vectors must both be " +
                                std::to_string(d_) + " wide");
  }
  return linear_.Forward(g, ad::ConcatCols(std::vector<Var>{a, b}));
}

RowVector RankingHead::PairLogits(const RowVector &a, const RowVector &b) const {
  if (a.size() != d_ || b.size() != d_) {
    throw std::invalid_argument("pair vectors must both be " +
                                std::to_string(d_) + " wide");
  }
  const Matrix &w = linear_.weight->value;
  RowVector out = a * w.topRows(d_) + b * w.bottomRows(d_);
  out += linear_.bias->value.row(0);
  return out;
}

int RankingHead::PredictDiff(const RowVector &a, const RowVector &b) const {
  return ClassToDiff(ArgMax(PairLogits(a, b)), levels_);
}

std::vector<RankingEpochStats> TrainRanking(
    RankingHead &head, std::span<const DataSubset> subsets,
    std::span<const int> grades, const VectorProvider &vectors,
    const TrainConfig &config, std::vector<ParameterSet *> extra) {
  config.Validate();
  if (subsets.empty()) throw DataError("no ranking subsets to train on");
  const int levels = head.levels();
  extra.insert(extra.begin(), &head.params());
  Adam optimizer(extra, config.adam());
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(subsets.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<RankingEpochStats> history;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    RankingEpochStats stats;
    stats.epoch = epoch;
    long correct = 0;
    long total = 0;
    for (std::size_t s : order) {
      const DataSubset &subset = subsets[s];
      Graph g;
      std::vector<Var> member_vars;
      for (int m : subset.members) member_vars.push_back(vectors(g, m));
      std::vector<Var> lhs;
      std::vector<Var> rhs;
      std::vector<int> labels;
      for (std::size_t i = 0; i < member_vars.size(); ++i) {
        for (std::size_t j = 0; j < member_vars.size(); ++j) {
          if (i == j) continue;
          lhs.push_back(member_vars[i]);
          rhs.push_back(member_vars[j]);
          const int diff =
              grades[static_cast<std::size_t>(subset.members[i])] -
              grades[static_cast<std::size_t>(subset.members[j])];
          labels.push_back(DiffToClass(diff, levels));
        }
      }
      Var logits = head.PairLogits(g, ad::ConcatRows(lhs), ad::ConcatRows(rhs));
      Var logp = ad::LogSoftmaxRows(logits);
      std::vector<Var> terms;
      for (std::size_t p = 0; p < labels.size(); ++p) {
        terms.push_back(ad::Pick(logp, static_cast<int>(p), labels[p]));
        Eigen::Index best = 0;
        logits.value().row(static_cast<Eigen::Index>(p)).maxCoeff(&best);
        correct += static_cast<int>(best) == labels[p];
      }
      total += static_cast<long>(labels.size());
      Var loss = NegMean(terms);
      if (!std::isfinite(loss.scalar())) {
        throw NumericalError("ranking loss is not finite");
      }
      g.Backward(loss);
      optimizer.Step();
      stats.loss += loss.scalar() / static_cast<double>(subsets.size());
    }
    stats.pair_acc = static_cast<double>(correct) / static_cast<double>(total);
    history.push_back(stats);
  }
  return history;
}

std::vector<DataSubset> SelectReferences(std::span<const DataSubset> subsets,
                                         int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("ranking.references must be >= 1");
  if (subsets.empty()) throw DataError("no reference subsets");
  std::vector<std::size_t> order(subsets.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<DataSubset> out;
  const std::size_t n = std::min(order.size(), static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < n; ++i) out.push_back(subsets[order[i]]);
  return out;
}

int VoteWinner(const std::map<int, int> &counts) {
  int winner = 0;
  int best = -1;
  for (const auto &[grade, votes] : counts) {
    if (votes > best) {
      best = votes;
      winner = grade;
    }
  }
  return winner;
}

VoteRecord InferGrade(const RankingHead &head, const RowVector &test,
                      std::span<const DataSubset> references,
                      std::span<const int> grades, const Matrix &vectors) {
  const int levels = head.levels();
  VoteRecord record;
  for (const DataSubset &subset : references) {
    for (int ref : subset.members) {
      const int diff = head.PredictDiff(test, vectors.row(ref));
      const int candidate = std::clamp(
          grades[static_cast<std::size_t>(ref)] + diff, 1, levels);
      ++record.counts[candidate];
    }
  }
  if (record.counts.empty()) throw DataError("no reference documents to vote with");
  record.winner = VoteWinner(record.counts);
  return record;
}

OrdinalHead::OrdinalHead(int d, int levels, std::uint64_t seed)
    : levels_(levels) {
  if (d < 1 || levels < 2) {
    throw ConfigError("ordinal head needs width >= 1 and at least 2 grades");
  }
  std::mt19937_64 rng(seed);
  score_ = Linear::Create(params_, "ordinal.score", d, 1, rng);
  base_ = &params_.Add("ordinal.base", 1, 1);
  increments_ = &params_.Add("ordinal.delta", 1, std::max(levels - 2, 1));
  // softplus(0.5413) = 1, so thresholds start one unit apart.
  base_->value(0, 0) = -0.5 * (levels - 2);
  increments_->value.setConstant(0.5413248546129181);
}

Var OrdinalHead::Score(Graph &g, Var doc_vector) const {
  return score_.Forward(g, doc_vector);
}

Var OrdinalHead::Thresholds(Graph &g) const {
  Var t = g.Param(*base_);
  std::vector<Var> parts = {t};
  Var inc = ad::Softplus(g.Param(*increments_));
  for (int k = 0; k < levels_ - 2; ++k) {
    t = ad::Add(t, ad::SliceCols(inc, k, 1));
    parts.push_back(t);
  }
  return ad::ConcatCols(parts);
}

std::vector<double> OrdinalHead::ThresholdValues() const {
  Graph g(false);
  const Matrix t = Thresholds(g).value();
  return std::vector<double>(t.data(), t.data() + t.size());
}

double OrdinalHead::Score(const RowVector &doc_vector) const {
  return (doc_vector * score_.weight->value)(0, 0) + score_.bias->value(0, 0);
}

std::vector<double> OrdinalProbabilities(double score,
                                         std::span<const double> thresholds) {
  const std::size_t y = thresholds.size() + 1;
  std::vector<double> p(y);
  double lower = 0.0;
  for (std::size_t k = 0; k < y; ++k) {
    const double upper = k + 1 < y ? Sigmoid(thresholds[k] - score) : 1.0;
    p[k] = upper - lower;
    lower = upper;
  }
  return p;
}

double OrdinalLoss(double score, int grade, std::span<const double> thresholds) {
  const int levels = static_cast<int>(thresholds.size()) + 1;
  if (grade < 1 || grade > levels) {
    throw std::invalid_argument("grade outside 1.." + std::to_string(levels));
  }
  const double upper =
      grade < levels ? Sigmoid(thresholds[static_cast<std::size_t>(grade - 1)] - score) : 1.0;
  const double lower =
      grade > 1 ? Sigmoid(thresholds[static_cast<std::size_t>(grade - 2)] - score) : 0.0;
  return -std::log(std::max(upper - lower, 1e-12));
}

Var OrdinalLoss(Var score, Var thresholds, int grade) {
  const int levels = thresholds.cols() + 1;
  if (grade < 1 || grade > levels) {
    throw std::invalid_argument("grade outside 1.." + std::to_string(levels));
  }
  auto cdf = [&](int k) {
    return ad::Sigmoid(ad::Sub(ad::Pick(thresholds, 0, k - 1), score));
  };
  Var p;
  if (grade == 1) {
    p = cdf(1);
  } else if (grade == levels) {
    p = ad::OneMinus(cdf(levels - 1));
  } else {
    p = ad::Sub(cdf(grade), cdf(grade - 1));
  }
  return ad::Scale(ad::Log(p), -1.0);
}

int PredictOrdinal(double score, std::span<const double> thresholds) {
  int grade = 1;
  for (double t : thresholds) grade += t < score;
  return grade;
}

std::vector<RankingEpochStats> TrainOrdinal(
    OrdinalHead &head, std::span<const int> grades,
    const VectorProvider &vectors, const TrainConfig &config,
    std::vector<ParameterSet *> extra) {
  config.Validate();
  if (grades.empty()) throw DataError("training set is empty");
  extra.insert(extra.begin(), &head.params());
  Adam optimizer(extra, config.adam());
  std::mt19937_64 rng(config.seed);
  const std::size_t n = grades.size();
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<RankingEpochStats> history;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    RankingEpochStats stats;
    stats.epoch = epoch;
    long correct = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t end = std::min(n, start + batch);
      Graph g;
      Var thresholds = head.Thresholds(g);
      const Matrix tv = thresholds.value();
      std::vector<Var> terms;
      for (std::size_t i = start; i < end; ++i) {
        const int grade = grades[order[i]];
        Var s = head.Score(g, vectors(g, static_cast<int>(order[i])));
        terms.push_back(OrdinalLoss(s, thresholds, grade));
        correct += PredictOrdinal(s.scalar(), std::span<const double>(tv.data(), tv.size())) == grade;
      }
      Var loss = ad::Scale(ad::Sum(ad::ConcatCols(terms)),
                           1.0 / static_cast<double>(terms.size()));
      if (!std::isfinite(loss.scalar())) {
        throw NumericalError("ordinal loss is not finite");
      }
      g.Backward(loss);
      optimizer.Step();
      stats.loss += loss.scalar() * static_cast<double>(end - start) /
                    static_cast<double>(n);
    }
    stats.pair_acc = static_cast<double>(correct) / static_cast<double>(n);
    history.push_back(stats);
  }
  return history;
}

void WritePredictionsJsonl(const std::string &path,
                           std::span<const PredictionRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write predictions: " + path);
  for (const PredictionRecord &r : records) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["true"] = r.truth;
    j["pred"] = r.pred;
    nlohmann::ordered_json votes = nlohmann::ordered_json::object();
    for (const auto &[grade, count] : r.votes) votes[std::to_string(grade)] = count;
    j["votes"] = votes;
    out << j.dump() << '\n';
  }
}

}  // namespace readrank
