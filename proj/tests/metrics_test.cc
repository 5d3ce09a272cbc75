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


#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "metrics_oracle.h"
#include "readrank/metrics.h"

namespace readrank {
namespace {

using Ints = std::vector<int>;
using testing::Oracle;
using testing::Reference;

TEST(AccuracyTest, KnownValues) {
  EXPECT_EQ(Accuracy(Ints{1, 2, 3}, Ints{1, 2, 3}), 1.0);
  EXPECT_DOUBLE_EQ(Accuracy(Ints{1, 2, 3}, Ints{1, 3, 1}), 1.0 / 3.0);
  EXPECT_EQ(Accuracy(Ints{1, 1}, Ints{2, 2}), 0.0);
}

TEST(AdjacentAccuracyTest, KnownValues) {
  EXPECT_DOUBLE_EQ(AdjacentAccuracy(Ints{1, 2, 3}, Ints{1, 3, 1}), 2.0 / 3.0);
  EXPECT_EQ(AdjacentAccuracy(Ints{2, 3, 4}, Ints{1, 2, 3}), 1.0);
  EXPECT_EQ(AdjacentAccuracy(Ints{3, 4, 1}, Ints{1, 2, 3}), 0.0);
}

TEST(InputValidationTest, RejectsBadInput) {
  EXPECT_THROW(Accuracy(Ints{1}, Ints{1, 2}), std::invalid_argument);
  EXPECT_THROW(Accuracy(Ints{}, Ints{}), std::invalid_argument);
  EXPECT_THROW(Evaluate(Ints{4}, Ints{1}, 3), std::invalid_argument);
  EXPECT_THROW(Evaluate(Ints{0}, Ints{1}, 3), std::invalid_argument);
}

TEST(WeightedPrfTest, PerfectPredictions) {
  const auto r = WeightedPrf(Ints{1, 2, 3, 3}, Ints{1, 2, 3, 3}, 3);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
}

TEST(WeightedPrfTest, BinaryArithmetic) {
  // Class 1: TP 1, FP 1. Class 2: one true example, predicted as class 1.
  // Precision: class 1 = 0.5, class 2 = 0 (never predicted).
  const auto r = WeightedPrf(Ints{1, 1}, Ints{1, 2}, 2);
  EXPECT_DOUBLE_EQ(r.precision, 0.25);
  // Class 1: TP 1, FP 1; class 2: precision 1 over two true examples.
  const auto s = WeightedPrf(Ints{1, 1, 2}, Ints{1, 2, 2}, 2);
  const Oracle o = Reference(Ints{1, 1, 2}, Ints{1, 2, 2}, 2);
  EXPECT_NEAR(s.precision, o.p, 1e-15);
  EXPECT_NEAR(s.precision, (1.0 / 3.0) * 0.5 + (2.0 / 3.0) * 1.0, 1e-15);
}

TEST(WeightedPrfTest, SupportWeightedPrecisionOfTwoClasses) {
  // One example per class; class 1 predicted twice (TP 1, FP 1) and class 2
  // predicted once correctly gives precisions 0.5 and 1 with equal support.
  const Ints truth = {1, 2, 2, 1};
  const Ints pred = {1, 2, 1, 1};
  const Oracle o = Reference(pred, truth, 2);
  const auto r = WeightedPrf(pred, truth, 2);
  EXPECT_NEAR(r.precision, o.p, 1e-15);
  EXPECT_NEAR(r.precision, 0.5 * (2.0 / 3.0) + 0.5 * 1.0, 1e-15);
}

TEST(WeightedPrfTest, NeverPredictedClassContributesZeroPrecision) {
  const auto r = WeightedPrf(Ints{1, 1, 1}, Ints{1, 2, 3}, 3);
  EXPECT_NEAR(r.precision, (1.0 / 3.0) * (1.0 / 3.0), 1e-15);
  EXPECT_TRUE(std::isfinite(r.f1));
}

TEST(QwkTest, KnownValues) {
  EXPECT_EQ(QuadraticWeightedKappa(Ints{1, 2, 3}, Ints{1, 2, 3}, 3), 1.0);
  EXPECT_NEAR(QuadraticWeightedKappa(Ints{2, 1}, Ints{1, 2}, 2), -1.0, 1e-15);
  EXPECT_NEAR(QuadraticWeightedKappa(Ints{1, 1, 2, 1}, Ints{1, 1, 2, 2}, 2), 0.5, 1e-15);
}

TEST(QwkTest, ConstantIdenticalLabelsGiveOne) {
  EXPECT_EQ(QuadraticWeightedKappa(Ints{2, 2, 2}, Ints{2, 2, 2}, 3), 1.0);
}

TEST(QwkTest, ShiftInvariant) {
  const Ints truth = {1, 2, 3, 2, 1, 3};
  const Ints pred = {1, 3, 3, 2, 2, 1};
  Ints t2, p2;
  for (int x : truth) t2.push_back(x + 2);
  for (int x : pred) p2.push_back(x + 2);
  // Shifting every grade keeps ordinal distances, given the same Y - 1 scale.
  const double a = QuadraticWeightedKappa(pred, truth, 3);
  const Oracle shifted = Reference(p2, t2, 5);
  const double b = QuadraticWeightedKappa(p2, t2, 5);
  EXPECT_NEAR(a, b, 1e-12);
  EXPECT_NEAR(b, shifted.qwk, 1e-12);
}

TEST(ConfusionTest, RowSumsAreTruthCounts) {
  const Ints truth = {1, 2, 2, 3, 3, 3};
  const Ints pred = {1, 3, 2, 1, 3, 3};
  const auto c = ConfusionMatrix(pred, truth, 3);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0], (std::vector<long>{1, 0, 0}));
  EXPECT_EQ(c[1], (std::vector<long>{0, 1, 1}));
  EXPECT_EQ(c[2], (std::vector<long>{1, 0, 2}));
}

TEST(EvaluateTest, RandomSetsMatchOracleAndProperties) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int levels = 2 + trial % 5;
    std::uniform_int_distribution<int> grade(1, levels);
    std::uniform_int_distribution<int> size(1, 40);
    const int n = size(rng);
    Ints pred, truth;
    for (int i = 0; i < n; ++i) {
      truth.push_back(grade(rng));
      pred.push_back(grade(rng));
    }
    const EvalReport r = Evaluate(pred, truth, levels);
    const Oracle o = Reference(pred, truth, levels);
    EXPECT_NEAR(r.acc, o.acc, 1e-12);
    EXPECT_NEAR(r.adj_acc, o.adj, 1e-12);
    EXPECT_NEAR(r.precision, o.p, 1e-12);
    EXPECT_NEAR(r.recall, o.r, 1e-12);
    EXPECT_NEAR(r.f1, o.f1, 1e-12);
    EXPECT_NEAR(r.qwk, o.qwk, 1e-12);
    EXPECT_GE(r.adj_acc, r.acc);
    EXPECT_NEAR(r.recall, r.acc, 1e-12);
    EXPECT_LE(r.qwk, 1.0 + 1e-12);
    if (r.qwk == 1.0) EXPECT_EQ(pred, truth);
  }
}

TEST(EvaluateTest, MeanAndJson) {
  const EvalReport a = Evaluate(Ints{1, 2}, Ints{1, 2}, 2);
  const EvalReport b = Evaluate(Ints{2, 1}, Ints{1, 2}, 2);
  const EvalReport m = MeanReport(std::vector<EvalReport>{a, b});
  EXPECT_DOUBLE_EQ(m.acc, 0.5);
  EXPECT_DOUBLE_EQ(m.qwk, 0.0);
  const auto j = nlohmann::json::parse(EvalReportToJson(a));
  for (const char *key : {"acc", "adj_acc", "f1", "precision", "recall", "qwk", "confusion"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["confusion"][1][1], 1);
  EXPECT_THROW(MeanReport(std::vector<EvalReport>{}), std::invalid_argument);
}

}  // namespace
}  // namespace readrank
