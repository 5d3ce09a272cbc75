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

#ifndef READRANK_METRICS_H_
#define READRANK_METRICS_H_

#include <span>
#include <string>
#include <vector>

namespace readrank {

struct PrecisionRecallF1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Grades are 1-based throughout.
double Accuracy(std::span<const int> preds, std::span<const int> truths);
// Fraction of predictions within one grade of the truth.
double AdjacentAccuracy(std::span<const int> preds,
                        std::span<const int> truths);
// Per-class scores averaged with true-class support as weights; a class
// with no predictions (or no support) scores 0 on the undefined term.
PrecisionRecallF1 WeightedPrf(std::span<const int> preds,
                              std::span<const int> truths, int levels);
// Quadratic weighted kappa. Returns 1 when expected disagreement is zero.
double QuadraticWeightedKappa(std::span<const int> preds,
                              std::span<const int> truths, int levels);

// confusion[t-1][p-1] counts documents of true grade t predicted as p.
std::vector<std::vector<long>> ConfusionMatrix(std::span<const int> preds,
                                               std::span<const int> truths,
                                               int levels);

struct EvalReport {
  double acc = 0.0;
  double adj_acc = 0.0;
  double f1 = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double qwk = 0.0;
  std::vector<std::vector<long>> confusion;
};

EvalReport Evaluate(std::span<const int> preds, std::span<const int> truths,
                    int levels);
// Field-wise mean of the six metrics; the confusion matrices are summed.
EvalReport MeanReport(std::span<const EvalReport> reports);

// {"acc", "adj_acc", "f1", "precision", "recall", "qwk", "confusion"}.
std::string EvalReportToJson(const EvalReport &report, int indent = 2);

}  // namespace readrank

#endif  // READRANK_METRICS_H_
