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

#include "readrank/metrics.h"

#include <stdexcept>

#include <nlohmann/json.hpp>

namespace readrank {
namespace {

void CheckInputs(std::span<const int> preds, std::span<const int> truths) {
  if (preds.size() != truths.size()) {
    throw std::invalid_argument("predictions and truths differ in length");
  }
  if (preds.empty()) throw std::invalid_argument("no predictions to score");
}

void CheckRange(std::span<const int> grades, int levels) {
  for (int g : grades) {
    if (g < 1 || g > levels) {
      throw std::invalid_argument("grade " + std::to_string(g) +
                                  " outside 1.." + std::to_string(levels));
    }
  }
}

}  // namespace

double Accuracy(std::span<const int> preds, std::span<const int> truths) {
  CheckInputs(preds, truths);
  long hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == truths[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double AdjacentAccuracy(std::span<const int> preds,
                        std::span<const int> truths) {
  CheckInputs(preds, truths);
  long hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    hits += std::abs(preds[i] - truths[i]) <= 1;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::vector<std::vector<long>> ConfusionMatrix(std::span<const int> preds,
                                               std::span<const int> truths,
                                               int levels) {
  CheckInputs(preds, truths);
  CheckRange(preds, levels);
  CheckRange(truths, levels);
  std::vector<std::vector<long>> c(static_cast<std::size_t>(levels),
                                   std::vector<long>(static_cast<std::size_t>(levels), 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    ++c[static_cast<std::size_t>(truths[i] - 1)][static_cast<std::size_t>(preds[i] - 1)];
  }
  return c;
}

PrecisionRecallF1 WeightedPrf(std::span<const int> preds,
                              std::span<const int> truths, int levels) {
  const auto c = ConfusionMatrix(preds, truths, levels);
  const auto n = static_cast<double>(preds.size());
  PrecisionRecallF1 out;
  for (int k = 0; k < levels; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    long support = 0;
    long predicted = 0;
    for (int j = 0; j < levels; ++j) {
      support += c[uk][static_cast<std::size_t>(j)];
      predicted += c[static_cast<std::size_t>(j)][uk];
    }
    if (support == 0) continue;
    const double tp = static_cast<double>(c[uk][uk]);
    const double p = predicted == 0 ? 0.0 : tp / static_cast<double>(predicted);
    const double r = tp / static_cast<double>(support);
    const double f = p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
    const double w = static_cast<double>(support) / n;
    out.precision += w * p;
    out.recall += w * r;
    out.f1 += w * f;
  }
  return out;
}

double QuadraticWeightedKappa(std::span<const int> preds,
                              std::span<const int> truths, int levels) {
  const auto c = ConfusionMatrix(preds, truths, levels);
  const auto n = static_cast<double>(preds.size());
  std::vector<double> row(static_cast<std::size_t>(levels), 0.0);
  std::vector<double> col(static_cast<std::size_t>(levels), 0.0);
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) {
      const auto v = static_cast<double>(c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      row[static_cast<std::size_t>(i)] += v;
      col[static_cast<std::size_t>(j)] += v;
    }
  }
  const double denom_w = static_cast<double>((levels - 1) * (levels - 1));
  double observed = 0.0;
  double expected = 0.0;
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) {
      const double w = static_cast<double>((i - j) * (i - j)) / denom_w;
      observed += w * static_cast<double>(c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
      expected += w * row[static_cast<std::size_t>(i)] * col[static_cast<std::size_t>(j)] / n;
    }
  }
  if (expected == 0.0) return 1.0;
  return 1.0 - observed / expected;
}

EvalReport Evaluate(std::span<const int> preds, std::span<const int> truths,
                    int levels) {
  EvalReport r;
  r.acc = Accuracy(preds, truths);
  r.adj_acc = AdjacentAccuracy(preds, truths);
  const PrecisionRecallF1 prf = WeightedPrf(preds, truths, levels);
  r.precision = prf.precision;
  r.recall = prf.recall;
  r.f1 = prf.f1;
  r.qwk = QuadraticWeightedKappa(preds, truths, levels);
  r.confusion = ConfusionMatrix(preds, truths, levels);
  return r;
}

EvalReport MeanReport(std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("no reports to average");
  EvalReport m;
  m.confusion = reports[0].confusion;
  for (auto &row : m.confusion) std::fill(row.begin(), row.end(), 0);
  for (const EvalReport &r : reports) {
    m.acc += r.acc;
    m.adj_acc += r.adj_acc;
    m.f1 += r.f1;
    m.precision += r.precision;
    m.recall += r.recall;
    m.qwk += r.qwk;
    for (std::size_t i = 0; i < m.confusion.size(); ++i) {
      for (std::size_t j = 0; j < m.confusion[i].size(); ++j) {
        m.confusion[i][j] += r.confusion[i][j];
      }
    }
  }
  const auto k = static_cast<double>(reports.size());
  m.acc /= k;
  m.adj_acc /= k;
  m.f1 /= k;
  m.precision /= k;
  m.recall /= k;
  m.qwk /= k;
  return m;
}

std::string EvalReportToJson(const EvalReport &report, int indent) {
  nlohmann::ordered_json j;
  j["acc"] = report.acc;
  j["adj_acc"] = report.adj_acc;
  j["f1"] = report.f1;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["qwk"] = report.qwk;
  j["confusion"] = report.confusion;
  return j.dump(indent);
}

}  // namespace readrank
