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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.
//
//   acceptance [--workdir DIR] [N ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metrics_oracle.h"
#include "readrank/dsdr.h"
#include "readrank/encoder.h"
#include "readrank/mdem.h"
#include "readrank/metrics.h"
#include "readrank/ranking.h"
#include "readrank/synthetic.h"
#include "readrank_cli/cli.h"
#include "readrank_cli/pipeline.h"
#include "testing.h"

namespace readrank::acceptance {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kGradTolerance = 1e-4;
constexpr double kGradSeconds = 60.0;
constexpr double kCombinatoricsSeconds = 5.0;
constexpr int kMetricSets = 1000;
constexpr double kMetricTolerance = 1e-12;
constexpr double kHhnnAccuracy = 0.90;
constexpr int kHhnnEpochs = 30;
constexpr double kHhnnSeconds = 600.0;
constexpr double kSentenceAgreement = 0.80;
constexpr double kSentenceConfidence = 0.5;
constexpr double kQwkMargin = 0.02;

struct Result {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;  // extra lines printed under the verdict
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fmt(const char *format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string ReadFile(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int RunCli(const std::vector<std::string> &args, std::string *out = nullptr) {
  std::ostringstream o, e;
  const int code = cli::Run(args, o, e);
  if (out != nullptr) *out = o.str();
  if (code != cli::kExitOk) std::cerr << "  readrank " << args[0] << ": " << e.str();
  return code;
}

// Model sizes shared by the end-to-end criteria.
nlohmann::json SmallModel(int epochs) {
  return {{"encoder", {{"d_embed", 32}, {"d_hidden", 16}, {"kernels", 32},
                       {"heads", 4}, {"layers", 2}}},
          {"dsdr", {{"heads", 4}, {"eptm_epochs", 5}}},
          {"data", {{"n_max", 10}, {"m_max", 20}}},
          {"train", {{"epochs", epochs}}}};
}

std::string WriteJson(const fs::path &path, const nlohmann::json &j) {
  std::ofstream(path, std::ios::binary) << j.dump(2) << '\n';
  return path.string();
}

std::string WriteCorpus(const fs::path &path, const SyntheticCorpus &corpus) {
  WriteCorpusJsonl(path.string(), corpus.docs);
  return path.string();
}

// ---------------------------------------------------------------------------
// 1. Gradient suite.

EncoderConfig ToyEncoder(ContextMode context, CellType cell) {
  EncoderConfig c;
  c.vocab_size = 12;
  c.d_embed = 5;
  c.d_hidden = 2;  // d = 4
  c.kernels = 4;
  c.window = 3;
  c.heads = 2;
  c.layers = 2;
  c.levels = 3;
  c.n_max = 3;
  c.m_max = 4;
  c.context = context;
  c.cell = cell;
  return c;
}

// Sum of `x` weighted elementwise by a fixed random matrix.
Var Project(Graph &g, Var x, const Matrix &weights) {
  return ad::Sum(ad::Mul(x, g.Constant(weights)));
}

Result GradientSuite() {
  const auto start = Clock::now();
  std::vector<std::pair<std::string, testing::GradCheckResult>> checks;
  std::mt19937_64 rng(101);
  auto check = [&](const std::string &name, std::vector<Parameter *> params,
                   const std::function<Var(Graph &)> &loss) {
    checks.emplace_back(name, testing::CheckGradients(std::move(params), loss));
  };

  const std::vector<int> ids = {2, 5, 7, 0};
  for (auto [context, cell] : {std::pair{ContextMode::kMultiDim, CellType::kLstm},
                               std::pair{ContextMode::kMultiDim, CellType::kGru},
                               std::pair{ContextMode::kSingleDim, CellType::kLstm}}) {
    const EncoderConfig cfg = ToyEncoder(context, cell);
    auto enc = std::make_shared<HierarchicalEncoder>(cfg, 7);
    testing::Randomize(enc->params(), rng);
    const Matrix w = testing::RandomMatrix(1, cfg.d(), rng);
    check(std::string("word layer (") + ContextModeName(context) + ", " +
              CellTypeName(cell) + ")",
          testing::AllParams(enc->params()),
          [enc, w, ids](Graph &g) { return Project(g, enc->word_layer().Encode(g, ids), w); });
  }

  const EncoderConfig cfg = ToyEncoder(ContextMode::kMultiDim, CellType::kLstm);
  HierarchicalEncoder enc(cfg, 8);
  testing::Randomize(enc.params(), rng);
  const Matrix h = testing::RandomMatrix(3, cfg.d(), rng);
  const Matrix wu = testing::RandomMatrix(3, cfg.d(), rng);
  check("sentence layer gates", testing::AllParams(enc.params()), [&](Graph &g) {
    return Project(g, enc.sentence_layer().Forward(g, g.Constant(h)), wu);
  });
  const Matrix wv = testing::RandomMatrix(1, cfg.d(), rng);
  const Matrix ww = testing::RandomMatrix(3, 1, rng);
  check("document attention", testing::AllParams(enc.params()), [&](Graph &g) {
    DocumentLayer::Output out = enc.document_layer().Forward(g, g.Constant(h));
    return ad::Add(Project(g, out.vector, wv), Project(g, out.weights, ww));
  });
  const TokenizedDocument doc = testing::GridDocument(3, 4, {{2, 3, 4}, {5, 6}, {7, 8, 9, 10}}, 2);
  check("hierarchical encoder + classifier", testing::AllParams(enc.params()), [&](Graph &g) {
    return CrossEntropy(enc.Forward(g, doc).probs, doc.grade - 1);
  });

  Mdem mdem(cfg.d(), cfg.heads, cfg.levels, 9);
  testing::Randomize(mdem.params(), rng);
  Matrix weights = testing::RandomMatrix(3, 1, rng).array().abs();
  weights /= weights.sum();
  const RowVector target = Softmax(testing::RandomMatrix(1, cfg.levels, rng));
  check("MDEM scores", {&mdem.matrix()}, [&](Graph &g) {
    Var r = DocumentScore(SentenceScores(g, g.Constant(h), mdem), g.Constant(weights));
    return ConsistencyLoss(r, target);
  });
  Parameter scores{"scores", testing::RandomMatrix(1, cfg.levels, rng), Matrix()};
  check("KL consistency", {&scores},
        [&](Graph &g) { return ConsistencyLoss(g.Param(scores), target); });

  const std::vector<TokenizedDocument> batch = {
      testing::GridDocument(3, 4, {{2, 3, 4}, {5, 6}}, 1, "a"),
      testing::GridDocument(3, 4, {{7, 8, 9, 2}, {3}, {4, 5}}, 3, "b")};
  std::vector<RowVector> targets;
  for (const auto &d : batch) {
    Graph g(false);
    targets.push_back(Sharpen(enc.Forward(g, d).probs.value(), 0.85));
  }
  std::vector<Parameter *> joint = testing::AllParams(enc.params());
  joint.push_back(&mdem.matrix());
  check("joint loss", joint, [&](Graph &g) {
    std::vector<Var> sup, unsup;
    for (std::size_t i = 0; i < batch.size(); ++i) {
      auto out = enc.Forward(g, batch[i]);
      sup.push_back(CrossEntropy(out.probs, batch[i].grade - 1));
      unsup.push_back(ConsistencyLoss(
          DocumentScore(SentenceScores(g, out.sentence_reps, mdem), out.doc_attention),
          targets[i]));
    }
    Var ls = ad::Scale(ad::Sum(ad::ConcatRows(sup)), 0.5);
    Var lu = ad::Scale(ad::Sum(ad::ConcatRows(unsup)), 0.5);
    return ad::Add(ls, ad::Scale(lu, 0.8));
  });

  DsdrConfig dcfg;
  dcfg.heads = 2;
  dcfg.context_layers = 1;
  DsdrModel dsdr(4, 3, dcfg, 10);
  testing::Randomize(dsdr.params(), rng);
  const Matrix ctx = testing::RandomMatrix(3, 4, rng);
  const Matrix wr = testing::RandomMatrix(dsdr.prototypes(), 4, rng);
  check("DSDR cross-attention", testing::AllParams(dsdr.params()), [&](Graph &g) {
    return Project(g, dsdr.MultiView(g, g.Constant(ctx)), wr);
  });
  check("DSDR forward", testing::AllParams(dsdr.params()), [&](Graph &g) {
    return CrossEntropy(dsdr.Forward(g, g.Constant(ctx)).probs, 1);
  });

  RankingHead rank(4, 3, 11);
  testing::Randomize(rank.params(), rng);
  const Matrix a = testing::RandomMatrix(3, 4, rng);
  const Matrix b = testing::RandomMatrix(3, 4, rng);
  check("ranking pair loss", testing::AllParams(rank.params()), [&](Graph &g) {
    Var logp = ad::LogSoftmaxRows(rank.PairLogits(g, g.Constant(a), g.Constant(b)));
    std::vector<Var> t;
    for (int i = 0; i < 3; ++i) t.push_back(ad::Pick(logp, i, 2 * i));
    return ad::Scale(ad::Sum(ad::ConcatCols(t)), -1.0 / 3.0);
  });
  OrdinalHead ord(4, 4, 12);
  testing::Randomize(ord.params(), rng);
  check("ordinal loss", testing::AllParams(ord.params()), [&](Graph &g) {
    Var th = ord.Thresholds(g);
    std::vector<Var> t;
    for (int i = 0; i < 3; ++i) {
      t.push_back(OrdinalLoss(ord.Score(g, g.Constant(Matrix(a.row(i)))), th, i + 1));
    }
    return ad::Sum(ad::ConcatCols(t));
  });

  const double secs = Seconds(start);
  Result r;
  double worst = 0.0;
  int kinks = 0;
  bool ok = true;
  for (const auto &[name, res] : checks) {
    ok = ok && res.max_rel_error < kGradTolerance;
    worst = std::max(worst, res.max_rel_error);
    kinks += res.kinks;
    r.notes.push_back(name + ": max rel error " + Fmt("%.2e", res.max_rel_error) +
                      (res.max_rel_error > 0 ? " (" + res.worst + ")" : ""));
  }
  r.pass = ok && secs < kGradSeconds;
  r.detail = std::to_string(checks.size()) + " checks, max rel error " + Fmt("%.2e", worst) +
             " (limit 1e-4), " + std::to_string(kinks) + " kink coordinates skipped, " +
             Fmt("%.1f", secs) + " s (limit 60 s)";
  return r;
}

// ---------------------------------------------------------------------------
// 2. Subset and pair combinatorics.

Result Combinatorics() {
  const auto start = Clock::now();
  long configurations = 0;
  long pairs_checked = 0;
  std::string failure;
  for (int levels = 2; levels <= 6 && failure.empty(); ++levels) {
    for (int per : {1, 2, 3, 5, 8, 13}) {
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        ++configurations;
        std::vector<int> grades;
        for (int i = 0; i < per * levels; ++i) grades.push_back(i % levels + 1);
        std::mt19937_64 rng(seed * 977 + static_cast<std::uint64_t>(levels));
        std::shuffle(grades.begin(), grades.end(), rng);
        const auto subsets = BuildSubsets(grades, levels, seed);
        auto fail = [&](const std::string &what) {
          if (failure.empty()) {
            failure = "Y=" + std::to_string(levels) + " per-grade=" + std::to_string(per) +
                      " seed=" + std::to_string(seed) + ": " + what;
          }
        };
        if (static_cast<int>(subsets.size()) != per) fail("subset count");
        std::vector<int> seen(grades.size(), 0);
        for (const auto &s : subsets) {
          std::set<int> sg;
          for (int m : s.members) {
            ++seen[static_cast<std::size_t>(m)];
            sg.insert(grades[static_cast<std::size_t>(m)]);
          }
          if (static_cast<int>(s.members.size()) != levels ||
              static_cast<int>(sg.size()) != levels) {
            fail("grade repeated inside a subset");
          }
          const auto pairs = MakePairs(s, grades);
          pairs_checked += static_cast<long>(pairs.size());
          if (static_cast<int>(pairs.size()) != levels * (levels - 1)) fail("pair count");
          std::map<std::pair<int, int>, int> diff;
          for (const auto &p : pairs) {
            const int expect = grades[static_cast<std::size_t>(p.a)] -
                               grades[static_cast<std::size_t>(p.b)];
            if (p.a == p.b || p.diff != expect) fail("pair label");
            if (!diff.emplace(std::pair{p.a, p.b}, p.diff).second) fail("duplicate pair");
            const int cls = DiffToClass(p.diff, levels);
            if (cls < 0 || cls > 2 * levels - 2 || ClassToDiff(cls, levels) != p.diff) {
              fail("class encoding");
            }
          }
          for (const auto &[ab, d] : diff) {
            auto it = diff.find({ab.second, ab.first});
            if (it == diff.end() || it->second != -d) fail("antisymmetry");
          }
        }
        for (int c : seen) {
          if (c != 1) fail("balanced corpus not partitioned");
        }
      }
    }
  }
  const double secs = Seconds(start);
  Result r;
  r.pass = failure.empty() && secs < kCombinatoricsSeconds;
  r.detail = std::to_string(configurations) + " corpora, " + std::to_string(pairs_checked) +
             " pairs, " + Fmt("%.2f", secs) + " s (limit 5 s)" +
             (failure.empty() ? "" : "; first failure: " + failure);
  return r;
}

// ---------------------------------------------------------------------------
// 3. Metric oracle.

Result MetricOracle() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int trial = 0; trial < kMetricSets; ++trial) {
    const int levels = std::uniform_int_distribution<int>(2, 6)(rng);
    const int n = std::uniform_int_distribution<int>(1, 200)(rng);
    std::uniform_int_distribution<int> grade(1, levels);
    // A quarter of the sets are near-perfect, so high-agreement cases are
    // covered too.
    const double noise = trial % 4 == 0 ? 0.1 : 1.0;
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<int> pred, truth;
    for (int i = 0; i < n; ++i) {
      truth.push_back(grade(rng));
      pred.push_back(coin(rng) < noise ? grade(rng) : truth.back());
    }
    const EvalReport got = Evaluate(pred, truth, levels);
    const testing::Oracle want = testing::Reference(pred, truth, levels);
    for (auto [a, b] : {std::pair{got.acc, want.acc}, {got.adj_acc, want.adj},
                        {got.precision, want.p}, {got.recall, want.r},
                        {got.f1, want.f1}, {got.qwk, want.qwk}}) {
      worst = std::max(worst, std::abs(a - b));
    }
  }
  Result r;
  r.pass = worst <= kMetricTolerance;
  r.detail = std::to_string(kMetricSets) + " sets (Y 2..6, N 1..200), max abs difference " +
             Fmt("%.2e", worst) + " (limit 1e-12)";
  return r;
}

// ---------------------------------------------------------------------------
// 4. End-to-end HHNN-MDEM on a synthetic 3-grade corpus.

Result HhnnEndToEnd(const fs::path &work) {
  const fs::path &dir = work;
  SyntheticConfig sc;
  sc.docs = 300;
  sc.levels = 3;
  sc.seed = 1;
  const SyntheticCorpus corpus = GenerateSynthetic(sc);
  const std::string corpus_path = WriteCorpus(dir / "corpus.jsonl", corpus);
  const std::string config = WriteJson(dir / "config.json", SmallModel(kHhnnEpochs));

  const auto start = Clock::now();
  const int code = RunCli({"train-hhnn", "--corpus", corpus_path, "--config", config,
                           "--out", (dir / "out").string(), "--seed", "1"});
  const double secs = Seconds(start);
  Result r;
  if (code != cli::kExitOk) {
    r.detail = "train-hhnn exited with " + std::to_string(code);
    return r;
  }
  const auto eval = nlohmann::json::parse(ReadFile(dir / "out" / "eval.json"));
  const double acc = eval["acc"].get<double>();

  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) by_id[corpus.docs[i].id] = i;
  const auto records =
      LoadSentenceCorpusJsonl((dir / "out" / "sentences.jsonl").string());
  long kept = 0, agree = 0, pure = 0, pure_agree = 0, as_doc = 0;
  for (const auto &rec : records) {
    if (rec.confidence < kSentenceConfidence) continue;
    const std::size_t d = by_id.at(rec.doc_id);
    const int truth = corpus.sentence_grades[d][static_cast<std::size_t>(rec.index)];
    const int doc_grade = corpus.docs[d].grade;
    ++kept;
    agree += rec.label == truth;
    as_doc += rec.label == doc_grade;
    if (truth == doc_grade) {
      ++pure;
      pure_agree += rec.label == truth;
    }
  }
  const double agreement = kept > 0 ? static_cast<double>(agree) / kept : 0.0;
  const long impure = kept - pure;
  const long impure_agree = agree - pure_agree;
  r.pass = acc >= kHhnnAccuracy && agreement >= kSentenceAgreement && secs < kHhnnSeconds;
  r.detail = "test acc " + Fmt("%.3f", acc) + " (limit 0.90) in " +
             std::to_string(kHhnnEpochs) + " epochs, " + Fmt("%.0f", secs) +
             " s (limit 600 s); sentence agreement " + Fmt("%.3f", agreement) +
             " (limit 0.80) over " + std::to_string(kept) + " sentences with confidence >= 0.5";
  r.notes.push_back("accuracy " + std::string(acc >= kHhnnAccuracy ? "PASS" : "FAIL") +
                    ", sentence agreement " +
                    (agreement >= kSentenceAgreement ? "PASS" : "FAIL"));
  r.notes.push_back("sentences whose generating grade equals the document grade: " +
                    std::to_string(pure) + ", agreement " +
                    Fmt("%.3f", pure > 0 ? static_cast<double>(pure_agree) / pure : 0.0));
  r.notes.push_back("sentences drawn from a neighbouring grade: " + std::to_string(impure) +
                    ", agreement " +
                    Fmt("%.3f", impure > 0 ? static_cast<double>(impure_agree) / impure : 0.0));
  r.notes.push_back("labels equal to the document grade: " +
                    Fmt("%.3f", kept > 0 ? static_cast<double>(as_doc) / kept : 0.0));
  return r;
}

// ---------------------------------------------------------------------------
// 5. Ranking head versus classification head on a 5-grade ordinal corpus.

Result OrdinalOrdering(const fs::path &work) {
  const fs::path &dir = work;
  SyntheticConfig sc;
  sc.docs = 300;
  sc.levels = 5;
  sc.neighbor = 0.3;
  sc.seed = 5;
  const std::string corpus_path = WriteCorpus(dir / "corpus.jsonl", GenerateSynthetic(sc));
  ConfigBuilder b;
  b.MergeJson(SmallModel(kHhnnEpochs), "acceptance");
  b.Set("corpus", corpus_path);
  const RunConfig config = b.Build();

  Result r;
  r.pass = true;
  r.notes.push_back("seed | cls qwk | ranking qwk | ordinal qwk | ranking - cls");
  double sum_cls = 0, sum_rank = 0, sum_ord = 0;
  for (std::uint64_t seed : {1, 2, 3}) {
    cli::PreparedData data = cli::PrepareData(config, seed);
    cli::HhnnModel hhnn = cli::TrainHhnnStage(config, data, seed);
    const auto sentences = ExtractSentenceLabels(*hhnn.encoder, *hhnn.mdem, data.train,
                                                 config.label_min_confidence);
    cli::DsdrStage dsdr = cli::TrainDsdrStage(config, data, sentences, seed);
    const std::vector<int> truth = cli::Grades(data.test);
    const std::vector<int> train_grades = cli::Grades(data.train);
    const Matrix train_vectors = DocumentVectors(*dsdr.model, *dsdr.encoder, data.train);
    const Matrix test_vectors = DocumentVectors(*dsdr.model, *dsdr.encoder, data.test);
    const std::vector<int> cls =
        cli::ArgMaxRows(PredictDsdr(*dsdr.model, *dsdr.encoder, data.test));
    cli::HeadModels heads = cli::TrainHeads(config, train_vectors, train_grades, data.levels,
                                            seed, true, true);
    const auto rank = cli::PredictRanking(heads, train_vectors, train_grades, test_vectors);
    const auto ord = cli::PredictOrdinalHead(heads, test_vectors);
    const double q_cls = QuadraticWeightedKappa(cls, truth, data.levels);
    const double q_rank = QuadraticWeightedKappa(rank.pred, truth, data.levels);
    const double q_ord = QuadraticWeightedKappa(ord.pred, truth, data.levels);
    sum_cls += q_cls;
    sum_rank += q_rank;
    sum_ord += q_ord;
    r.pass = r.pass && q_rank >= q_cls - kQwkMargin;
    r.notes.push_back(std::to_string(seed) + "    | " + Fmt("%.4f", q_cls) + "  | " +
                      Fmt("%.4f", q_rank) + "      | " + Fmt("%.4f", q_ord) + "      | " +
                      Fmt("%+.4f", q_rank - q_cls));
  }
  r.notes.push_back("mean | " + Fmt("%.4f", sum_cls / 3) + "  | " + Fmt("%.4f", sum_rank / 3) +
                    "      | " + Fmt("%.4f", sum_ord / 3) + "      | " +
                    Fmt("%+.4f", (sum_rank - sum_cls) / 3));
  r.detail = "ranking qwk >= cls qwk - 0.02 on each of 3 seeds (5 grades, 300 docs, "
             "neighbour mixing 0.3)";
  return r;
}

// ---------------------------------------------------------------------------
// 6. UDA mechanics.

Result UdaMechanics() {
  std::vector<std::string> failures;
  for (int levels = 2; levels <= 6; ++levels) {
    for (long total : {1L, 7L, 100L, 12345L}) {
      if (TsaThreshold(0, total, levels) != 1.0 / levels) {
        failures.push_back("TSA start Y=" + std::to_string(levels));
      }
      if (TsaThreshold(total, total, levels) != 1.0) {
        failures.push_back("TSA end Y=" + std::to_string(levels));
      }
    }
  }
  std::mt19937_64 rng(6);
  int sharpen_cases = 0;
  for (int trial = 0; trial < 2000; ++trial) {
    const int levels = 2 + trial % 5;
    RowVector logits = testing::RandomMatrix(1, levels, rng, 3.0);
    const RowVector p = Softmax(logits);
    for (double tau : {1.0, 0.85, 0.5, 0.1}) {
      ++sharpen_cases;
      const RowVector s = Sharpen(p, tau);
      if (ArgMax(s) != ArgMax(p) || std::abs(s.sum() - 1.0) > 1e-12) {
        failures.push_back("sharpening trial " + std::to_string(trial));
      }
    }
  }
  const double beta = 0.45;
  Matrix rows(3, 3);
  rows << beta, 0.3, 1.0 - beta - 0.3,
      std::nextafter(beta, 0.0), 0.3, 1.0 - std::nextafter(beta, 0.0) - 0.3,
      std::nextafter(beta, 1.0), 0.3, 0.25 - (std::nextafter(beta, 1.0) - beta);
  const std::vector<bool> mask = ConfidenceMask(rows, beta);
  if (!(mask[0] && !mask[1] && mask[2])) failures.push_back("confidence mask boundary");
  Result r;
  r.pass = failures.empty();
  r.detail = "TSA endpoints for Y 2..6 exact, " + std::to_string(sharpen_cases) +
             " sharpening cases keep the argmax, mask keeps max = 0.45 and drops the next "
             "double below";
  if (!failures.empty()) r.detail += "; first failure: " + failures.front();
  return r;
}

// ---------------------------------------------------------------------------
// 7. CLI determinism.

Result CliDeterminism(const fs::path &work) {
  const fs::path &dir = work;
  const std::string syn = (dir / "syn").string();
  const std::string corpus = (dir / "syn" / "corpus.jsonl").string();
  const nlohmann::json small = {
      {"encoder", {{"d_embed", 8}, {"d_hidden", 4}, {"kernels", 8}, {"heads", 2}}},
      {"data", {{"n_max", 8}, {"m_max", 16}}},
      {"train", {{"epochs", 3}}},
      {"dsdr", {{"heads", 2}, {"eptm_epochs", 2}}},
      {"ranking", {{"references", 3}}}};
  const std::string config = WriteJson(dir / "config.json", small);
  auto out = [&](const std::string &name) { return (dir / name).string(); };
  const std::vector<std::pair<std::vector<std::string>, std::string>> commands = {
      {{"generate-synthetic", "--out", syn, "--docs", "60", "--levels", "3", "--seed", "2"},
       syn},
      {{"split-corpus", "--corpus", corpus, "--out", out("split"), "--seed", "2"},
       out("split")},
      {{"train-hhnn", "--corpus", corpus, "--config", config, "--out", out("hhnn"), "--seed",
        "2"},
       out("hhnn")},
      {{"label-sentences", "--model", out("hhnn"), "--corpus", corpus, "--out", out("label")},
       out("label")},
      {{"train-dsdrrm", "--corpus", corpus, "--config", config, "--out", out("dsdrrm"),
        "--seed", "2", "--sentence-corpus", out("hhnn") + "/sentences.jsonl"},
       out("dsdrrm")},
      {{"evaluate", "--model", out("dsdrrm"), "--out", out("eval_rank"), "--head", "ranking"},
       out("eval_rank")},
      {{"evaluate", "--model", out("dsdrrm"), "--out", out("eval_ord"), "--head", "ordinal"},
       out("eval_ord")},
      {{"evaluate", "--model", out("dsdrrm"), "--out", out("eval_cls"), "--head", "cls"},
       out("eval_cls")},
      {{"evaluate", "--corpus", corpus, "--config", config, "--out", out("eval_run"),
        "--repeats", "2", "--seed", "2"},
       out("eval_run")},
      {{"extract-features", "--corpus", corpus, "--out", out("features")}, out("features")},
  };
  auto snapshot = [](const std::string &d) {
    std::map<std::string, std::string> files;
    for (const auto &e : fs::recursive_directory_iterator(d)) {
      if (e.is_regular_file()) files[fs::relative(e.path(), d).string()] = ReadFile(e.path());
    }
    return files;
  };
  Result r;
  r.pass = true;
  long files = 0;
  for (const auto &[args, target] : commands) {
    std::string out1, out2;
    if (RunCli(args, &out1) != cli::kExitOk) {
      r.pass = false;
      r.notes.push_back(args[0] + ": first run failed");
      continue;
    }
    const auto first = snapshot(target);
    if (RunCli(args, &out2) != cli::kExitOk) {
      r.pass = false;
      r.notes.push_back(args[0] + ": second run failed");
      continue;
    }
    const auto second = snapshot(target);
    files += static_cast<long>(first.size());
    if (first != second || out1 != out2) {
      r.pass = false;
      r.notes.push_back(args[0] + ": artifacts differ between runs");
    }
  }
  r.detail = std::to_string(commands.size()) + " command runs, " + std::to_string(files) +
             " artifact files byte-identical across two runs";
  return r;
}

// ---------------------------------------------------------------------------
// 8. Ablation harness.

Result Ablations(const fs::path &work) {
  const fs::path &dir = work;
  SyntheticConfig sc;
  sc.docs = 150;
  sc.levels = 3;
  sc.seed = 8;
  const std::string corpus = WriteCorpus(dir / "corpus.jsonl", GenerateSynthetic(sc));
  const std::string config = WriteJson(dir / "config.json", SmallModel(10));
  Result r;
  r.pass = true;
  r.notes.push_back("variant   | head    | acc    | adj    | f1     | qwk");
  for (const char *ablation : {"none", "context", "mdem", "ranking"}) {
    const std::string out = (dir / ablation).string();
    std::string stdout_text;
    const int code = RunCli({"evaluate", "--corpus", corpus, "--config", config, "--out", out,
                             "--seed", "1", "--ablation", ablation},
                            &stdout_text);
    if (code != cli::kExitOk) {
      r.pass = false;
      r.notes.push_back(std::string(ablation) + ": exit " + std::to_string(code));
      continue;
    }
    const auto report = nlohmann::json::parse(ReadFile(fs::path(out) / "report.json"));
    for (const char *key : {"acc", "adj_acc", "f1", "precision", "recall", "qwk", "confusion"}) {
      if (!report.contains(key)) {
        r.pass = false;
        r.notes.push_back(std::string(ablation) + ": report lacks " + key);
      }
    }
    if (!report.contains("qwk")) continue;
    const std::string name = std::string(ablation) == "none" ? "full" : std::string("-") + ablation;
    std::string head = report["head"].get<std::string>();
    head.resize(7, ' ');
    std::string padded = name;
    padded.resize(9, ' ');
    r.notes.push_back(padded + " | " + head + " | " + Fmt("%.4f", report["acc"].get<double>()) +
                      " | " + Fmt("%.4f", report["adj_acc"].get<double>()) + " | " +
                      Fmt("%.4f", report["f1"].get<double>()) + " | " +
                      Fmt("%.4f", report["qwk"].get<double>()));
  }
  r.detail = "full model and -context, -mdem, -ranking variants run through evaluate and emit "
             "the standard report";
  return r;
}

struct Criterion {
  int id;
  const char *title;
  std::function<Result(const fs::path &)> run;
};

int Main(int argc, char **argv) {
  fs::path work = fs::temp_directory_path() / "readrank_acceptance";
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--workdir" && i + 1 < argc) {
      work = argv[++i];
    } else {
      try {
        selected.insert(std::stoi(arg));
      } catch (const std::exception &) {
        std::cerr << "usage: acceptance [--workdir DIR] [criterion ...]\n";
        return 2;
      }
    }
  }
  const std::vector<Criterion> criteria = {
      {1, "gradient suite", [](const fs::path &) { return GradientSuite(); }},
      {2, "subset and pair combinatorics", [](const fs::path &) { return Combinatorics(); }},
      {3, "metric oracle", [](const fs::path &) { return MetricOracle(); }},
      {4, "end-to-end synthetic HHNN-MDEM", HhnnEndToEnd},
      {5, "ranking vs classification qwk", OrdinalOrdering},
      {6, "UDA mechanics", [](const fs::path &) { return UdaMechanics(); }},
      {7, "CLI determinism", CliDeterminism},
      {8, "ablation harness", Ablations},
  };
  int failed = 0;
  for (const Criterion &c : criteria) {
    if (!selected.empty() && selected.count(c.id) == 0) continue;
    const fs::path dir = work / ("criterion" + std::to_string(c.id));
    fs::remove_all(dir);
    fs::create_directories(dir);
    Result r;
    try {
      r = c.run(dir);
    } catch (const std::exception &e) {
      r.pass = false;
      r.detail = std::string("exception: ") + e.what();
    }
    failed += !r.pass;
    std::cout << "criterion " << c.id << " " << (r.pass ? "PASS" : "FAIL") << "  " << c.title
              << ": " << r.detail << '\n';
    for (const std::string &n : r.notes) std::cout << "    " << n << '\n';
    std::cout.flush();
  }
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace readrank::acceptance

int main(int argc, char **argv) { return readrank::acceptance::Main(argc, argv); }
