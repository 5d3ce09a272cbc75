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
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "readrank/errors.h"
#include "readrank/mdem.h"
#include "testing.h"

namespace readrank {
namespace {

using testing::AllParams;
using testing::CheckGradients;
using testing::GridDocument;
using testing::RandomMatrix;
using testing::Randomize;

RowVector Row(std::initializer_list<double> v) {
  RowVector r(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) r(i++) = x;
  return r;
}

EncoderConfig TinyConfig() {
  EncoderConfig c;
  c.vocab_size = 10;
  c.d_embed = 4;
  c.d_hidden = 2;
  c.kernels = 4;
  c.heads = 2;
  c.layers = 1;
  c.levels = 3;
  c.n_max = 3;
  c.m_max = 4;
  return c;
}

std::vector<TokenizedDocument> TinyBatch(const EncoderConfig &c) {
  return {GridDocument(c.n_max, c.m_max, {{2, 3, 4}, {5, 6}}, 1, "a"),
          GridDocument(c.n_max, c.m_max, {{7, 8, 9, 2}, {3}, {4, 5}}, 3, "b")};
}

std::vector<const TokenizedDocument *> Pointers(
    const std::vector<TokenizedDocument> &docs) {
  std::vector<const TokenizedDocument *> out;
  for (const auto &d : docs) out.push_back(&d);
  return out;
}

TEST(SupervisedLossTest, KnownValues) {
  Matrix onehot(1, 3);
  onehot << 0, 1, 0;
  EXPECT_EQ(SupervisedLoss(onehot, std::vector<int>{1}), 0.0);
  Matrix uniform = Matrix::Constant(1, 4, 0.25);
  EXPECT_NEAR(SupervisedLoss(uniform, std::vector<int>{2}), std::log(4.0), 1e-12);
  Matrix r(1, 3);
  r << 0.7, 0.2, 0.1;
  EXPECT_NEAR(SupervisedLoss(r, std::vector<int>{1}), 1.6094379124341003, 1e-12);
}

TEST(SupervisedLossTest, ZeroProbabilityIsClamped) {
  Matrix r(1, 2);
  r << 1.0, 0.0;
  const double loss = SupervisedLoss(r, std::vector<int>{1});
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, -std::log(1e-12), 1e-9);
  Graph g;
  Var ce = CrossEntropy(g.Constant(r), 1);
  EXPECT_NEAR(ce.scalar(), -std::log(1e-12), 1e-9);
}

TEST(SentenceScoresTest, SingleHeadIsPlainProduct) {
  Mdem mdem(4, 1, 3, 1);
  std::mt19937_64 rng(2);
  Matrix u = RandomMatrix(2, 4, rng);
  Graph g;
  Var a = SentenceScores(g, g.Constant(u), mdem);
  EXPECT_TRUE(a.value().isApprox(u * mdem.matrix().value, 1e-12));
}

TEST(SentenceScoresTest, ZeroMatrixGivesZeroScores) {
  Mdem mdem(4, 2, 3, 1);
  mdem.matrix().value.setZero();
  std::mt19937_64 rng(3);
  Graph g;
  Var a = SentenceScores(g, g.Constant(RandomMatrix(3, 4, rng)), mdem);
  EXPECT_EQ(a.value().norm(), 0.0);
}

TEST(SentenceScoresTest, MatchesReshapedMatmulOracle) {
  // h=2, n=2, z=2, Y=3 with integer entries.
  Mdem mdem(4, 2, 3, 1);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pick(-3, 3);
  double m[2][2][3];
  for (int h = 0; h < 2; ++h)
    for (int i = 0; i < 2; ++i)
      for (int y = 0; y < 3; ++y) {
        m[h][i][y] = pick(rng);
        mdem.matrix().value(h * 2 + i, y) = m[h][i][y];
      }
  Matrix u(2, 4);
  for (Eigen::Index i = 0; i < u.size(); ++i) u.data()[i] = pick(rng);
  ASSERT_TRUE(mdem.Head(1).isApprox(mdem.matrix().value.bottomRows(2)));
  Graph g;
  Var a = SentenceScores(g, g.Constant(u), mdem);
  for (int s = 0; s < 2; ++s) {
    for (int y = 0; y < 3; ++y) {
      double expect = 0.0;
      for (int h = 0; h < 2; ++h)
        for (int k = 0; k < 2; ++k) expect += u(s, h * 2 + k) * m[h][k][y];
      EXPECT_EQ(a.value()(s, y), expect);
    }
  }
}

TEST(SentenceScoresTest, RejectsIndivisibleWidth) {
  EXPECT_THROW(Mdem(5, 2, 3, 1), ConfigError);
}

TEST(DocumentScoreTest, OneHotWeightsSelectRow) {
  std::mt19937_64 rng(5);
  Matrix a = RandomMatrix(3, 4, rng);
  Matrix w = Matrix::Zero(3, 1);
  w(1, 0) = 1.0;
  Graph g;
  Var r = DocumentScore(g.Constant(a), g.Constant(w));
  EXPECT_TRUE(r.value().isApprox(a.row(1)));
}

TEST(DocumentScoreTest, IdenticalRowsIgnoreWeights) {
  std::mt19937_64 rng(6);
  Matrix row = RandomMatrix(1, 4, rng);
  Matrix w(3, 1);
  w << 0.2, 0.5, 0.3;
  Graph g;
  Var r = DocumentScore(g.Constant(row.replicate(3, 1)), g.Constant(w));
  EXPECT_TRUE(r.value().isApprox(row, 1e-12));
}

TEST(DocumentScoreTest, MatchesWeightedSumOracle) {
  std::mt19937_64 rng(7);
  Matrix a = RandomMatrix(3, 4, rng);
  Matrix w(3, 1);
  w << 0.1, 0.6, 0.3;
  Graph g;
  Var r = DocumentScore(g.Constant(a), g.Constant(w));
  for (int y = 0; y < 4; ++y) {
    double expect = 0.0;
    for (int i = 0; i < 3; ++i) expect += w(i, 0) * a(i, y);
    EXPECT_NEAR(r.value()(0, y), expect, 1e-12);
  }
}

TEST(ConsistencyLossTest, ZeroWhenDistributionsMatch) {
  RowVector scores = Row({0.3, -1.2, 2.0});
  Graph g;
  Var loss = ConsistencyLoss(g.Constant(scores), Softmax(scores));
  EXPECT_NEAR(loss.scalar(), 0.0, 1e-12);
}

TEST(ConsistencyLossTest, OneHotTargetAgainstUniform) {
  Graph g;
  Var loss = ConsistencyLoss(g.Constant(Row({0.0, 0.0})), Row({1.0, 0.0}));
  EXPECT_NEAR(loss.scalar(), std::log(2.0), 1e-12);
}

TEST(ConsistencyLossTest, MatchesKlOracle) {
  const RowVector p = Row({0.2, 0.5, 0.3});
  const RowVector scores = Row({1.1, -0.4, 0.25});
  double z = 0.0;
  for (int k = 0; k < 3; ++k) z += std::exp(scores(k));
  double expect = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double q = std::exp(scores(k)) / z;
    expect += p(k) * std::log(p(k) / q);
  }
  Graph g;
  EXPECT_NEAR(ConsistencyLoss(g.Constant(scores), p).scalar(), expect, 1e-12);
  EXPECT_NEAR(KlDivergence(p, Softmax(scores)), expect, 1e-12);
}

TEST(ConsistencyLossTest, GradientIsSoftmaxMinusTarget) {
  const RowVector p = Row({0.1, 0.7, 0.2});
  Parameter s{"s", Row({0.5, -0.3, 1.4}), Matrix::Zero(1, 3)};
  Graph g;
  g.Backward(ConsistencyLoss(g.Param(s), p));
  EXPECT_TRUE(s.grad.isApprox(Softmax(s.value) - p, 1e-12));
}

TEST(TsaTest, LinearScheduleEndpoints) {
  EXPECT_DOUBLE_EQ(TsaThreshold(0, 100, 4), 0.25);
  EXPECT_DOUBLE_EQ(TsaThreshold(100, 100, 4), 1.0);
  EXPECT_DOUBLE_EQ(TsaThreshold(50, 100, 4), 0.625);
}

TEST(TsaTest, MaskDropsConfidentExamples) {
  const std::vector<double> losses = {1.5, 2.5};
  EXPECT_EQ(ApplyTsaMask(losses, std::vector<double>{0.9, 0.8}, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(ApplyTsaMask(losses, std::vector<double>{0.1, 0.3}, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(ApplyTsaMask(losses, std::vector<double>{0.9, 0.3}, 0.5), 2.5);
  // Equal to the threshold still trains.
  EXPECT_DOUBLE_EQ(ApplyTsaMask(losses, std::vector<double>{0.5, 0.9}, 0.5), 1.5);
}

TEST(ConfidenceMaskTest, ClosedThreshold) {
  Matrix p(3, 3);
  p << 0.44, 0.33, 0.23,
       0.45, 0.30, 0.25,
       0.2, 0.2, 0.6;
  EXPECT_EQ(ConfidenceMask(p, 0.45), (std::vector<bool>{false, true, true}));
  EXPECT_EQ(ConfidenceMask(Matrix::Constant(1, 2, 0.5), 0.45),
            std::vector<bool>{true});
}

TEST(SharpenTest, UnitTemperatureIsIdentity) {
  const RowVector p = Row({0.2, 0.5, 0.3});
  EXPECT_TRUE(Sharpen(p, 1.0).isApprox(p, 1e-15));
}

TEST(SharpenTest, SmallTemperatureApproachesOneHot) {
  const RowVector s = Sharpen(Row({0.3, 0.45, 0.25}), 1e-3);
  EXPECT_NEAR(s(1), 1.0, 1e-6);
  EXPECT_NEAR(s(0), 0.0, 1e-6);
  EXPECT_NEAR(s(2), 0.0, 1e-6);
}

TEST(SharpenTest, KnownValue) {
  const long double a = std::pow(0.6L, 1.0L / 0.85L);
  const long double b = std::pow(0.4L, 1.0L / 0.85L);
  const RowVector s = Sharpen(Row({0.6, 0.4}), 0.85);
  EXPECT_NEAR(s(0), static_cast<double>(a / (a + b)), 1e-14);
  EXPECT_NEAR(s(1), static_cast<double>(b / (a + b)), 1e-14);
  EXPECT_NEAR(s(0), 0.617, 5e-4);
}

TEST(ArgMaxTest, LowestIndexWinsTies) {
  EXPECT_EQ(ArgMax(Row({0.4, 0.4, 0.2})), 0);
  EXPECT_EQ(ArgMax(Row({0.1, 0.4, 0.4})), 1);
}

TEST(TrainConfigTest, RejectsInvalidValues) {
  TrainConfig c;
  c.tau = 0.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = TrainConfig();
  c.beta = 1.5;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = TrainConfig();
  c.lambda = -1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = TrainConfig();
  c.tsa_schedule = "exp";
  EXPECT_THROW(c.Validate(), ConfigError);
}

TEST(JointStepTest, LossEqualsIndependentRecomputation) {
  const EncoderConfig cfg = TinyConfig();
  HierarchicalEncoder enc(cfg, 8);
  Mdem mdem(cfg.d(), 2, cfg.levels, 9);
  std::mt19937_64 rng(10);
  Randomize(enc.params(), rng);
  Randomize(mdem.params(), rng);
  TrainConfig tc;
  tc.lambda = 0.7;
  tc.beta = 0.0;
  tc.tsa_schedule = "none";
  const auto docs = TinyBatch(cfg);
  HhnnTrainer trainer(enc, mdem, tc, 10);
  const LossBreakdown got = trainer.ComputeGradients(Pointers(docs), 0);

  Matrix probs(2, cfg.levels);
  std::vector<int> labels;
  double unsup = 0.0;
  for (int i = 0; i < 2; ++i) {
    Graph g(false);
    auto out = enc.Forward(g, docs[static_cast<std::size_t>(i)]);
    probs.row(i) = out.probs.value();
    labels.push_back(docs[static_cast<std::size_t>(i)].grade - 1);
    const Matrix u = out.sentence_reps.value();
    const Matrix w = out.doc_attention.value();
    const Matrix a = u * mdem.matrix().value;
    const RowVector r = w.transpose() * a;
    unsup += KlDivergence(Sharpen(probs.row(i), tc.tau), Softmax(r));
  }
  unsup /= 2.0;
  const double sup = SupervisedLoss(probs, labels);
  EXPECT_NEAR(got.sup, sup, 1e-12);
  EXPECT_NEAR(got.unsup, unsup, 1e-12);
  EXPECT_NEAR(got.total, sup + tc.lambda * unsup, 1e-12);
  EXPECT_EQ(got.confident, 2);
  EXPECT_EQ(got.tsa_kept, 2);
}

TEST(JointStepTest, ZeroLambdaGivesPureSupervisedGradient) {
  const EncoderConfig cfg = TinyConfig();
  const auto docs = TinyBatch(cfg);
  auto grads = [&](double lambda, double beta) {
    HierarchicalEncoder enc(cfg, 11);
    Mdem mdem(cfg.d(), 2, cfg.levels, 12);
    TrainConfig tc;
    tc.lambda = lambda;
    tc.beta = beta;
    tc.tsa_schedule = "none";
    HhnnTrainer trainer(enc, mdem, tc, 10);
    LossBreakdown b = trainer.ComputeGradients(Pointers(docs), 0);
    std::vector<Matrix> out;
    for (std::size_t i = 0; i < enc.params().size(); ++i) {
      out.push_back(enc.params()[i].grad);
    }
    out.push_back(mdem.matrix().grad);
    return std::make_pair(b, out);
  };
  // beta = 1 keeps every example out of the consistency term.
  auto [with_unsup, g0] = grads(0.0, 0.0);
  auto [sup_only, g1] = grads(1.0, 1.0);
  ASSERT_EQ(with_unsup.confident, 2);
  ASSERT_EQ(sup_only.confident, 0);
  for (std::size_t i = 0; i + 1 < g0.size(); ++i) {
    EXPECT_TRUE(g0[i] == g1[i]) << "parameter " << i;
  }
  EXPECT_EQ(g0.back().norm(), 0.0);
}

TEST(JointStepTest, TrainingOnlyMdemLeavesSupervisedLossUnchanged) {
  const EncoderConfig cfg = TinyConfig();
  HierarchicalEncoder enc(cfg, 13);
  Mdem mdem(cfg.d(), 2, cfg.levels, 14);
  enc.params().SetTrainable(false);
  TrainConfig tc;
  tc.beta = 0.0;
  tc.lr = 0.05;
  tc.tsa_schedule = "none";
  const auto docs = TinyBatch(cfg);
  HhnnTrainer trainer(enc, mdem, tc, 10);
  const Matrix before = mdem.matrix().value;
  LossBreakdown first = trainer.Step(Pointers(docs), 0);
  double last_unsup = first.unsup;
  for (int s = 1; s < 5; ++s) {
    LossBreakdown b = trainer.Step(Pointers(docs), s);
    EXPECT_EQ(b.sup, first.sup);
    last_unsup = b.unsup;
  }
  EXPECT_FALSE(mdem.matrix().value == before);
  EXPECT_LT(last_unsup, first.unsup);
}

TEST(JointStepTest, RejectsGradeOutsideLevels) {
  const EncoderConfig cfg = TinyConfig();
  HierarchicalEncoder enc(cfg, 15);
  Mdem mdem(cfg.d(), 2, cfg.levels, 16);
  HhnnTrainer trainer(enc, mdem, TrainConfig(), 10);
  auto doc = GridDocument(cfg.n_max, cfg.m_max, {{2, 3}}, 4);
  std::vector<const TokenizedDocument *> batch = {&doc};
  EXPECT_THROW(trainer.ComputeGradients(batch, 0), DataError);
}

TEST(JointStepTest, MismatchedMdemIsRejected) {
  const EncoderConfig cfg = TinyConfig();
  HierarchicalEncoder enc(cfg, 15);
  Mdem mdem(cfg.d(), 2, cfg.levels + 1, 16);
  EXPECT_THROW(HhnnTrainer(enc, mdem, TrainConfig(), 10), ConfigError);
}

TEST(JointGradientTest, MatchesCentralDifferences) {
  const EncoderConfig cfg = TinyConfig();
  HierarchicalEncoder enc(cfg, 17);
  Mdem mdem(cfg.d(), 2, cfg.levels, 18);
  std::mt19937_64 rng(19);
  Randomize(enc.params(), rng);
  Randomize(mdem.params(), rng);
  const auto docs = TinyBatch(cfg);
  const double lambda = 0.8;
  // Sharpened targets are constants of the step.
  std::vector<RowVector> targets;
  for (const auto &d : docs) {
    Graph g(false);
    targets.push_back(Sharpen(enc.Forward(g, d).probs.value(), 0.85));
  }
  auto loss = [&](Graph &g) {
    std::vector<Var> sup;
    std::vector<Var> unsup;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      auto out = enc.Forward(g, docs[i]);
      sup.push_back(CrossEntropy(out.probs, docs[i].grade - 1));
      Var r = DocumentScore(SentenceScores(g, out.sentence_reps, mdem),
                            out.doc_attention);
      unsup.push_back(ConsistencyLoss(r, targets[i]));
    }
    Var ls = ad::Scale(ad::Sum(ad::ConcatRows(sup)), 0.5);
    Var lu = ad::Scale(ad::Sum(ad::ConcatRows(unsup)), 0.5);
    return ad::Add(ls, ad::Scale(lu, lambda));
  };
  std::vector<Parameter *> params = AllParams(enc.params());
  params.push_back(&mdem.matrix());
  testing::GradCheckResult r = CheckGradients(params, loss);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(TrainHhnnTest, DeterministicUnderSeed) {
  const EncoderConfig cfg = TinyConfig();
  const auto docs = TinyBatch(cfg);
  auto run = [&] {
    HierarchicalEncoder enc(cfg, 20);
    Mdem mdem(cfg.d(), 2, cfg.levels, 21);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 1;
    auto history = TrainHhnn(enc, mdem, docs, tc);
    return std::make_pair(history.back().total, mdem.matrix().value);
  };
  auto a = run();
  auto b = run();
  EXPECT_EQ(a.first, b.first);
  EXPECT_TRUE(a.second == b.second);
}

TEST(TrainHhnnTest, EmptyTrainingSetThrows) {
  const EncoderConfig cfg = TinyConfig();
  HierarchicalEncoder enc(cfg, 22);
  Mdem mdem(cfg.d(), 2, cfg.levels, 23);
  EXPECT_THROW(TrainHhnn(enc, mdem, {}, TrainConfig()), DataError);
}

TEST(ExtractSentenceLabelsTest, SoftmaxOfKnownRow) {
  const RowVector p = Softmax(Row({5.0, 0.0, 0.0}));
  EXPECT_EQ(ArgMax(p) + 1, 1);
  EXPECT_NEAR(p(0), std::exp(5.0) / (std::exp(5.0) + 2.0), 1e-15);
  EXPECT_NEAR(p(0), 0.986, 1e-3);
}

TEST(ExtractSentenceLabelsTest, LabelsFollowScoreRows) {
  const EncoderConfig cfg = TinyConfig();
  HierarchicalEncoder enc(cfg, 24);
  Mdem mdem(cfg.d(), 2, cfg.levels, 25);
  std::mt19937_64 rng(26);
  Randomize(enc.params(), rng);
  Randomize(mdem.params(), rng, 2.0);
  const auto docs = TinyBatch(cfg);
  auto records = ExtractSentenceLabels(enc, mdem, docs, 0.0);
  ASSERT_EQ(records.size(), 5u);
  std::size_t k = 0;
  for (const auto &doc : docs) {
    Graph g(false);
    auto out = enc.Forward(g, doc);
    const Matrix a = out.sentence_reps.value() * mdem.matrix().value;
    for (int i = 0; i < doc.n_real; ++i, ++k) {
      const RowVector p = Softmax(a.row(i));
      Eigen::Index best;
      p.maxCoeff(&best);
      EXPECT_EQ(records[k].doc_id, doc.id);
      EXPECT_EQ(records[k].index, out.real_rows[static_cast<std::size_t>(i)]);
      EXPECT_EQ(records[k].label, best + 1);
      EXPECT_NEAR(records[k].confidence, p.maxCoeff(), 1e-12);
      EXPECT_EQ(records[k].tokens, doc.tokens[static_cast<std::size_t>(i)]);
    }
  }
  const double cut = records[0].confidence;
  auto kept = ExtractSentenceLabels(enc, mdem, docs, cut);
  for (const auto &r : kept) EXPECT_GE(r.confidence, cut);
  EXPECT_LE(kept.size(), records.size());
  EXPECT_TRUE(ExtractSentenceLabels(enc, mdem, docs, 1.01).empty());
}

TEST(SentenceCorpusTest, JsonlRoundTrip) {
  std::vector<SentenceRecord> records(2);
  records[0] = {"d1", 0, {"a", "b"}, 2, 0.75};
  records[1] = {"d2", 3, {"c"}, 1, 0.5};
  const auto path =
      std::filesystem::temp_directory_path() / "readrank_sentences_test.jsonl";
  WriteSentenceCorpusJsonl(path.string(), records);
  auto back = LoadSentenceCorpusJsonl(path.string());
  std::filesystem::remove(path);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].doc_id, records[i].doc_id);
    EXPECT_EQ(back[i].index, records[i].index);
    EXPECT_EQ(back[i].tokens, records[i].tokens);
    EXPECT_EQ(back[i].label, records[i].label);
    EXPECT_EQ(back[i].confidence, records[i].confidence);
  }
  EXPECT_THROW(LoadSentenceCorpusJsonl("/nonexistent/x.jsonl"), DataError);
}

}  // namespace
}  // namespace readrank
