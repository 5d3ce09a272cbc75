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

#include "readrank_cli/pipeline.h"

#include <filesystem>
#include <fstream>

#include "readrank/errors.h"

namespace readrank::cli {
namespace {

VectorProvider ConstantRows(const Matrix &rows) {
  return [&rows](Graph &g, int i) { return g.Constant(Matrix(rows.row(i))); };
}

}  // namespace

std::vector<RawDocument> LoadCorpusOrFail(const std::string &path) {
  if (path.empty()) throw ConfigError("no corpus given (set corpus or --corpus)");
  if (!std::filesystem::is_regular_file(path)) {
    throw ConfigError("corpus file not found: " + path);
  }
  std::vector<RawDocument> docs = LoadCorpusJsonl(path);
  if (docs.empty()) throw DataError("corpus " + path + " is empty");
  return docs;
}

std::vector<int> Grades(std::span<const TokenizedDocument> docs) {
  std::vector<int> g;
  g.reserve(docs.size());
  for (const auto &d : docs) g.push_back(d.grade);
  return g;
}

PreparedData PrepareData(const RunConfig &config, std::uint64_t seed) {
  PreparedData data;
  data.raw = LoadCorpusOrFail(config.corpus);
  data.levels = InferLevels(data.raw);
  std::vector<int> grades;
  for (const auto &d : data.raw) grades.push_back(d.grade);
  const SplitIndices split = StratifiedSplitIndices(grades, config.split_ratio, seed);
  std::vector<RawDocument> train_raw;
  for (int i : split.train) train_raw.push_back(data.raw[static_cast<std::size_t>(i)]);
  data.vocab = Vocabulary::Build(train_raw, config.min_freq);
  const int m = config.encoder.m_max;
  const int n = config.encoder.n_max;
  for (int i : split.train) {
    data.train.push_back(EncodeDocument(data.raw[static_cast<std::size_t>(i)], data.vocab, m, n));
  }
  for (int i : split.test) {
    data.test.push_back(EncodeDocument(data.raw[static_cast<std::size_t>(i)], data.vocab, m, n));
  }
  return data;
}

EncoderConfig ResolveEncoder(const RunConfig &config, int vocab_size, int levels) {
  EncoderConfig e = config.encoder;
  e.vocab_size = vocab_size;
  e.levels = levels;
  e.Validate();
  return e;
}

RunConfig ApplyAblation(RunConfig config) {
  if (config.ablation == "context") {
    config.encoder.context = ContextMode::kNone;
  } else if (config.ablation == "mdem") {
    config.train.lambda = 0.0;
    config.ranking.backbone = "hhnn";
  } else if (config.ablation == "ranking") {
    config.head = "cls";
  }
  return config;
}

HhnnModel TrainHhnnStage(const RunConfig &config, const PreparedData &data,
                         std::uint64_t seed) {
  const EncoderConfig e = ResolveEncoder(config, data.vocab.size(), data.levels);
  HhnnModel model;
  model.encoder = std::make_unique<HierarchicalEncoder>(e, seed);
  if (!config.word_vectors.empty()) {
    LoadWordVectors(config.word_vectors, data.vocab,
                    model.encoder->params().Get("word.embed"));
  }
  model.mdem = std::make_unique<Mdem>(e.d(), e.heads, data.levels, seed + 1);
  TrainConfig t = config.train;
  t.seed = seed;
  model.history = TrainHhnn(*model.encoder, *model.mdem, data.train, t);
  return model;
}

Matrix HhnnDocumentVectors(const HierarchicalEncoder &encoder,
                           std::span<const TokenizedDocument> docs) {
  Matrix out(static_cast<Eigen::Index>(docs.size()), encoder.config().d());
  for (std::size_t i = 0; i < docs.size(); ++i) {
    Graph g(false);
    out.row(static_cast<Eigen::Index>(i)) =
        encoder.Forward(g, docs[i]).doc_vector.value().row(0);
  }
  return out;
}

std::vector<int> HhnnPredict(const HierarchicalEncoder &encoder,
                             std::span<const TokenizedDocument> docs) {
  std::vector<int> pred;
  for (const auto &doc : docs) {
    Graph g(false);
    pred.push_back(ArgMax(encoder.Forward(g, doc).probs.value().row(0)) + 1);
  }
  return pred;
}

std::vector<int> ArgMaxRows(const Matrix &probs) {
  std::vector<int> pred;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    pred.push_back(ArgMax(probs.row(i)) + 1);
  }
  return pred;
}

DsdrStage TrainDsdrStage(const RunConfig &config, const PreparedData &data,
                         const std::vector<SentenceRecord> &sentences,
                         std::uint64_t seed) {
  DsdrStage stage;
  if (!config.sentence_vectors.empty()) {
    stage.encoder = std::make_unique<ExternalSentenceEncoder>(
        ExternalSentenceEncoder::Load(config.sentence_vectors));
  } else {
    const EncoderConfig e = ResolveEncoder(config, data.vocab.size(), data.levels);
    auto internal = std::make_unique<InternalSentenceEncoder>(e, seed + 2);
    if (!config.word_vectors.empty()) {
      LoadWordVectors(config.word_vectors, data.vocab,
                      internal->params().Get("eptm.word.embed"));
    }
    if (config.dsdr.eptm_epochs > 0) {
      TrainConfig t = config.train;
      t.epochs = config.dsdr.eptm_epochs;
      t.seed = seed + 2;
      stage.eptm = PretrainEptm(*internal, sentences, data.vocab, data.levels, t);
    }
    stage.encoder = std::move(internal);
  }
  stage.model = std::make_unique<DsdrModel>(stage.encoder->dim(), data.levels,
                                            config.dsdr, seed + 3);
  TrainConfig t = config.train;
  t.seed = seed + 3;
  stage.history = TrainDsdr(*stage.model, *stage.encoder, data.train, t);
  return stage;
}

HeadModels TrainHeads(const RunConfig &config, const Matrix &train_vectors,
                      const std::vector<int> &train_grades, int levels,
                      std::uint64_t seed, bool ranking, bool ordinal,
                      const VectorProvider *tuned,
                      std::vector<ParameterSet *> backbone) {
  HeadModels heads;
  const int d = static_cast<int>(train_vectors.cols());
  const VectorProvider provider =
      tuned != nullptr ? *tuned : ConstantRows(train_vectors);
  if (ranking) {
    const std::vector<DataSubset> subsets = BuildSubsets(train_grades, levels, seed + 4);
    heads.ranking = std::make_unique<RankingHead>(d, levels, seed + 4);
    TrainConfig t = config.train;
    t.seed = seed + 4;
    heads.ranking_history = TrainRanking(*heads.ranking, subsets, train_grades, provider, t,
                                          backbone);
    heads.references = SelectReferences(subsets, config.ranking.references, seed + 5);
  }
  if (ordinal) {
    heads.ordinal = std::make_unique<OrdinalHead>(d, levels, seed + 6);
    TrainConfig t = config.train;
    t.seed = seed + 6;
    heads.ordinal_history = TrainOrdinal(*heads.ordinal, train_grades, provider, t, backbone);
  }
  return heads;
}

Predictions PredictRanking(const HeadModels &heads, const Matrix &train_vectors,
                           const std::vector<int> &train_grades,
                           const Matrix &test_vectors) {
  Predictions p;
  for (Eigen::Index i = 0; i < test_vectors.rows(); ++i) {
    VoteRecord v = InferGrade(*heads.ranking, test_vectors.row(i), heads.references,
                              train_grades, train_vectors);
    p.pred.push_back(v.winner);
    p.votes.push_back(v.counts);
  }
  return p;
}

Predictions PredictOrdinalHead(const HeadModels &heads, const Matrix &test_vectors) {
  Predictions p;
  const std::vector<double> thresholds = heads.ordinal->ThresholdValues();
  for (Eigen::Index i = 0; i < test_vectors.rows(); ++i) {
    p.pred.push_back(PredictOrdinal(heads.ordinal->Score(test_vectors.row(i)), thresholds));
    p.votes.emplace_back();
  }
  return p;
}

PipelineResult RunPipeline(const RunConfig &base, std::uint64_t seed) {
  const RunConfig config = ApplyAblation(base);
  PreparedData data = PrepareData(config, seed);
  HhnnModel hhnn = TrainHhnnStage(config, data, seed);
  const std::vector<int> train_grades = Grades(data.train);

  Matrix train_vectors;
  Matrix test_vectors;
  std::vector<int> cls_pred;
  DsdrStage dsdr;
  if (config.ranking.backbone == "hhnn") {
    cls_pred = HhnnPredict(*hhnn.encoder, data.test);
    train_vectors = HhnnDocumentVectors(*hhnn.encoder, data.train);
    test_vectors = HhnnDocumentVectors(*hhnn.encoder, data.test);
  } else {
    const std::vector<SentenceRecord> sentences = ExtractSentenceLabels(
        *hhnn.encoder, *hhnn.mdem, data.train, config.label_min_confidence);
    dsdr = TrainDsdrStage(config, data, sentences, seed);
    cls_pred = ArgMaxRows(PredictDsdr(*dsdr.model, *dsdr.encoder, data.test));
    train_vectors = DocumentVectors(*dsdr.model, *dsdr.encoder, data.train);
    test_vectors = DocumentVectors(*dsdr.model, *dsdr.encoder, data.test);
  }

  Predictions predictions;
  if (config.head == "cls") {
    predictions.pred = cls_pred;
    predictions.votes.resize(cls_pred.size());
  } else {
    VectorProvider tuned;
    std::vector<ParameterSet *> backbone;
    std::vector<Matrix> cached;
    if (config.ranking.fine_tune) {
      if (config.ranking.backbone == "hhnn") {
        const HierarchicalEncoder *enc = hhnn.encoder.get();
        const auto *docs = &data.train;
        tuned = [enc, docs](Graph &g, int i) {
          return enc->Forward(g, (*docs)[static_cast<std::size_t>(i)]).doc_vector;
        };
        backbone.push_back(&hhnn.encoder->params());
      } else {
        for (const auto &doc : data.train) {
          Graph g(false);
          cached.push_back(EncodeDocSentences(g, *dsdr.encoder, doc).value());
        }
        const DsdrModel *model = dsdr.model.get();
        tuned = [model, &cached](Graph &g, int i) {
          return model->Forward(g, g.Constant(cached[static_cast<std::size_t>(i)])).doc_vector;
        };
        backbone.push_back(&dsdr.model->params());
      }
    }
    HeadModels heads = TrainHeads(config, train_vectors, train_grades, data.levels,
                                  seed, config.head == "ranking",
                                  config.head == "ordinal",
                                  config.ranking.fine_tune ? &tuned : nullptr,
                                  backbone);
    if (config.ranking.fine_tune) {
      if (config.ranking.backbone == "hhnn") {
        train_vectors = HhnnDocumentVectors(*hhnn.encoder, data.train);
        test_vectors = HhnnDocumentVectors(*hhnn.encoder, data.test);
      } else {
        train_vectors = DocumentVectors(*dsdr.model, *dsdr.encoder, data.train);
        test_vectors = DocumentVectors(*dsdr.model, *dsdr.encoder, data.test);
      }
    }
    predictions = config.head == "ranking"
                      ? PredictRanking(heads, train_vectors, train_grades, test_vectors)
                      : PredictOrdinalHead(heads, test_vectors);
  }

  PipelineResult result;
  const std::vector<int> truth = Grades(data.test);
  result.report = Evaluate(predictions.pred, truth, data.levels);
  for (std::size_t i = 0; i < data.test.size(); ++i) {
    result.predictions.push_back(
        {data.test[i].id, truth[i], predictions.pred[i], predictions.votes[i]});
  }
  return result;
}

nlohmann::ordered_json RunMetadata(const std::string &command,
                                   const RunConfig &config,
                                   const nlohmann::ordered_json &flat) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_hash"] = config.hash;
  j["seed"] = config.seed;
  j["config"] = flat;
  return j;
}

void WriteJsonFile(const std::string &path, const nlohmann::ordered_json &j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::string ReportJson(const EvalReport &report) { return EvalReportToJson(report); }

}  // namespace readrank::cli
