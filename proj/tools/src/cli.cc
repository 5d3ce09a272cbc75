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

#include "readrank_cli/cli.h"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "readrank/checkpoint.h"
#include "readrank/errors.h"
#include "readrank/features.h"
#include "readrank/synthetic.h"
#include "readrank_cli/pipeline.h"

namespace readrank::cli {
namespace {

namespace fs = std::filesystem;

// Flags shared by every pipeline subcommand.
struct CommonOptions {
  std::string config;
  std::string preset;
  std::optional<long long> seed;
  std::string out;
  std::string corpus;
  std::vector<std::string> sets;
};

void AddCommon(CLI::App *cmd, CommonOptions &o) {
  cmd->add_option("--config", o.config, "JSON config file");
  cmd->add_option("--preset", o.preset, "default or cmer");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--corpus", o.corpus, "corpus JSONL");
  cmd->add_option("--set", o.sets, "override a config key, key=value");
}

struct Resolved {
  RunConfig config;
  nlohmann::ordered_json flat;
};

Resolved Resolve(const CommonOptions &o,
                 const std::vector<std::pair<std::string, std::string>> &extra) {
  ConfigBuilder b;
  if (!o.preset.empty()) b.ApplyPreset(o.preset);
  if (!o.config.empty()) b.MergeFile(o.config);
  for (const auto &[key, value] : extra) {
    if (!value.empty()) b.Set(key, value);
  }
  if (o.seed) b.Set("seed", std::to_string(*o.seed));
  if (!o.out.empty()) b.Set("out", o.out);
  if (!o.corpus.empty()) b.Set("corpus", o.corpus);
  for (const auto &s : o.sets) b.SetAssignment(s);
  return {b.Build(), b.flat()};
}

std::string RequireOut(const RunConfig &c) {
  if (c.out.empty()) throw ConfigError("no output directory (set out or --out)");
  std::error_code ec;
  fs::create_directories(c.out, ec);
  if (ec) throw ConfigError("cannot create output directory " + c.out);
  return c.out;
}

std::string Join(const std::string &dir, const std::string &name) {
  return (fs::path(dir) / name).string();
}

nlohmann::ordered_json ModelMeta(const std::string &kind, const Resolved &r,
                                 const PreparedData &data) {
  nlohmann::ordered_json meta;
  meta["kind"] = kind;
  meta["config_hash"] = r.config.hash;
  meta["levels"] = data.levels;
  meta["config"] = r.flat;
  meta["vocab"] = data.vocab.tokens();
  return meta;
}

// Rebuilds the run config stored in a checkpoint.
RunConfig StoredConfig(const nlohmann::json &meta) {
  ConfigBuilder b;
  b.MergeJson(meta.at("config"), "checkpoint config");
  return b.Build();
}

void WriteSentences(const std::string &path,
                    const std::vector<SentenceRecord> &records) {
  WriteSentenceCorpusJsonl(path, records);
}

int TrainHhnnCommand(const Resolved &r) {
  const RunConfig &c = r.config;
  const std::string out = RequireOut(c);
  PreparedData data = PrepareData(c, c.seed);
  HhnnModel model = TrainHhnnStage(c, data, c.seed);
  const ParameterSet *sets[] = {&model.encoder->params(), &model.mdem->params()};
  SaveCheckpoint(Join(out, "hhnn"), ModelMeta("hhnn", r, data), sets);
  WriteTrainingLogCsv(Join(out, "training_log.csv"), model.history);
  const auto sentences = ExtractSentenceLabels(*model.encoder, *model.mdem,
                                               data.train, c.label_min_confidence);
  if (sentences.empty()) throw DataError("no sentence passed the confidence filter");
  WriteSentences(Join(out, "sentences.jsonl"), sentences);
  const std::vector<int> pred = HhnnPredict(*model.encoder, data.test);
  const EvalReport report = Evaluate(pred, Grades(data.test), data.levels);
  std::ofstream(Join(out, "eval.json"), std::ios::binary) << ReportJson(report) << '\n';
  WriteJsonFile(Join(out, "run.json"), RunMetadata("train-hhnn", c, r.flat));
  return kExitOk;
}

struct LoadedHhnn {
  RunConfig config;
  Vocabulary vocab;
  int levels = 0;
  std::unique_ptr<HierarchicalEncoder> encoder;
  std::unique_ptr<Mdem> mdem;
};

LoadedHhnn LoadHhnn(const std::string &dir) {
  const nlohmann::json meta = LoadCheckpointMeta(dir);
  if (meta.value("kind", "") != "hhnn") {
    throw ConfigError(dir + " is not a train-hhnn checkpoint");
  }
  LoadedHhnn m;
  m.config = StoredConfig(meta);
  m.vocab = Vocabulary::FromTokens(meta.at("vocab").get<std::vector<std::string>>());
  m.levels = meta.at("levels").get<int>();
  const EncoderConfig e = ResolveEncoder(m.config, m.vocab.size(), m.levels);
  m.encoder = std::make_unique<HierarchicalEncoder>(e, m.config.seed);
  m.mdem = std::make_unique<Mdem>(e.d(), e.heads, m.levels, m.config.seed + 1);
  ParameterSet *sets[] = {&m.encoder->params(), &m.mdem->params()};
  LoadCheckpointParameters(dir, sets);
  return m;
}

std::string HhnnDir(const std::string &model) {
  if (fs::exists(fs::path(model) / "manifest.json")) return model;
  return Join(model, "hhnn");
}

int LabelSentencesCommand(const Resolved &r) {
  const RunConfig &c = r.config;
  if (c.model.empty()) throw ConfigError("label-sentences needs --model");
  const std::string out = RequireOut(c);
  LoadedHhnn m = LoadHhnn(HhnnDir(c.model));
  const std::vector<RawDocument> raw = LoadCorpusOrFail(c.corpus);
  std::vector<TokenizedDocument> docs;
  for (const auto &d : raw) {
    docs.push_back(EncodeDocument(d, m.vocab, m.config.encoder.m_max,
                                  m.config.encoder.n_max));
  }
  const auto sentences = ExtractSentenceLabels(*m.encoder, *m.mdem, docs,
                                               c.label_min_confidence);
  WriteSentences(Join(out, "sentences.jsonl"), sentences);
  WriteJsonFile(Join(out, "run.json"), RunMetadata("label-sentences", c, r.flat));
  return kExitOk;
}

void WriteDsdrLog(const std::string &path, const std::vector<DsdrEpochStats> &h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.precision(17);
  out << "epoch,loss,train_acc\n";
  for (const auto &s : h) out << s.epoch << ',' << s.loss << ',' << s.train_acc << '\n';
}

void WriteHeadLog(const std::string &path, const std::vector<RankingEpochStats> &h) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out.precision(17);
  out << "epoch,loss,train_acc\n";
  for (const auto &s : h) out << s.epoch << ',' << s.loss << ',' << s.pair_acc << '\n';
}

int TrainDsdrrmCommand(const Resolved &r) {
  const RunConfig &c = r.config;
  if (c.sentence_corpus.empty() && c.sentence_vectors.empty()) {
    throw ConfigError(
        "train-dsdrrm needs the sentence corpus from train-hhnn "
        "(pass --sentence-corpus)");
  }
  if (!c.sentence_corpus.empty() && !fs::is_regular_file(c.sentence_corpus)) {
    throw ConfigError("sentence corpus not found: " + c.sentence_corpus);
  }
  const std::string out = RequireOut(c);
  PreparedData data = PrepareData(c, c.seed);
  std::vector<SentenceRecord> sentences;
  if (!c.sentence_corpus.empty()) sentences = LoadSentenceCorpusJsonl(c.sentence_corpus);
  DsdrStage stage = TrainDsdrStage(c, data, sentences, c.seed);

  const nlohmann::ordered_json meta = ModelMeta("dsdrrm", r, data);
  if (auto *internal = dynamic_cast<InternalSentenceEncoder *>(stage.encoder.get())) {
    const ParameterSet *sets[] = {&internal->params()};
    SaveCheckpoint(Join(out, "eptm"), meta, sets);
    std::ofstream log(Join(out, "eptm_log.csv"), std::ios::binary);
    log.precision(17);
    log << "epoch,loss\n";
    for (std::size_t i = 0; i < stage.eptm.epoch_loss.size(); ++i) {
      log << i + 1 << ',' << stage.eptm.epoch_loss[i] << '\n';
    }
  }
  const ParameterSet *dsdr_sets[] = {&stage.model->params()};
  SaveCheckpoint(Join(out, "dsdr"), meta, dsdr_sets);
  WriteDsdrLog(Join(out, "dsdr_log.csv"), stage.history);

  const Matrix train_vectors = DocumentVectors(*stage.model, *stage.encoder, data.train);
  HeadModels heads = TrainHeads(c, train_vectors, Grades(data.train), data.levels,
                                c.seed, true, true);
  const ParameterSet *rank_sets[] = {&heads.ranking->params()};
  SaveCheckpoint(Join(out, "ranking"), meta, rank_sets);
  WriteHeadLog(Join(out, "ranking_log.csv"), heads.ranking_history);
  const ParameterSet *ord_sets[] = {&heads.ordinal->params()};
  SaveCheckpoint(Join(out, "ordinal"), meta, ord_sets);
  WriteHeadLog(Join(out, "ordinal_log.csv"), heads.ordinal_history);
  WriteJsonFile(Join(out, "run.json"), RunMetadata("train-dsdrrm", c, r.flat));
  return kExitOk;
}

// Evaluates a saved model on the test split it was trained against.
PipelineResult EvaluateSaved(const RunConfig &c) {
  const std::string dsdr_dir = Join(c.model, "dsdr");
  if (!fs::exists(fs::path(dsdr_dir) / "manifest.json")) {
    LoadedHhnn m = LoadHhnn(HhnnDir(c.model));
    if (c.head != "cls") {
      throw ConfigError("a train-hhnn model only supports --head cls");
    }
    RunConfig stored = m.config;
    if (!c.corpus.empty()) stored.corpus = c.corpus;
    PreparedData data = PrepareData(stored, stored.seed);
    PipelineResult res;
    const std::vector<int> pred = HhnnPredict(*m.encoder, data.test);
    const std::vector<int> truth = Grades(data.test);
    res.report = Evaluate(pred, truth, data.levels);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      res.predictions.push_back({data.test[i].id, truth[i], pred[i], {}});
    }
    return res;
  }

  const nlohmann::json meta = LoadCheckpointMeta(dsdr_dir);
  RunConfig stored = StoredConfig(meta);
  if (!c.corpus.empty()) stored.corpus = c.corpus;
  PreparedData data = PrepareData(stored, stored.seed);
  std::unique_ptr<SentenceEncoder> encoder;
  if (!stored.sentence_vectors.empty()) {
    encoder = std::make_unique<ExternalSentenceEncoder>(
        ExternalSentenceEncoder::Load(stored.sentence_vectors));
  } else {
    auto internal = std::make_unique<InternalSentenceEncoder>(
        ResolveEncoder(stored, data.vocab.size(), data.levels), stored.seed + 2);
    ParameterSet *sets[] = {&internal->params()};
    LoadCheckpointParameters(Join(c.model, "eptm"), sets);
    encoder = std::move(internal);
  }
  DsdrModel model(encoder->dim(), data.levels, stored.dsdr, stored.seed + 3);
  ParameterSet *model_sets[] = {&model.params()};
  LoadCheckpointParameters(dsdr_dir, model_sets);

  const std::vector<int> truth = Grades(data.test);
  const std::vector<int> train_grades = Grades(data.train);
  Predictions p;
  if (c.head == "cls") {
    p.pred = ArgMaxRows(PredictDsdr(model, *encoder, data.test));
    p.votes.resize(p.pred.size());
  } else {
    const Matrix train_vectors = DocumentVectors(model, *encoder, data.train);
    const Matrix test_vectors = DocumentVectors(model, *encoder, data.test);
    HeadModels heads;
    if (c.head == "ranking") {
      heads.ranking = std::make_unique<RankingHead>(model.d(), data.levels, stored.seed + 4);
      ParameterSet *sets[] = {&heads.ranking->params()};
      LoadCheckpointParameters(Join(c.model, "ranking"), sets);
      const auto subsets = BuildSubsets(train_grades, data.levels, stored.seed + 4);
      heads.references = SelectReferences(subsets, stored.ranking.references, stored.seed + 5);
      p = PredictRanking(heads, train_vectors, train_grades, test_vectors);
    } else {
      heads.ordinal = std::make_unique<OrdinalHead>(model.d(), data.levels, stored.seed + 6);
      ParameterSet *sets[] = {&heads.ordinal->params()};
      LoadCheckpointParameters(Join(c.model, "ordinal"), sets);
      p = PredictOrdinalHead(heads, test_vectors);
    }
  }
  PipelineResult res;
  res.report = Evaluate(p.pred, truth, data.levels);
  for (std::size_t i = 0; i < p.pred.size(); ++i) {
    res.predictions.push_back({data.test[i].id, truth[i], p.pred[i], p.votes[i]});
  }
  return res;
}

nlohmann::ordered_json ReportObject(const EvalReport &report) {
  return nlohmann::ordered_json::parse(ReportJson(report));
}

int EvaluateCommand(const Resolved &r, std::ostream &out) {
  const RunConfig &c = r.config;
  const std::string dir = RequireOut(c);
  nlohmann::ordered_json report;
  if (!c.model.empty()) {
    const PipelineResult res = EvaluateSaved(c);
    report = ReportObject(res.report);
    WritePredictionsJsonl(Join(dir, "predictions.jsonl"), res.predictions);
  } else {
    std::vector<EvalReport> reports;
    nlohmann::ordered_json runs = nlohmann::ordered_json::array();
    for (int k = 0; k < c.repeats; ++k) {
      const std::uint64_t seed = c.seed + static_cast<std::uint64_t>(k);
      const PipelineResult res = RunPipeline(c, seed);
      reports.push_back(res.report);
      nlohmann::ordered_json run = ReportObject(res.report);
      run["seed"] = seed;
      runs.push_back(run);
      const std::string name = c.repeats == 1
                                   ? "predictions.jsonl"
                                   : "predictions_seed" + std::to_string(seed) + ".jsonl";
      WritePredictionsJsonl(Join(dir, name), res.predictions);
    }
    report = ReportObject(MeanReport(reports));
    if (c.repeats > 1) {
      for (const char *key : {"acc", "adj_acc", "f1", "precision", "recall", "qwk"}) {
        report[std::string("mean_") + key] = report[key];
      }
      report["runs"] = runs;
    }
  }
  nlohmann::ordered_json full;
  full["head"] = ApplyAblation(c).head;
  full["ablation"] = c.ablation;
  full["config_hash"] = c.hash;
  full["repeats"] = c.model.empty() ? c.repeats : 1;
  for (auto it = report.begin(); it != report.end(); ++it) full[it.key()] = it.value();
  WriteJsonFile(Join(dir, "report.json"), full);
  WriteJsonFile(Join(dir, "run.json"), RunMetadata("evaluate", c, r.flat));
  out << full.dump(2) << '\n';
  return kExitOk;
}

int ExtractFeaturesCommand(const Resolved &r) {
  const RunConfig &c = r.config;
  const std::string out = RequireOut(c);
  const std::vector<RawDocument> docs = LoadCorpusOrFail(c.corpus);
  const FeatureResources resources = LoadResources(c.resources);
  std::vector<FeatureVector> features;
  for (const auto &d : docs) features.push_back(ExtractAll(d, resources, c.features));
  WriteFeatureCsv(Join(out, "features.csv"), docs, features);
  WriteJsonFile(Join(out, "run.json"), RunMetadata("extract-features", c, r.flat));
  return kExitOk;
}

int SplitCorpusCommand(const Resolved &r) {
  const RunConfig &c = r.config;
  const std::string out = RequireOut(c);
  const std::vector<RawDocument> docs = LoadCorpusOrFail(c.corpus);
  std::vector<int> grades;
  for (const auto &d : docs) grades.push_back(d.grade);
  const SplitIndices split = StratifiedSplitIndices(grades, c.split_ratio, c.seed);
  std::vector<RawDocument> train;
  std::vector<RawDocument> test;
  for (int i : split.train) train.push_back(docs[static_cast<std::size_t>(i)]);
  for (int i : split.test) test.push_back(docs[static_cast<std::size_t>(i)]);
  WriteCorpusJsonl(Join(out, "train.jsonl"), train);
  WriteCorpusJsonl(Join(out, "test.jsonl"), test);
  WriteJsonFile(Join(out, "run.json"), RunMetadata("split-corpus", c, r.flat));
  return kExitOk;
}

int GenerateSyntheticCommand(const SyntheticConfig &cfg, const std::string &out) {
  if (out.empty()) throw ConfigError("generate-synthetic needs --out");
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory " + out);
  const SyntheticCorpus corpus = GenerateSynthetic(cfg);
  WriteCorpusJsonl(Join(out, "corpus.jsonl"), corpus.docs);
  WriteSentenceTruthJsonl(Join(out, "sentence_truth.jsonl"), corpus);
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"readrank: hierarchical readability assessment pipeline"};
  app.require_subcommand(1);

  CommonOptions common;
  std::string head;
  std::string sentence_corpus;
  std::string model;
  std::string ablation;
  std::optional<int> repeats;

  auto *train_hhnn = app.add_subcommand("train-hhnn", "train HHNN-MDEM and label sentences");
  auto *label = app.add_subcommand("label-sentences", "label sentences with a trained HHNN");
  auto *train_dsdrrm = app.add_subcommand("train-dsdrrm", "pretrain EPTM, train DSDR and heads");
  auto *evaluate = app.add_subcommand("evaluate", "train and evaluate, or evaluate a model");
  auto *features = app.add_subcommand("extract-features", "write linguistic features as CSV");
  auto *split = app.add_subcommand("split-corpus", "stratified train/test split");
  auto *synth = app.add_subcommand("generate-synthetic", "write a graded synthetic corpus");

  for (auto *cmd : {train_hhnn, label, train_dsdrrm, evaluate, features, split}) {
    AddCommon(cmd, common);
  }
  label->add_option("--model", model, "train-hhnn output or checkpoint directory");
  train_dsdrrm->add_option("--sentence-corpus", sentence_corpus, "sentence JSONL");
  evaluate->add_option("--head", head, "cls, ordinal or ranking");
  evaluate->add_option("--model", model, "train-dsdrrm or train-hhnn output");
  evaluate->add_option("--repeats", repeats, "number of seeds to average");
  evaluate->add_option("--ablation", ablation, "none, context, mdem or ranking");

  SyntheticConfig synth_cfg;
  std::string synth_out;
  long long synth_seed = 1;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--docs", synth_cfg.docs, "number of documents");
  synth->add_option("--levels", synth_cfg.levels, "number of grades");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--purity", synth_cfg.purity, "P(sentence grade = document grade)");
  synth->add_option("--specific", synth_cfg.specific, "P(word from a grade pool)");
  synth->add_option("--neighbor", synth_cfg.neighbor, "P(grade-pool word from an adjacent grade)");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    std::vector<std::pair<std::string, std::string>> extra = {
        {"evaluate.head", head},
        {"sentence_corpus", sentence_corpus},
        {"model", model},
        {"evaluate.ablation", ablation},
    };
    if (repeats) extra.emplace_back("evaluate.repeats", std::to_string(*repeats));
    if (synth->parsed()) {
      if (synth_seed < 0) throw ConfigError("--seed must be non-negative");
      synth_cfg.seed = static_cast<std::uint64_t>(synth_seed);
      return GenerateSyntheticCommand(synth_cfg, synth_out);
    }
    const Resolved r = Resolve(common, extra);
    if (train_hhnn->parsed()) return TrainHhnnCommand(r);
    if (label->parsed()) return LabelSentencesCommand(r);
    if (train_dsdrrm->parsed()) return TrainDsdrrmCommand(r);
    if (evaluate->parsed()) return EvaluateCommand(r, out);
    if (features->parsed()) return ExtractFeaturesCommand(r);
    if (split->parsed()) return SplitCorpusCommand(r);
  } catch (const ConfigError &e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError &e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const NumericalError &e) {
    err << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const nlohmann::json::exception &e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitConfig;
}

int Run(int argc, char **argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return Run(args, std::cout, std::cerr);
}

}  // namespace readrank::cli
