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

#ifndef READRANK_CLI_PIPELINE_H_
#define READRANK_CLI_PIPELINE_H_

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "readrank/config.h"
#include "readrank/corpus.h"
#include "readrank/dsdr.h"
#include "readrank/encoder.h"
#include "readrank/mdem.h"
#include "readrank/metrics.h"
#include "readrank/ranking.h"

namespace readrank::cli {

// A corpus split into train and test, tokenized with a train-only vocabulary.
struct PreparedData {
  std::vector<RawDocument> raw;
  int levels = 0;
  Vocabulary vocab;
  std::vector<TokenizedDocument> train;
  std::vector<TokenizedDocument> test;
};

std::vector<RawDocument> LoadCorpusOrFail(const std::string &path);
PreparedData PrepareData(const RunConfig &config, std::uint64_t seed);

// Encoder config with data-dependent fields filled in.
EncoderConfig ResolveEncoder(const RunConfig &config, int vocab_size,
                             int levels);
// Applies an ablation to the settings it changes.
RunConfig ApplyAblation(RunConfig config);

struct HhnnModel {
  std::unique_ptr<HierarchicalEncoder> encoder;
  std::unique_ptr<Mdem> mdem;
  std::vector<EpochStats> history;
};

HhnnModel TrainHhnnStage(const RunConfig &config, const PreparedData &data,
                         std::uint64_t seed);
Matrix HhnnDocumentVectors(const HierarchicalEncoder &encoder,
                           std::span<const TokenizedDocument> docs);
std::vector<int> HhnnPredict(const HierarchicalEncoder &encoder,
                             std::span<const TokenizedDocument> docs);

struct DsdrStage {
  std::unique_ptr<SentenceEncoder> encoder;
  std::unique_ptr<DsdrModel> model;
  EptmResult eptm;
  std::vector<DsdrEpochStats> history;
};

// Pretrains the EPTM on `sentences` (unless external vectors are
// configured) and trains the DSDR model on the train split.
DsdrStage TrainDsdrStage(const RunConfig &config, const PreparedData &data,
                         const std::vector<SentenceRecord> &sentences,
                         std::uint64_t seed);

// Heads over fixed document vectors.
struct HeadModels {
  std::unique_ptr<RankingHead> ranking;
  std::vector<DataSubset> references;
  std::vector<RankingEpochStats> ranking_history;
  std::unique_ptr<OrdinalHead> ordinal;
  std::vector<RankingEpochStats> ordinal_history;
};

// `tuned` and `backbone` replace the fixed vectors when the backbone is
// fine-tuned together with a head.
HeadModels TrainHeads(const RunConfig &config, const Matrix &train_vectors,
                      const std::vector<int> &train_grades, int levels,
                      std::uint64_t seed, bool ranking, bool ordinal,
                      const VectorProvider *tuned = nullptr,
                      std::vector<ParameterSet *> backbone = {});

struct Predictions {
  std::vector<int> pred;
  std::vector<std::map<int, int>> votes;
};

Predictions PredictRanking(const HeadModels &heads, const Matrix &train_vectors,
                           const std::vector<int> &train_grades,
                           const Matrix &test_vectors);
Predictions PredictOrdinalHead(const HeadModels &heads,
                               const Matrix &test_vectors);
std::vector<int> ArgMaxRows(const Matrix &probs);

std::vector<int> Grades(std::span<const TokenizedDocument> docs);

struct PipelineResult {
  EvalReport report;
  std::vector<PredictionRecord> predictions;
};

// Full train-and-evaluate run for one seed, honoring head and ablation.
PipelineResult RunPipeline(const RunConfig &config, std::uint64_t seed);

nlohmann::ordered_json RunMetadata(const std::string &command,
                                   const RunConfig &config,
                                   const nlohmann::ordered_json &flat);
void WriteJsonFile(const std::string &path, const nlohmann::ordered_json &j);
std::string ReportJson(const EvalReport &report);

}  // namespace readrank::cli

#endif  // READRANK_CLI_PIPELINE_H_
