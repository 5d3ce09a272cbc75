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

#ifndef READRANK_CONFIG_H_
#define READRANK_CONFIG_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "readrank/dsdr.h"
#include "readrank/encoder.h"
#include "readrank/features.h"
#include "readrank/mdem.h"

namespace readrank {

struct RankingConfig {
  int references = 10;
  std::string backbone = "dsdr";  // "dsdr" or "hhnn"
  bool fine_tune = false;
};

struct ResourcePaths {
  std::string function_words;
  std::string negative_words;
  std::string pronouns;
  std::string connectives;
  std::string positive_connectives;
  std::string negative_connectives;
  std::string strokes;
  std::string frequency;
};

// Fully resolved settings of one command invocation.
struct RunConfig {
  std::string corpus;
  std::string out;
  std::string sentence_corpus;
  std::string sentence_vectors;
  std::string word_vectors;  // optional static embeddings, text format
  std::string model;
  std::uint64_t seed = 1;
  double split_ratio = 0.8;
  int min_freq = 1;
  EncoderConfig encoder;  // vocab_size and levels are filled from data
  TrainConfig train;
  double label_min_confidence = 0.0;
  DsdrConfig dsdr;
  RankingConfig ranking;
  std::string head = "ranking";  // "cls", "ordinal" or "ranking"
  int repeats = 1;
  std::string ablation = "none";  // "none", "context", "mdem" or "ranking"
  std::vector<std::string> features;
  ResourcePaths resources;
  std::string hash;
};

// Layers defaults, a preset, a config file and command-line overrides over a
// flat table of dotted keys. Unknown keys and ill-typed values raise
// ConfigError.
class ConfigBuilder {
 public:
  ConfigBuilder();

  static std::vector<std::string> Presets();
  void ApplyPreset(const std::string &name);
  // Accepts nested objects or dotted keys.
  void MergeJson(const nlohmann::json &j, const std::string &source);
  void MergeFile(const std::string &path);
  // Parses `value` according to the type of the key's default.
  void Set(const std::string &key, const std::string &value);
  // Parses "key=value".
  void SetAssignment(const std::string &assignment);

  const nlohmann::ordered_json &flat() const { return flat_; }
  std::string Hash() const;
  // Validates and materializes the table.
  RunConfig Build() const;

 private:
  void SetValue(const std::string &key, const nlohmann::json &value,
                const std::string &source);

  nlohmann::ordered_json flat_;
};

// 16 hex digits of FNV-1a over the canonical dump of `flat`.
std::string ConfigHash(const nlohmann::ordered_json &flat);

FeatureResources LoadResources(const ResourcePaths &paths);

}  // namespace readrank

#endif  // READRANK_CONFIG_H_
