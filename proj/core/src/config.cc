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

#include "readrank/config.h"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "readrank/errors.h"

namespace readrank {
namespace {

void Flatten(const nlohmann::json &j, const std::string &prefix,
             std::vector<std::pair<std::string, nlohmann::json>> &out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      Flatten(*it, key, out);
    } else {
      out.emplace_back(key, *it);
    }
  }
}

std::vector<std::string> SplitList(const std::string &s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

void Require(bool ok, const std::string &msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

ConfigBuilder::ConfigBuilder() {
  flat_ = {
      {"corpus", ""},
      {"out", ""},
      {"sentence_corpus", ""},
      {"sentence_vectors", ""},
      {"model", ""},
      {"seed", 1},
      {"data.split_ratio", 0.8},
      {"data.min_freq", 1},
      {"data.n_max", 50},
      {"data.m_max", 50},
      {"encoder.d_embed", 400},
      {"encoder.d_hidden", 100},
      {"encoder.kernels", 200},
      {"encoder.window", 3},
      {"encoder.heads", 8},
      {"encoder.layers", 2},
      {"encoder.cell", "lstm"},
      {"encoder.context", "multidim"},
      {"encoder.word_vectors", ""},
      {"train.lambda", 1.0},
      {"train.lr", 1e-3},
      {"train.weight_decay", 5e-4},
      {"train.epochs", 30},
      {"train.batch_size", 16},
      {"train.tsa", "linear"},
      {"train.beta", 0.45},
      {"train.tau", 0.85},
      {"labels.min_confidence", 0.0},
      {"dsdr.context_layers", 1},
      {"dsdr.heads", 8},
      {"dsdr.prototypes", 0},
      {"dsdr.freeze_eptm", true},
      {"dsdr.eptm_epochs", 10},
      {"ranking.references", 10},
      {"ranking.backbone", "dsdr"},
      {"ranking.fine_tune", false},
      {"evaluate.head", "ranking"},
      {"evaluate.repeats", 1},
      {"evaluate.ablation", "none"},
      {"features.list", ""},
      {"resources.function_words", ""},
      {"resources.negative_words", ""},
      {"resources.pronouns", ""},
      {"resources.connectives", ""},
      {"resources.positive_connectives", ""},
      {"resources.negative_connectives", ""},
      {"resources.strokes", ""},
      {"resources.frequency", ""},
  };
}

std::vector<std::string> ConfigBuilder::Presets() { return {"default", "cmer"}; }

void ConfigBuilder::ApplyPreset(const std::string &name) {
  if (name == "default") return;
  if (name != "cmer") {
    throw ConfigError("unknown preset '" + name + "' (expected default or cmer)");
  }
  flat_["encoder.d_embed"] = 512;
  flat_["encoder.d_hidden"] = 128;
  flat_["encoder.kernels"] = 256;
  flat_["encoder.heads"] = 16;
  flat_["dsdr.heads"] = 16;
}

void ConfigBuilder::SetValue(const std::string &key, const nlohmann::json &value,
                             const std::string &source) {
  if (!flat_.contains(key)) {
    throw ConfigError(source + ": unknown config key '" + key + "'");
  }
  const nlohmann::json &current = flat_[key];
  bool ok = false;
  if (current.is_boolean()) {
    ok = value.is_boolean();
  } else if (current.is_number_integer()) {
    ok = value.is_number_integer();
  } else if (current.is_number()) {
    ok = value.is_number();
  } else if (current.is_string()) {
    ok = value.is_string();
  }
  if (!ok) {
    throw ConfigError(source + ": key '" + key + "' expects a " +
                      current.type_name() + ", got " + value.type_name());
  }
  if (current.is_number_float()) {
    flat_[key] = value.get<double>();
  } else {
    flat_[key] = value;
  }
}

void ConfigBuilder::MergeJson(const nlohmann::json &j, const std::string &source) {
  if (!j.is_object()) throw ConfigError(source + ": config must be a JSON object");
  std::vector<std::pair<std::string, nlohmann::json>> entries;
  Flatten(j, "", entries);
  for (const auto &[key, value] : entries) SetValue(key, value, source);
}

void ConfigBuilder::MergeFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(path + ": " + e.what());
  }
  MergeJson(j, path);
}

void ConfigBuilder::Set(const std::string &key, const std::string &value) {
  if (!flat_.contains(key)) {
    throw ConfigError("unknown config key '" + key + "'");
  }
  const nlohmann::json &current = flat_[key];
  if (current.is_string()) {
    SetValue(key, value, "--set");
    return;
  }
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::exception &) {
    throw ConfigError("--set " + key + ": cannot parse '" + value + "'");
  }
  SetValue(key, parsed, "--set");
}

void ConfigBuilder::SetAssignment(const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("expected key=value, got '" + assignment + "'");
  }
  Set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

std::string ConfigHash(const nlohmann::ordered_json &flat) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : flat.dump()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string ConfigBuilder::Hash() const { return ConfigHash(flat_); }

RunConfig ConfigBuilder::Build() const {
  const auto &f = flat_;
  RunConfig c;
  c.corpus = f["corpus"];
  c.out = f["out"];
  c.sentence_corpus = f["sentence_corpus"];
  c.sentence_vectors = f["sentence_vectors"];
  c.model = f["model"];
  const long long seed = f["seed"];
  Require(seed >= 0, "seed must be non-negative");
  c.seed = static_cast<std::uint64_t>(seed);

  c.split_ratio = f["data.split_ratio"];
  Require(c.split_ratio > 0.0 && c.split_ratio < 1.0,
          "data.split_ratio must lie in (0, 1)");
  c.min_freq = f["data.min_freq"];
  Require(c.min_freq >= 1, "data.min_freq must be >= 1");

  EncoderConfig &e = c.encoder;
  e.n_max = f["data.n_max"];
  e.m_max = f["data.m_max"];
  e.d_embed = f["encoder.d_embed"];
  e.d_hidden = f["encoder.d_hidden"];
  e.kernels = f["encoder.kernels"];
  e.window = f["encoder.window"];
  e.heads = f["encoder.heads"];
  e.layers = f["encoder.layers"];
  e.cell = ParseCellType(f["encoder.cell"]);
  e.context = ParseContextMode(f["encoder.context"]);
  e.Validate();
  c.word_vectors = f["encoder.word_vectors"];

  TrainConfig &t = c.train;
  t.lambda = f["train.lambda"];
  t.lr = f["train.lr"];
  t.weight_decay = f["train.weight_decay"];
  t.epochs = f["train.epochs"];
  t.batch_size = f["train.batch_size"];
  t.tsa_schedule = f["train.tsa"];
  t.beta = f["train.beta"];
  t.tau = f["train.tau"];
  t.seed = c.seed;
  t.Validate();

  c.label_min_confidence = f["labels.min_confidence"];
  Require(c.label_min_confidence >= 0.0 && c.label_min_confidence <= 1.0,
          "labels.min_confidence must lie in [0, 1]");

  c.dsdr.context_layers = f["dsdr.context_layers"];
  c.dsdr.heads = f["dsdr.heads"];
  c.dsdr.prototypes = f["dsdr.prototypes"];
  c.dsdr.freeze_eptm = f["dsdr.freeze_eptm"];
  c.dsdr.eptm_epochs = f["dsdr.eptm_epochs"];
  c.dsdr.Validate(e.d());

  c.ranking.references = f["ranking.references"];
  Require(c.ranking.references >= 1, "ranking.references must be >= 1");
  c.ranking.backbone = f["ranking.backbone"];
  Require(c.ranking.backbone == "dsdr" || c.ranking.backbone == "hhnn",
          "ranking.backbone must be dsdr or hhnn");
  c.ranking.fine_tune = f["ranking.fine_tune"];

  c.head = f["evaluate.head"];
  Require(c.head == "cls" || c.head == "ordinal" || c.head == "ranking",
          "evaluate.head must be cls, ordinal or ranking");
  c.repeats = f["evaluate.repeats"];
  Require(c.repeats >= 1, "evaluate.repeats must be >= 1");
  c.ablation = f["evaluate.ablation"];
  Require(c.ablation == "none" || c.ablation == "context" ||
              c.ablation == "mdem" || c.ablation == "ranking",
          "evaluate.ablation must be none, context, mdem or ranking");

  c.features = SplitList(f["features.list"]);
  c.resources.function_words = f["resources.function_words"];
  c.resources.negative_words = f["resources.negative_words"];
  c.resources.pronouns = f["resources.pronouns"];
  c.resources.connectives = f["resources.connectives"];
  c.resources.positive_connectives = f["resources.positive_connectives"];
  c.resources.negative_connectives = f["resources.negative_connectives"];
  c.resources.strokes = f["resources.strokes"];
  c.resources.frequency = f["resources.frequency"];
  c.hash = Hash();
  return c;
}

FeatureResources LoadResources(const ResourcePaths &paths) {
  FeatureResources r;
  auto list = [](const std::string &path, std::optional<WordList> &slot) {
    if (!path.empty()) slot = LoadWordList(path);
  };
  list(paths.function_words, r.function_words);
  list(paths.negative_words, r.negative_words);
  list(paths.pronouns, r.pronouns);
  list(paths.connectives, r.connectives);
  list(paths.positive_connectives, r.positive_connectives);
  list(paths.negative_connectives, r.negative_connectives);
  if (!paths.strokes.empty()) r.strokes = LoadStrokeTable(paths.strokes);
  if (!paths.frequency.empty()) r.frequency = LoadFrequencyLexicon(paths.frequency);
  return r;
}

}  // namespace readrank
