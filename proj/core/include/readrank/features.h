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

#ifndef READRANK_FEATURES_H_
#define READRANK_FEATURES_H_

// Explicit lexical, part-of-speech, entity and cohesion features. Features
// whose inputs are missing (no POS tags, no resource list) are null rather
// than zero.

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "readrank/corpus.h"

namespace readrank {

using WordList = std::unordered_set<std::string>;

struct FeatureResources {
  std::optional<WordList> function_words;
  std::optional<WordList> negative_words;
  std::optional<WordList> pronouns;
  std::optional<WordList> connectives;
  std::optional<WordList> positive_connectives;
  std::optional<WordList> negative_connectives;
  std::optional<std::unordered_map<std::string, int>> strokes;
  std::optional<std::unordered_map<std::string, double>> frequency;

  // Tokens whose lexicon count is below this (or absent) are difficult.
  double difficult_below = 5.0;
  int low_stroke_max = 6;    // <= is low
  int high_stroke_min = 15;  // >= is high

  // POS tag prefixes (ICTCLAS-style by default).
  std::string noun_tag = "n";
  std::string verb_tag = "v";
  std::string adjective_tag = "a";
  std::string adverb_tag = "d";
  std::string pronoun_tag = "r";
};

// One term per line, UTF-8; blank lines and lines starting with '#' are
// skipped.
WordList LoadWordList(const std::string &path);
// char<TAB>count per line.
std::unordered_map<std::string, int> LoadStrokeTable(const std::string &path);
// token<TAB>count per line.
std::unordered_map<std::string, double> LoadFrequencyLexicon(
    const std::string &path);

struct TaggedText {
  std::vector<TokenList> sentences;
  std::vector<TokenList> tags;  // empty, or aligned 1:1 with sentences
  std::vector<std::string> entities;
  bool has_entities = false;

  bool has_tags() const { return !tags.empty(); }
  // Throws DataError when tags are present but misaligned.
  void Validate() const;
};

TaggedText ToTaggedText(const RawDocument &doc);

// Type-token ratio. Throws std::invalid_argument on empty input.
double Ttr(std::span<const std::string> tokens);
// Types over the square root of tokens.
double Rttr(std::span<const std::string> tokens);
// Bidirectional McCarthy-Jarvis MTLD. Throws std::invalid_argument on fewer
// than two tokens. A text whose TTR never drops to the threshold in either
// direction scores its token count.
double Mtld(std::span<const std::string> tokens, double threshold = 0.72);

using FeatureValue = std::optional<double>;

struct FeatureVector {
  std::vector<std::string> names;
  std::vector<FeatureValue> values;

  FeatureValue Get(const std::string &name) const;
};

// POS, stroke, function-word and word-length features.
FeatureVector DensityFeatures(const TaggedText &text,
                              const FeatureResources &resources);

// Word tokens (punctuation removed) of a text with aligned tags, shared by
// all extractors.
struct TextProfile {
  std::vector<TokenList> sentence_words;
  std::vector<TokenList> sentence_tags;  // empty when untagged
  TokenList words;
  TokenList tags;
  std::vector<std::string> entities;
  bool has_tags = false;
  bool has_entities = false;
  const FeatureResources *resources = nullptr;

  static TextProfile Build(const TaggedText &text,
                           const FeatureResources &resources);
};

// Named extractors in a fixed column order.
class FeatureRegistry {
 public:
  using Extractor = std::function<FeatureValue(const TextProfile &)>;

  static const FeatureRegistry &Default();

  const std::vector<std::string> &names() const { return names_; }
  bool Contains(const std::string &name) const;
  FeatureValue Extract(const std::string &name,
                       const TextProfile &profile) const;

 private:
  void Register(std::string name, Extractor fn);

  std::vector<std::string> names_;
  std::unordered_map<std::string, Extractor> extractors_;
};

// Runs the registry over `doc`. An empty `selection` selects every feature;
// unknown names throw ConfigError.
FeatureVector ExtractAll(const RawDocument &doc,
                         const FeatureResources &resources,
                         const std::vector<std::string> &selection = {});

// id,grade,<feature columns>; nulls are written as empty cells.
void WriteFeatureCsv(const std::string &path,
                     std::span<const RawDocument> docs,
                     std::span<const FeatureVector> features);
std::string FeatureCsv(std::span<const RawDocument> docs,
                       std::span<const FeatureVector> features);

}  // namespace readrank

#endif  // READRANK_FEATURES_H_
