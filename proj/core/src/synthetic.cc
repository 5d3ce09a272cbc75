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

#include "readrank/synthetic.h"

#include <algorithm>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "readrank/errors.h"

namespace readrank {

void SyntheticConfig::Validate() const {
  auto fail = [](const std::string &msg) { throw ConfigError(msg); };
  if (docs < levels) fail("synthetic corpus needs at least one document per grade");
  if (levels < 2) fail("synthetic corpus needs at least 2 grades");
  if (level_words < 1 || shared_words < 1) fail("word pools must be non-empty");
  if (min_sentences < 1 || max_sentences < min_sentences) {
    fail("sentence count range is empty");
  }
  for (double p : {purity, specific, neighbor}) {
    if (p < 0.0 || p > 1.0) fail("synthetic probabilities must lie in [0, 1]");
  }
}

SyntheticCorpus GenerateSynthetic(const SyntheticConfig &config) {
  config.Validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> sentences(config.min_sentences,
                                               config.max_sentences);
  std::uniform_int_distribution<int> level_word(0, config.level_words - 1);
  std::uniform_int_distribution<int> shared_word(0, config.shared_words - 1);
  std::uniform_int_distribution<int> jitter(0, 2);

  auto neighbor_of = [&](int g) {
    if (g == 1) return 2;
    if (g == config.levels) return config.levels - 1;
    return coin(rng) < 0.5 ? g - 1 : g + 1;
  };

  SyntheticCorpus corpus;
  for (int i = 0; i < config.docs; ++i) {
    RawDocument doc;
    doc.id = "syn" + std::to_string(i);
    doc.grade = i % config.levels + 1;
    std::vector<int> grades;
    const int n = sentences(rng);
    for (int s = 0; s < n; ++s) {
      const int sg = coin(rng) < config.purity ? doc.grade : neighbor_of(doc.grade);
      const int len = 4 + 2 * sg + jitter(rng);
      std::string sentence;
      for (int w = 0; w < len; ++w) {
        std::string word;
        if (coin(rng) < config.specific) {
          const int pool = coin(rng) < config.neighbor ? neighbor_of(sg) : sg;
          word = "g" + std::to_string(pool) + "w" + std::to_string(level_word(rng));
        } else {
          word = "c" + std::to_string(shared_word(rng));
        }
        if (!sentence.empty()) sentence += ' ';
        sentence += word;
      }
      if (!doc.text.empty()) doc.text += ' ';
      doc.text += sentence + '.';
      grades.push_back(sg);
    }
    corpus.docs.push_back(std::move(doc));
    corpus.sentence_grades.push_back(std::move(grades));
  }
  return corpus;
}

void WriteSentenceTruthJsonl(const std::string &path,
                             const SyntheticCorpus &corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    nlohmann::ordered_json j;
    j["id"] = corpus.docs[i].id;
    j["sentence_grades"] = corpus.sentence_grades[i];
    out << j.dump() << '\n';
  }
}

}  // namespace readrank
