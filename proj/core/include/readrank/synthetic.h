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

#ifndef READRANK_SYNTHETIC_H_
#define READRANK_SYNTHETIC_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "readrank/corpus.h"

namespace readrank {

// Generator for graded toy corpora. Each sentence has its own generating
// grade, usually the document's; its words mix a grade-specific pool with a
// shared pool, and harder sentences run longer.
struct SyntheticConfig {
  int docs = 300;
  int levels = 3;
  int level_words = 40;   // pool size per grade
  int shared_words = 30;
  int min_sentences = 4;
  int max_sentences = 8;
  double purity = 0.8;    // P(sentence grade == document grade)
  double specific = 0.6;  // P(word drawn from a grade pool)
  double neighbor = 0.0;  // P(grade-pool word taken from an adjacent grade)
  std::uint64_t seed = 1;

  void Validate() const;
};

struct SyntheticCorpus {
  std::vector<RawDocument> docs;
  std::vector<std::vector<int>> sentence_grades;  // per document, per sentence
};

SyntheticCorpus GenerateSynthetic(const SyntheticConfig &config);

// JSONL lines {"id": str, "sentence_grades": [int, ...]}.
void WriteSentenceTruthJsonl(const std::string &path,
                             const SyntheticCorpus &corpus);

}  // namespace readrank

#endif  // READRANK_SYNTHETIC_H_
