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

#ifndef READRANK_CORPUS_H_
#define READRANK_CORPUS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace readrank {

using TokenList = std::vector<std::string>;

// A graded document, either as raw text or as pre-tokenized sentences.
struct RawDocument {
  std::string id;
  int grade = 0;  // 1-based
  std::string text;
  std::vector<TokenList> sentences;
  // Optional annotations used by the feature extractor. `pos` is aligned
  // 1:1 with `sentences`; `entities` lists named-entity surface strings.
  std::vector<TokenList> pos;
  std::vector<std::string> entities;
  bool has_entities = false;
};

// Sentence delimiters, each a UTF-8 string.
std::vector<std::string> DefaultDelimiters();

// Splits text after each delimiter run. Closing quotes and brackets that
// follow a delimiter stay with the sentence they close. Segments are
// whitespace-trimmed and never empty. Throws DataError on empty text.
std::vector<std::string> SplitSentences(
    std::string_view text,
    const std::vector<std::string> &delimiters = DefaultDelimiters());

// Whitespace tokenization with per-character fallback for CJK code points;
// trailing ASCII punctuation is split into its own token.
TokenList Tokenize(std::string_view sentence);

// Returns the document's sentences, splitting and tokenizing `text` when no
// pre-tokenized sentences are given. Empty sentences are dropped.
std::vector<TokenList> DocumentSentences(
    const RawDocument &doc,
    const std::vector<std::string> &delimiters = DefaultDelimiters());

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;

  Vocabulary();

  // Ids are assigned in first-occurrence order among tokens whose count
  // reaches `min_freq`.
  static Vocabulary Build(std::span<const RawDocument> docs, int min_freq);
  static Vocabulary FromTokens(const std::vector<std::string> &tokens);

  int Lookup(const std::string &token) const;
  const std::string &Token(int id) const { return tokens_.at(id); }
  bool Contains(const std::string &token) const {
    return index_.count(token) > 0;
  }
  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string> &tokens() const { return tokens_; }

 private:
  int Add(const std::string &token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// A document as a fixed n_max x m_max grid of token ids.
struct TokenizedDocument {
  std::string id;
  int grade = 0;
  int n_max = 0;
  int m_max = 0;
  std::vector<int> token_ids;         // row-major n_max * m_max, PAD-filled
  std::vector<int> sentence_lengths;  // n_max entries, 0 for PAD rows
  int n_real = 0;
  std::vector<TokenList> tokens;      // surviving sentences, truncated

  int at(int sentence, int position) const {
    return token_ids[static_cast<std::size_t>(sentence) * m_max + position];
  }
  std::span<const int> row(int sentence) const {
    return {token_ids.data() + static_cast<std::size_t>(sentence) * m_max,
            static_cast<std::size_t>(m_max)};
  }
  // Indices of rows holding at least one real token.
  std::vector<int> RealSentenceRows() const;
};

TokenizedDocument EncodeDocument(
    const RawDocument &doc, const Vocabulary &vocab, int m_max, int n_max,
    const std::vector<std::string> &delimiters = DefaultDelimiters());

// Inverse of EncodeDocument up to truncation and UNK substitution.
std::vector<TokenList> DecodeDocument(const TokenizedDocument &doc,
                                      const Vocabulary &vocab);

struct SplitIndices {
  std::vector<int> train;
  std::vector<int> test;
};

// Per grade with count c, round-half-up(ratio * c) documents go to train.
// Throws DataError naming the grade when it has fewer than two documents.
SplitIndices StratifiedSplitIndices(std::span<const int> grades, double ratio,
                                    std::uint64_t seed);

struct CorpusSplit {
  std::vector<TokenizedDocument> train;
  std::vector<TokenizedDocument> test;
  std::uint64_t seed = 0;
};

CorpusSplit StratifiedSplit(const std::vector<TokenizedDocument> &docs,
                            double ratio, std::uint64_t seed);

// JSONL: {"id", "grade", "text"} or {"id", "grade", "sentences"}; optional
// "pos" and "entities" annotations. Throws DataError on malformed lines.
std::vector<RawDocument> LoadCorpusJsonl(const std::string &path);
std::vector<RawDocument> ParseCorpusJsonl(std::string_view content);
void WriteCorpusJsonl(const std::string &path,
                      std::span<const RawDocument> docs);

// Largest grade in `docs`. Throws DataError unless every grade 1..Y occurs.
int InferLevels(std::span<const RawDocument> docs);

}  // namespace readrank

#endif  // READRANK_CORPUS_H_
