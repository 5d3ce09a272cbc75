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

#include "readrank/corpus.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "readrank/errors.h"
#include "readrank/utf8.h"

namespace readrank {
namespace {

using nlohmann::json;

bool IsSpace(std::string_view piece) {
  return piece == " " || piece == "\t" || piece == "\n" || piece == "\r" ||
         piece == "\xE3\x80\x80";  // ideographic space
}

bool IsClosingQuote(std::string_view piece) {
  static const char *kClosers[] = {"\"", "'", ")", "]",
                                   "\xE2\x80\x9D",   // ”
                                   "\xE2\x80\x99",   // ’
                                   "\xE3\x80\x8D",   // 」
                                   "\xE3\x80\x8F",   // 』
                                   "\xEF\xBC\x89",   // ）
                                   "\xE3\x80\x8B"};  // 》
  for (const char *c : kClosers) {
    if (piece == c) return true;
  }
  return false;
}

std::string Trim(std::string_view s) {
  auto pieces = utf8::CodePoints(s);
  std::size_t b = 0;
  std::size_t e = pieces.size();
  while (b < e && IsSpace(pieces[b])) ++b;
  while (e > b && IsSpace(pieces[e - 1])) --e;
  std::string out;
  for (std::size_t i = b; i < e; ++i) out.append(pieces[i]);
  return out;
}

bool IsAsciiPunct(char c) {
  return c == '.' || c == ',' || c == '!' || c == '?' || c == ';' ||
         c == ':' || c == '"' || c == '\'' || c == '(' || c == ')';
}

}  // namespace

std::vector<std::string> DefaultDelimiters() {
  return {"\xE3\x80\x82",  // 。
          "\xEF\xBC\x81",  // ！
          "\xEF\xBC\x9F",  // ？
          ".", "!", "?"};
}

std::vector<std::string> SplitSentences(
    std::string_view text, const std::vector<std::string> &delimiters) {
  if (delimiters.empty()) throw ConfigError("sentence delimiters are empty");
  const auto pieces = utf8::CodePoints(text);
  auto is_delim = [&](std::string_view p) {
    return std::find(delimiters.begin(), delimiters.end(), p) !=
           delimiters.end();
  };
  std::vector<std::string> out;
  std::string current;
  auto flush = [&] {
    std::string t = Trim(current);
    if (!t.empty()) out.push_back(std::move(t));
    current.clear();
  };
  std::size_t i = 0;
  while (i < pieces.size()) {
    current.append(pieces[i]);
    if (is_delim(pieces[i])) {
      ++i;
      while (i < pieces.size() && is_delim(pieces[i])) current.append(pieces[i++]);
      while (i < pieces.size() && IsClosingQuote(pieces[i])) {
        current.append(pieces[i++]);
      }
      flush();
      continue;
    }
    ++i;
  }
  flush();
  if (out.empty()) throw DataError("empty document");
  return out;
}

TokenList Tokenize(std::string_view sentence) {
  TokenList out;
  std::string word;
  auto flush_word = [&] {
    if (word.empty()) return;
    // Peel trailing and leading ASCII punctuation into separate tokens.
    std::size_t b = 0;
    while (b < word.size() && IsAsciiPunct(word[b])) {
      out.emplace_back(1, word[b]);
      ++b;
    }
    std::size_t e = word.size();
    std::vector<std::string> tail;
    while (e > b && IsAsciiPunct(word[e - 1])) {
      tail.emplace_back(1, word[e - 1]);
      --e;
    }
    if (e > b) out.push_back(word.substr(b, e - b));
    for (auto it = tail.rbegin(); it != tail.rend(); ++it) out.push_back(*it);
    word.clear();
  };
  for (std::string_view piece : utf8::CodePoints(sentence)) {
    if (IsSpace(piece)) {
      flush_word();
    } else if (utf8::IsCjk(utf8::Decode(piece))) {
      flush_word();
      out.emplace_back(piece);
    } else {
      word.append(piece);
    }
  }
  flush_word();
  return out;
}

std::vector<TokenList> DocumentSentences(
    const RawDocument &doc, const std::vector<std::string> &delimiters) {
  std::vector<TokenList> out;
  if (!doc.sentences.empty()) {
    for (const auto &s : doc.sentences) {
      if (!s.empty()) out.push_back(s);
    }
    return out;
  }
  if (doc.text.empty()) return out;
  for (const auto &s : SplitSentences(doc.text, delimiters)) {
    TokenList toks = Tokenize(s);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

Vocabulary::Vocabulary() {
  Add("<pad>");
  Add("<unk>");
}

int Vocabulary::Add(const std::string &token) {
  auto [it, inserted] =
      index_.emplace(token, static_cast<int>(tokens_.size()));
  if (inserted) tokens_.push_back(token);
  return it->second;
}

Vocabulary Vocabulary::Build(std::span<const RawDocument> docs, int min_freq) {
  std::unordered_map<std::string, int> counts;
  std::vector<std::string> order;
  for (const auto &doc : docs) {
    for (const auto &sentence : DocumentSentences(doc)) {
      for (const auto &tok : sentence) {
        auto [it, inserted] = counts.emplace(tok, 0);
        if (inserted) order.push_back(tok);
        ++it->second;
      }
    }
  }
  Vocabulary vocab;
  for (const auto &tok : order) {
    if (counts[tok] >= min_freq) vocab.Add(tok);
  }
  return vocab;
}

Vocabulary Vocabulary::FromTokens(const std::vector<std::string> &tokens) {
  if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>") {
    throw DataError("vocabulary must start with <pad>, <unk>");
  }
  Vocabulary vocab;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    if (vocab.Add(tokens[i]) != static_cast<int>(i)) {
      throw DataError("duplicate vocabulary token: " + tokens[i]);
    }
  }
  return vocab;
}

int Vocabulary::Lookup(const std::string &token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> TokenizedDocument::RealSentenceRows() const {
  std::vector<int> rows;
  for (int i = 0; i < n_max; ++i) {
    if (sentence_lengths[static_cast<std::size_t>(i)] > 0) rows.push_back(i);
  }
  return rows;
}

TokenizedDocument EncodeDocument(const RawDocument &doc,
                                 const Vocabulary &vocab, int m_max, int n_max,
                                 const std::vector<std::string> &delimiters) {
  if (m_max < 1 || n_max < 1) {
    throw ConfigError("m_max and n_max must be at least 1");
  }
  std::vector<TokenList> sentences = DocumentSentences(doc, delimiters);
  if (sentences.empty()) {
    throw DataError("document '" + doc.id + "' has no sentences");
  }
  TokenizedDocument out;
  out.id = doc.id;
  out.grade = doc.grade;
  out.n_max = n_max;
  out.m_max = m_max;
  out.token_ids.assign(static_cast<std::size_t>(n_max) * m_max,
                       Vocabulary::kPad);
  out.sentence_lengths.assign(static_cast<std::size_t>(n_max), 0);
  const int n = std::min<int>(n_max, static_cast<int>(sentences.size()));
  for (int i = 0; i < n; ++i) {
    const TokenList &s = sentences[static_cast<std::size_t>(i)];
    const int m = std::min<int>(m_max, static_cast<int>(s.size()));
    TokenList kept(s.begin(), s.begin() + m);
    for (int j = 0; j < m; ++j) {
      out.token_ids[static_cast<std::size_t>(i) * m_max + j] =
          vocab.Lookup(kept[static_cast<std::size_t>(j)]);
    }
    out.sentence_lengths[static_cast<std::size_t>(i)] = m;
    out.tokens.push_back(std::move(kept));
  }
  out.n_real = n;
  return out;
}

std::vector<TokenList> DecodeDocument(const TokenizedDocument &doc,
                                      const Vocabulary &vocab) {
  std::vector<TokenList> out;
  for (int i = 0; i < doc.n_max; ++i) {
    const int len = doc.sentence_lengths[static_cast<std::size_t>(i)];
    if (len == 0) continue;
    TokenList s;
    for (int j = 0; j < len; ++j) s.push_back(vocab.Token(doc.at(i, j)));
    out.push_back(std::move(s));
  }
  return out;
}

SplitIndices StratifiedSplitIndices(std::span<const int> grades, double ratio,
                                    std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ConfigError("split ratio must lie in (0, 1)");
  }
  std::map<int, std::vector<int>> by_grade;
  for (std::size_t i = 0; i < grades.size(); ++i) {
    by_grade[grades[i]].push_back(static_cast<int>(i));
  }
  std::mt19937_64 rng(seed);
  SplitIndices out;
  for (auto &[grade, idx] : by_grade) {
    if (idx.size() < 2) {
      throw DataError("grade " + std::to_string(grade) +
                      " has fewer than 2 documents");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_train = static_cast<std::size_t>(
        std::floor(ratio * static_cast<double>(idx.size()) + 0.5));
    for (std::size_t k = 0; k < idx.size(); ++k) {
      (k < n_train ? out.train : out.test).push_back(idx[k]);
    }
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

CorpusSplit StratifiedSplit(const std::vector<TokenizedDocument> &docs,
                            double ratio, std::uint64_t seed) {
  std::vector<int> grades;
  grades.reserve(docs.size());
  for (const auto &d : docs) grades.push_back(d.grade);
  SplitIndices idx = StratifiedSplitIndices(grades, ratio, seed);
  CorpusSplit split;
  split.seed = seed;
  for (int i : idx.train) split.train.push_back(docs[static_cast<std::size_t>(i)]);
  for (int i : idx.test) split.test.push_back(docs[static_cast<std::size_t>(i)]);
  return split;
}

std::vector<RawDocument> ParseCorpusJsonl(std::string_view content) {
  std::vector<RawDocument> docs;
  std::istringstream in{std::string(content)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "corpus line " + std::to_string(line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error &e) {
      throw DataError(where + ": " + e.what());
    }
    try {
      RawDocument doc;
      doc.id = j.at("id").get<std::string>();
      doc.grade = j.at("grade").get<int>();
      if (j.contains("text")) doc.text = j["text"].get<std::string>();
      if (j.contains("sentences")) {
        doc.sentences = j["sentences"].get<std::vector<TokenList>>();
      }
      if (j.contains("pos")) doc.pos = j["pos"].get<std::vector<TokenList>>();
      if (j.contains("entities")) {
        doc.entities = j["entities"].get<std::vector<std::string>>();
        doc.has_entities = true;
      }
      if (doc.text.empty() && doc.sentences.empty()) {
        throw DataError(where + ": document needs 'text' or 'sentences'");
      }
      if (doc.grade < 1) {
        throw DataError(where + ": grade must be >= 1");
      }
      docs.push_back(std::move(doc));
    } catch (const json::exception &e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return docs;
}

std::vector<RawDocument> LoadCorpusJsonl(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseCorpusJsonl(buf.str());
}

void WriteCorpusJsonl(const std::string &path,
                      std::span<const RawDocument> docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus: " + path);
  for (const auto &doc : docs) {
    json j;
    j["id"] = doc.id;
    j["grade"] = doc.grade;
    if (!doc.sentences.empty()) {
      j["sentences"] = doc.sentences;
    } else {
      j["text"] = doc.text;
    }
    if (!doc.pos.empty()) j["pos"] = doc.pos;
    if (doc.has_entities) j["entities"] = doc.entities;
    out << j.dump() << '\n';
  }
}

int InferLevels(std::span<const RawDocument> docs) {
  if (docs.empty()) throw DataError("corpus is empty");
  int y = 0;
  std::vector<bool> seen;
  for (const auto &d : docs) {
    if (d.grade < 1) throw DataError("grade must be >= 1 in " + d.id);
    y = std::max(y, d.grade);
    if (static_cast<int>(seen.size()) < d.grade + 1) seen.resize(d.grade + 1);
    seen[static_cast<std::size_t>(d.grade)] = true;
  }
  for (int g = 1; g <= y; ++g) {
    if (!seen[static_cast<std::size_t>(g)]) {
      throw DataError("grade " + std::to_string(g) +
                      " is missing; grades must be consecutive 1.." +
                      std::to_string(y));
    }
  }
  return y;
}

}  // namespace readrank
