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

#include "readrank/features.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "readrank/errors.h"
#include "readrank/utf8.h"

namespace readrank {
namespace {

std::vector<std::string> ReadLines(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open resource file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

std::pair<std::string, std::string> SplitTab(const std::string &line,
                                              const std::string &path) {
  const auto tab = line.find('\t');
  if (tab == std::string::npos) {
    throw DataError(path + ": expected <key>\\t<count>, got '" + line + "'");
  }
  return {line.substr(0, tab), line.substr(tab + 1)};
}

// A token counts as a word when it holds a letter, digit or ideograph.
bool IsWord(const std::string &token) {
  for (std::string_view cp : utf8::CodePoints(token)) {
    const char32_t c = utf8::Decode(cp);
    if (c < 0x80) {
      if (std::isalnum(static_cast<unsigned char>(c))) return true;
    } else if (c >= 0x3400 && !(c >= 0x3000 && c <= 0x303F) &&
               !(c >= 0xFF00 && c <= 0xFF0F) && !(c >= 0xFF1A && c <= 0xFF20)) {
      return true;
    } else if (c >= 0x00C0 && c < 0x3000) {
      return true;
    }
  }
  return false;
}

bool HasPrefix(const std::string &tag, const std::string &prefix) {
  return !prefix.empty() && tag.rfind(prefix, 0) == 0;
}

// Greedy longest-match count of list terms over each sentence, where a term
// may span several consecutive tokens (e.g. per-character Chinese tokens).
long CountTerms(const std::vector<TokenList> &sentences, const WordList &terms) {
  std::size_t max_len = 0;
  for (const auto &t : terms) max_len = std::max(max_len, t.size());
  long count = 0;
  for (const TokenList &s : sentences) {
    std::size_t i = 0;
    while (i < s.size()) {
      std::size_t best = 0;
      std::string joined;
      for (std::size_t j = i; j < s.size(); ++j) {
        joined += s[j];
        if (joined.size() > max_len) break;
        if (terms.count(joined) > 0) best = j - i + 1;
      }
      if (best > 0) {
        ++count;
        i += best;
      } else {
        ++i;
      }
    }
  }
  return count;
}

struct TagStats {
  double count = 0;
  double unique = 0;
  double mean_unique_per_sentence = 0;
};

TagStats CountTag(const TextProfile &p, const std::string &prefix) {
  TagStats s;
  WordList seen;
  double unique_sum = 0;
  for (std::size_t i = 0; i < p.sentence_words.size(); ++i) {
    WordList local;
    for (std::size_t j = 0; j < p.sentence_words[i].size(); ++j) {
      if (!HasPrefix(p.sentence_tags[i][j], prefix)) continue;
      s.count += 1;
      seen.insert(p.sentence_words[i][j]);
      local.insert(p.sentence_words[i][j]);
    }
    unique_sum += static_cast<double>(local.size());
  }
  s.unique = static_cast<double>(seen.size());
  if (!p.sentence_words.empty()) {
    s.mean_unique_per_sentence =
        unique_sum / static_cast<double>(p.sentence_words.size());
  }
  return s;
}

double Types(const TokenList &words) {
  return static_cast<double>(WordList(words.begin(), words.end()).size());
}

double SentenceCount(const TextProfile &p) {
  return static_cast<double>(p.sentence_words.size());
}

// One direction of MTLD: token count over (complete + partial) factors.
double MtldPass(std::span<const std::string> tokens, double threshold,
                double *factors_out) {
  double factors = 0.0;
  WordList types;
  long count = 0;
  double ttr = 1.0;
  for (const std::string &tok : tokens) {
    ++count;
    types.insert(tok);
    ttr = static_cast<double>(types.size()) / static_cast<double>(count);
    if (ttr <= threshold) {
      factors += 1.0;
      types.clear();
      count = 0;
      ttr = 1.0;
    }
  }
  factors += (1.0 - ttr) / (1.0 - threshold);
  *factors_out = factors;
  if (factors == 0.0) return static_cast<double>(tokens.size());
  return static_cast<double>(tokens.size()) / factors;
}

struct StrokeStats {
  double low = 0, mid = 0, high = 0, total = 0, chars = 0;
};

StrokeStats CountStrokes(const TextProfile &p) {
  StrokeStats s;
  const FeatureResources &r = *p.resources;
  for (const std::string &w : p.words) {
    for (std::string_view cp : utf8::CodePoints(w)) {
      auto it = r.strokes->find(std::string(cp));
      if (it == r.strokes->end()) continue;
      const int n = it->second;
      s.chars += 1;
      s.total += n;
      if (n <= r.low_stroke_max) {
        s.low += 1;
      } else if (n >= r.high_stroke_min) {
        s.high += 1;
      } else {
        s.mid += 1;
      }
    }
  }
  return s;
}

FeatureValue Ratio(double num, double den) {
  if (den == 0.0) return std::nullopt;
  return num / den;
}

}  // namespace

WordList LoadWordList(const std::string &path) {
  WordList out;
  for (std::string &line : ReadLines(path)) {
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
    if (!line.empty()) out.insert(line);
  }
  return out;
}

std::unordered_map<std::string, int> LoadStrokeTable(const std::string &path) {
  std::unordered_map<std::string, int> out;
  for (const std::string &line : ReadLines(path)) {
    auto [key, value] = SplitTab(line, path);
    try {
      out[key] = std::stoi(value);
    } catch (const std::exception &) {
      throw DataError(path + ": bad stroke count '" + value + "'");
    }
  }
  return out;
}

std::unordered_map<std::string, double> LoadFrequencyLexicon(
    const std::string &path) {
  std::unordered_map<std::string, double> out;
  for (const std::string &line : ReadLines(path)) {
    auto [key, value] = SplitTab(line, path);
    try {
      out[key] = std::stod(value);
    } catch (const std::exception &) {
      throw DataError(path + ": bad frequency '" + value + "'");
    }
  }
  return out;
}

void TaggedText::Validate() const {
  if (tags.empty()) return;
  if (tags.size() != sentences.size()) {
    throw DataError("POS tags cover " + std::to_string(tags.size()) +
                    " sentences, text has " + std::to_string(sentences.size()));
  }
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (tags[i].size() != sentences[i].size()) {
      throw DataError("POS tags of sentence " + std::to_string(i) +
                      " are not aligned with its tokens");
    }
  }
}

TaggedText ToTaggedText(const RawDocument &doc) {
  TaggedText t;
  if (!doc.pos.empty() && !doc.sentences.empty()) {
    // Keep the caller's sentence boundaries so tags stay aligned.
    t.sentences = doc.sentences;
    t.tags = doc.pos;
  } else {
    t.sentences = DocumentSentences(doc);
  }
  t.entities = doc.entities;
  t.has_entities = doc.has_entities;
  t.Validate();
  return t;
}

TextProfile TextProfile::Build(const TaggedText &text,
                               const FeatureResources &resources) {
  text.Validate();
  TextProfile p;
  p.resources = &resources;
  p.has_tags = text.has_tags();
  p.entities = text.entities;
  p.has_entities = text.has_entities;
  for (std::size_t i = 0; i < text.sentences.size(); ++i) {
    TokenList words;
    TokenList tags;
    for (std::size_t j = 0; j < text.sentences[i].size(); ++j) {
      const std::string &tok = text.sentences[i][j];
      if (!IsWord(tok)) continue;
      words.push_back(tok);
      if (p.has_tags) tags.push_back(text.tags[i][j]);
    }
    if (words.empty()) continue;
    p.words.insert(p.words.end(), words.begin(), words.end());
    p.tags.insert(p.tags.end(), tags.begin(), tags.end());
    p.sentence_words.push_back(std::move(words));
    if (p.has_tags) p.sentence_tags.push_back(std::move(tags));
  }
  return p;
}

double Ttr(std::span<const std::string> tokens) {
  if (tokens.empty()) throw std::invalid_argument("TTR of an empty text");
  return static_cast<double>(WordList(tokens.begin(), tokens.end()).size()) /
         static_cast<double>(tokens.size());
}

double Rttr(std::span<const std::string> tokens) {
  if (tokens.empty()) throw std::invalid_argument("RTTR of an empty text");
  return static_cast<double>(WordList(tokens.begin(), tokens.end()).size()) /
         std::sqrt(static_cast<double>(tokens.size()));
}

double Mtld(std::span<const std::string> tokens, double threshold) {
  if (tokens.size() < 2) {
    throw std::invalid_argument("MTLD needs at least two tokens");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("MTLD threshold must lie in (0, 1)");
  }
  std::vector<std::string> reversed(tokens.rbegin(), tokens.rend());
  double fwd_factors = 0.0;
  double bwd_factors = 0.0;
  const double fwd = MtldPass(tokens, threshold, &fwd_factors);
  const double bwd = MtldPass(reversed, threshold, &bwd_factors);
  return 0.5 * (fwd + bwd);
}

FeatureValue FeatureVector::Get(const std::string &name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  throw std::out_of_range("no feature named " + name);
}

void FeatureRegistry::Register(std::string name, Extractor fn) {
  extractors_.emplace(name, std::move(fn));
  names_.push_back(std::move(name));
}

bool FeatureRegistry::Contains(const std::string &name) const {
  return extractors_.count(name) > 0;
}

FeatureValue FeatureRegistry::Extract(const std::string &name,
                                      const TextProfile &profile) const {
  auto it = extractors_.find(name);
  if (it == extractors_.end()) throw ConfigError("unknown feature '" + name + "'");
  return it->second(profile);
}

const FeatureRegistry &FeatureRegistry::Default() {
  static const FeatureRegistry *registry = [] {
    auto *r = new FeatureRegistry();
    using P = const TextProfile &;
    auto nonempty = [](P p) { return !p.words.empty(); };

    // Lexical counts and diversity.
    r->Register("sentence_count", [](P p) -> FeatureValue { return SentenceCount(p); });
    r->Register("word_count", [](P p) -> FeatureValue {
      return static_cast<double>(p.words.size());
    });
    r->Register("char_count", [](P p) -> FeatureValue {
      double n = 0;
      for (const auto &w : p.words) n += static_cast<double>(utf8::Length(w));
      return n;
    });
    r->Register("ttr", [nonempty](P p) -> FeatureValue {
      if (!nonempty(p)) return std::nullopt;
      return Ttr(p.words);
    });
    r->Register("rttr", [nonempty](P p) -> FeatureValue {
      if (!nonempty(p)) return std::nullopt;
      return Rttr(p.words);
    });
    r->Register("mtld", [](P p) -> FeatureValue {
      if (p.words.size() < 2) return std::nullopt;
      return Mtld(p.words);
    });
    r->Register("two_char_word_count", [](P p) -> FeatureValue {
      double n = 0;
      for (const auto &w : p.words) n += utf8::Length(w) == 2;
      return n;
    });
    r->Register("three_plus_char_word_count", [](P p) -> FeatureValue {
      double n = 0;
      for (const auto &w : p.words) n += utf8::Length(w) >= 3;
      return n;
    });

    // Content words need POS tags.
    auto content_count = [](P p) {
      const FeatureResources &res = *p.resources;
      double n = 0;
      for (const auto &t : p.tags) {
        n += HasPrefix(t, res.noun_tag) || HasPrefix(t, res.verb_tag) ||
             HasPrefix(t, res.adjective_tag) || HasPrefix(t, res.adverb_tag);
      }
      return n;
    };
    r->Register("content_word_count", [content_count](P p) -> FeatureValue {
      if (!p.has_tags) return std::nullopt;
      return content_count(p);
    });
    r->Register("content_word_density", [content_count](P p) -> FeatureValue {
      if (!p.has_tags) return std::nullopt;
      return Ratio(content_count(p), static_cast<double>(p.words.size()));
    });

    // Frequency lexicon.
    r->Register("log_avg_content_word_frequency", [](P p) -> FeatureValue {
      const FeatureResources &res = *p.resources;
      if (!p.has_tags || !res.frequency) return std::nullopt;
      double sum = 0;
      double n = 0;
      for (std::size_t i = 0; i < p.words.size(); ++i) {
        const std::string &t = p.tags[i];
        if (!(HasPrefix(t, res.noun_tag) || HasPrefix(t, res.verb_tag) ||
              HasPrefix(t, res.adjective_tag) || HasPrefix(t, res.adverb_tag))) {
          continue;
        }
        auto it = res.frequency->find(p.words[i]);
        if (it == res.frequency->end() || it->second <= 0) continue;
        sum += std::log(it->second);
        n += 1;
      }
      return Ratio(sum, n);
    });
    r->Register("difficult_word_count", [](P p) -> FeatureValue {
      const FeatureResources &res = *p.resources;
      if (!res.frequency) return std::nullopt;
      double n = 0;
      for (const auto &w : p.words) {
        auto it = res.frequency->find(w);
        n += it == res.frequency->end() || it->second < res.difficult_below;
      }
      return n;
    });

    // Character strokes.
    r->Register("low_stroke_char_count", [](P p) -> FeatureValue {
      if (!p.resources->strokes) return std::nullopt;
      return CountStrokes(p).low;
    });
    r->Register("mid_stroke_char_count", [](P p) -> FeatureValue {
      if (!p.resources->strokes) return std::nullopt;
      return CountStrokes(p).mid;
    });
    r->Register("high_stroke_char_count", [](P p) -> FeatureValue {
      if (!p.resources->strokes) return std::nullopt;
      return CountStrokes(p).high;
    });
    r->Register("avg_strokes_per_char", [](P p) -> FeatureValue {
      if (!p.resources->strokes) return std::nullopt;
      const StrokeStats s = CountStrokes(p);
      return Ratio(s.total, s.chars);
    });

    // Resource word lists.
    r->Register("negative_word_count", [](P p) -> FeatureValue {
      if (!p.resources->negative_words) return std::nullopt;
      return static_cast<double>(CountTerms(p.sentence_words, *p.resources->negative_words));
    });
    r->Register("function_word_count", [](P p) -> FeatureValue {
      if (!p.resources->function_words) return std::nullopt;
      return static_cast<double>(CountTerms(p.sentence_words, *p.resources->function_words));
    });
    r->Register("function_word_density", [](P p) -> FeatureValue {
      if (!p.resources->function_words) return std::nullopt;
      return Ratio(static_cast<double>(CountTerms(p.sentence_words, *p.resources->function_words)),
                   static_cast<double>(p.words.size()));
    });

    // Part of speech.
    struct PosClass {
      const char *name;
      std::string FeatureResources::*tag;
    };
    for (PosClass c : {PosClass{"adjective", &FeatureResources::adjective_tag},
                       PosClass{"noun", &FeatureResources::noun_tag},
                       PosClass{"verb", &FeatureResources::verb_tag}}) {
      const std::string n = c.name;
      auto tag = c.tag;
      r->Register(n + "_pct", [tag](P p) -> FeatureValue {
        if (!p.has_tags) return std::nullopt;
        return Ratio(CountTag(p, p.resources->*tag).count, static_cast<double>(p.words.size()));
      });
      r->Register("unique_" + n + "_pct", [tag](P p) -> FeatureValue {
        if (!p.has_tags) return std::nullopt;
        return Ratio(CountTag(p, p.resources->*tag).unique, Types(p.words));
      });
      r->Register("unique_" + n + "_count", [tag](P p) -> FeatureValue {
        if (!p.has_tags) return std::nullopt;
        return CountTag(p, p.resources->*tag).unique;
      });
      r->Register(n + "_per_sentence", [tag](P p) -> FeatureValue {
        if (!p.has_tags) return std::nullopt;
        return Ratio(CountTag(p, p.resources->*tag).count, SentenceCount(p));
      });
      r->Register("unique_" + n + "_per_sentence", [tag](P p) -> FeatureValue {
        if (!p.has_tags) return std::nullopt;
        return CountTag(p, p.resources->*tag).mean_unique_per_sentence;
      });
    }

    // Named entities, only from pre-annotated input.
    r->Register("entity_count", [](P p) -> FeatureValue {
      if (!p.has_entities) return std::nullopt;
      return static_cast<double>(p.entities.size());
    });
    r->Register("unique_entity_count", [](P p) -> FeatureValue {
      if (!p.has_entities) return std::nullopt;
      return Types(p.entities);
    });
    r->Register("entity_pct", [](P p) -> FeatureValue {
      if (!p.has_entities) return std::nullopt;
      return Ratio(static_cast<double>(p.entities.size()), static_cast<double>(p.words.size()));
    });
    r->Register("unique_entity_pct", [](P p) -> FeatureValue {
      if (!p.has_entities) return std::nullopt;
      return Ratio(Types(p.entities), Types(p.words));
    });
    r->Register("entities_per_sentence", [](P p) -> FeatureValue {
      if (!p.has_entities) return std::nullopt;
      return Ratio(static_cast<double>(p.entities.size()), SentenceCount(p));
    });
    r->Register("unique_entities_per_sentence", [](P p) -> FeatureValue {
      if (!p.has_entities) return std::nullopt;
      return Ratio(Types(p.entities), SentenceCount(p));
    });

    // Cohesion.
    r->Register("pronoun_count", [](P p) -> FeatureValue {
      if (p.has_tags) return CountTag(p, p.resources->pronoun_tag).count;
      if (p.resources->pronouns) {
        return static_cast<double>(CountTerms(p.sentence_words, *p.resources->pronouns));
      }
      return std::nullopt;
    });
    r->Register("connective_count", [](P p) -> FeatureValue {
      const FeatureResources &res = *p.resources;
      if (!res.connectives && !res.positive_connectives && !res.negative_connectives) {
        return std::nullopt;
      }
      WordList all;
      for (const auto *list : {&res.connectives, &res.positive_connectives,
                               &res.negative_connectives}) {
        if (*list) all.insert((*list)->begin(), (*list)->end());
      }
      return static_cast<double>(CountTerms(p.sentence_words, all));
    });
    r->Register("positive_connective_count", [](P p) -> FeatureValue {
      if (!p.resources->positive_connectives) return std::nullopt;
      return static_cast<double>(CountTerms(p.sentence_words, *p.resources->positive_connectives));
    });
    r->Register("negative_connective_count", [](P p) -> FeatureValue {
      if (!p.resources->negative_connectives) return std::nullopt;
      return static_cast<double>(CountTerms(p.sentence_words, *p.resources->negative_connectives));
    });
    return r;
  }();
  return *registry;
}

FeatureVector DensityFeatures(const TaggedText &text,
                              const FeatureResources &resources) {
  static const char *kNames[] = {
      "content_word_count",     "content_word_density",
      "function_word_count",    "function_word_density",
      "low_stroke_char_count",  "mid_stroke_char_count",
      "high_stroke_char_count", "avg_strokes_per_char",
      "two_char_word_count",    "three_plus_char_word_count",
      "adjective_pct",          "unique_adjective_pct",
      "unique_adjective_count", "adjective_per_sentence",
      "unique_adjective_per_sentence",
      "noun_pct",               "unique_noun_pct",
      "unique_noun_count",      "noun_per_sentence",
      "unique_noun_per_sentence",
      "verb_pct",               "unique_verb_pct",
      "unique_verb_count",      "verb_per_sentence",
      "unique_verb_per_sentence"};
  const FeatureRegistry &reg = FeatureRegistry::Default();
  const TextProfile profile = TextProfile::Build(text, resources);
  FeatureVector out;
  for (const char *name : kNames) {
    out.names.emplace_back(name);
    out.values.push_back(reg.Extract(name, profile));
  }
  return out;
}

FeatureVector ExtractAll(const RawDocument &doc,
                         const FeatureResources &resources,
                         const std::vector<std::string> &selection) {
  const FeatureRegistry &reg = FeatureRegistry::Default();
  const std::vector<std::string> &names =
      selection.empty() ? reg.names() : selection;
  for (const auto &n : names) {
    if (!reg.Contains(n)) throw ConfigError("unknown feature '" + n + "'");
  }
  const TextProfile profile = TextProfile::Build(ToTaggedText(doc), resources);
  FeatureVector out;
  out.names = names;
  for (const auto &n : names) out.values.push_back(reg.Extract(n, profile));
  return out;
}

std::string FeatureCsv(std::span<const RawDocument> docs,
                       std::span<const FeatureVector> features) {
  if (docs.size() != features.size()) {
    throw std::invalid_argument("one feature vector per document required");
  }
  std::ostringstream out;
  out.precision(12);
  out << "id,grade";
  if (!features.empty()) {
    for (const auto &n : features[0].names) out << ',' << n;
  }
  out << '\n';
  for (std::size_t i = 0; i < docs.size(); ++i) {
    std::string id = docs[i].id;
    if (id.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : id) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      id = quoted + "\"";
    }
    out << id << ',' << docs[i].grade;
    for (const FeatureValue &v : features[i].values) {
      out << ',';
      if (v) out << *v;
    }
    out << '\n';
  }
  return out.str();
}

void WriteFeatureCsv(const std::string &path, std::span<const RawDocument> docs,
                     std::span<const FeatureVector> features) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write features: " + path);
  out << FeatureCsv(docs, features);
}

}  // namespace readrank
