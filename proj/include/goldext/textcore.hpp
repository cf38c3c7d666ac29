#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstddef>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "goldext/error.hpp"
#include "goldext/porter.hpp"

namespace goldext {

using StopwordSet = std::unordered_set<std::string>;

struct Token {
  std::string surface;
  std::string norm;
  std::string stem;
  size_t index = 0;
  bool is_stopword = false;
  bool is_punct = false;
};

enum class SegmentKind { kSentence, kConstituent };

struct Segment {
  std::string id;
  SegmentKind kind = SegmentKind::kSentence;
  std::vector<Token> tokens;
  std::string source_sentence_id;
  // Offset of tokens[0] within the source sentence (0 for sentences).
  size_t sentence_offset = 0;
  std::optional<std::pair<size_t, size_t>> char_span;
};

enum class DocRole { kChapter, kReferenceSummary, kExtract };

struct Document {
  std::string doc_id;
  DocRole role = DocRole::kChapter;
  std::vector<Segment> segments;
  std::optional<std::string> source_label;
  // For summaries: the chapter this summary describes.
  std::optional<std::string> chapter_id;
};

inline std::string_view role_name(DocRole role) {
  switch (role) {
    case DocRole::kChapter: return "chapter";
    case DocRole::kReferenceSummary: return "reference_summary";
    case DocRole::kExtract: return "extract";
  }
  return "chapter";
}

inline DocRole parse_role(std::string_view name) {
  if (name == "chapter") return DocRole::kChapter;
  if (name == "reference_summary") return DocRole::kReferenceSummary;
  if (name == "extract") return DocRole::kExtract;
  throw Error(ErrorCode::kFormat, "unknown document role '" + std::string(name) + "'");
}

namespace detail {

inline constexpr std::array<std::string_view, 179> kEnglishStopwords = {
    "i", "me", "my", "myself", "we", "our", "ours", "ourselves", "you", "you're",
    "you've", "you'll", "you'd", "your", "yours", "yourself", "yourselves", "he",
    "him", "his", "himself", "she", "she's", "her", "hers", "herself", "it",
    "it's", "its", "itself", "they", "them", "their", "theirs", "themselves",
    "what", "which", "who", "whom", "this", "that", "that'll", "these", "those",
    "am", "is", "are", "was", "were", "be", "been", "being", "have", "has", "had",
    "having", "do", "does", "did", "doing", "a", "an", "the", "and", "but", "if",
    "or", "because", "as", "until", "while", "of", "at", "by", "for", "with",
    "about", "against", "between", "into", "through", "during", "before",
    "after", "above", "below", "to", "from", "up", "down", "in", "out", "on",
    "off", "over", "under", "again", "further", "then", "once", "here", "there",
    "when", "where", "why", "how", "all", "any", "both", "each", "few", "more",
    "most", "other", "some", "such", "no", "nor", "not", "only", "own", "same",
    "so", "than", "too", "very", "s", "t", "can", "will", "just", "don", "don't",
    "should", "should've", "now", "d", "ll", "m", "o", "re", "ve", "y", "ain",
    "aren", "aren't", "couldn", "couldn't", "didn", "didn't", "doesn",
    "doesn't", "hadn", "hadn't", "hasn", "hasn't", "haven", "haven't", "isn",
    "isn't", "ma", "mightn", "mightn't", "mustn", "mustn't", "needn",
    "needn't", "shan", "shan't", "shouldn", "shouldn't", "wasn", "wasn't",
    "weren", "weren't", "won", "won't", "wouldn", "wouldn't"};

// Multi-byte punctuation commonly found in scraped study-guide text.
inline constexpr std::array<std::string_view, 9> kUnicodePunct = {
    "“", "”", "‘", "’", "—", "–", "…", "«", "»"};

inline bool is_ascii_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

// Splits a multi-byte punctuation prefix off `s`, returning its length or 0.
inline size_t unicode_punct_prefix(std::string_view s) {
  for (auto p : kUnicodePunct) {
    if (s.starts_with(p)) return p.size();
  }
  return 0;
}

inline size_t unicode_punct_suffix(std::string_view s) {
  for (auto p : kUnicodePunct) {
    if (s.ends_with(p)) return p.size();
  }
  return 0;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string trim(std::string_view s) {
  size_t b = 0;
  size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace detail

inline const StopwordSet& default_stopwords() {
  static const StopwordSet kSet = [] {
    StopwordSet set;
    for (std::string_view w : detail::kEnglishStopwords) set.emplace(w);
    return set;
  }();
  return kSet;
}

/// True iff every character of `s` is punctuation (ASCII or one of the
/// common typographic marks).
inline bool is_punctuation(std::string_view s) {
  if (s.empty()) return false;
  while (!s.empty()) {
    if (size_t n = detail::unicode_punct_prefix(s); n > 0) {
      s.remove_prefix(n);
    } else if (detail::is_ascii_punct(s.front())) {
      s.remove_prefix(1);
    } else {
      return false;
    }
  }
  return true;
}

inline Token make_token(std::string surface, size_t index, const StopwordSet& stopwords) {
  Token t;
  t.norm = detail::to_lower(surface);
  t.is_punct = is_punctuation(surface);
  t.stem = t.is_punct ? t.norm : stem(t.norm);
  t.is_stopword = stopwords.contains(t.norm);
  t.surface = std::move(surface);
  t.index = index;
  return t;
}

/// Tokenizes one sentence. Pretokenized text is split on single spaces;
/// otherwise whitespace-split words have leading and trailing punctuation
/// characters detached one token per character.
inline std::vector<Token> tokenize(std::string_view text, bool pretokenized,
                                   const StopwordSet& stopwords = default_stopwords()) {
  std::string trimmed = detail::trim(text);
  if (trimmed.empty()) throw Error(ErrorCode::kEmptyText, "cannot tokenize empty text");

  std::vector<std::string> surfaces;
  if (pretokenized) {
    size_t start = 0;
    std::string_view view(trimmed);
    while (start <= view.size()) {
      size_t end = view.find(' ', start);
      if (end == std::string_view::npos) end = view.size();
      // Runs of spaces would produce empty pieces; they carry no token.
      if (end > start) surfaces.emplace_back(view.substr(start, end - start));
      start = end + 1;
    }
  } else {
    std::string_view view(trimmed);
    size_t i = 0;
    while (i < view.size()) {
      while (i < view.size() && std::isspace(static_cast<unsigned char>(view[i]))) ++i;
      size_t j = i;
      while (j < view.size() && !std::isspace(static_cast<unsigned char>(view[j]))) ++j;
      if (j == i) break;
      std::string_view word = view.substr(i, j - i);
      i = j;
      if (is_punctuation(word)) {
        surfaces.emplace_back(word);
        continue;
      }
      std::vector<std::string> leading;
      std::vector<std::string> trailing;
      while (!word.empty()) {
        if (size_t n = detail::unicode_punct_prefix(word); n > 0) {
          leading.emplace_back(word.substr(0, n));
          word.remove_prefix(n);
        } else if (detail::is_ascii_punct(word.front())) {
          leading.emplace_back(word.substr(0, 1));
          word.remove_prefix(1);
        } else {
          break;
        }
      }
      while (!word.empty()) {
        if (size_t n = detail::unicode_punct_suffix(word); n > 0) {
          trailing.emplace_back(word.substr(word.size() - n));
          word.remove_suffix(n);
        } else if (detail::is_ascii_punct(word.back())) {
          trailing.emplace_back(word.substr(word.size() - 1));
          word.remove_suffix(1);
        } else {
          break;
        }
      }
      for (auto& l : leading) surfaces.push_back(std::move(l));
      if (!word.empty()) surfaces.emplace_back(word);
      for (auto it = trailing.rbegin(); it != trailing.rend(); ++it) surfaces.push_back(std::move(*it));
    }
  }

  std::vector<Token> tokens;
  tokens.reserve(surfaces.size());
  for (size_t k = 0; k < surfaces.size(); ++k) {
    tokens.push_back(make_token(std::move(surfaces[k]), k, stopwords));
  }
  return tokens;
}

/// Number of non-punctuation tokens.
inline size_t word_count(std::span<const Token> tokens) {
  return static_cast<size_t>(
      std::count_if(tokens.begin(), tokens.end(), [](const Token& t) { return !t.is_punct; }));
}

inline size_t word_count(const Segment& segment) { return word_count(segment.tokens); }

inline size_t word_count(const Document& doc) {
  size_t total = 0;
  for (const auto& s : doc.segments) total += word_count(s);
  return total;
}

/// Space-joined surfaces.
inline std::string segment_text(const Segment& segment) {
  std::string out;
  for (const auto& t : segment.tokens) {
    if (!out.empty()) out += ' ';
    out += t.surface;
  }
  return out;
}

inline std::string sentence_id(std::string_view doc_id, size_t index) {
  return std::string(doc_id) + "#" + std::to_string(index);
}

/// Builds a sentence-segmented document; segment ids are "<doc_id>#<i>".
inline Document make_document(std::string doc_id, DocRole role, std::span<const std::string> sentences,
                              bool pretokenized = true,
                              const StopwordSet& stopwords = default_stopwords()) {
  Document doc;
  doc.doc_id = std::move(doc_id);
  doc.role = role;
  doc.segments.reserve(sentences.size());
  for (size_t i = 0; i < sentences.size(); ++i) {
    Segment seg;
    seg.id = sentence_id(doc.doc_id, i);
    seg.kind = SegmentKind::kSentence;
    seg.source_sentence_id = seg.id;
    seg.tokens = tokenize(sentences[i], pretokenized, stopwords);
    doc.segments.push_back(std::move(seg));
  }
  return doc;
}

inline Document make_document(std::string doc_id, DocRole role, std::initializer_list<std::string> sentences,
                              bool pretokenized = true) {
  std::vector<std::string> v(sentences);
  return make_document(std::move(doc_id), role, std::span<const std::string>(v), pretokenized);
}

using NGram = std::vector<std::string>;
using NGramCounts = std::map<NGram, size_t>;

/// Contiguous n-gram multiset over the given keys.
inline NGramCounts ngrams(std::span<const std::string> keys, size_t n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArg, "n-gram order must be >= 1");
  NGramCounts counts;
  if (keys.size() < n) return counts;
  for (size_t i = 0; i + n <= keys.size(); ++i) {
    ++counts[NGram(keys.begin() + static_cast<std::ptrdiff_t>(i),
                   keys.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

/// n-grams over tokens keyed by stem or norm. Every token participates;
/// metrics filter punctuation before calling.
inline NGramCounts ngrams(std::span<const Token> tokens, size_t n, bool use_stems) {
  std::vector<std::string> keys;
  keys.reserve(tokens.size());
  for (const auto& t : tokens) keys.push_back(use_stems ? t.stem : t.norm);
  return ngrams(std::span<const std::string>(keys), n);
}

/// One longest common subsequence. The backtrace prefers matching at the
/// earliest position of `a`, so among equal-length witnesses the one built
/// from the leftmost matches in `a` is returned.
inline std::vector<std::string> lcs(std::span<const std::string> a, std::span<const std::string> b) {
  const size_t n = a.size();
  const size_t m = b.size();
  // suffix table: len[i][j] = LCS length of a[i..] and b[j..]
  std::vector<uint32_t> len((n + 1) * (m + 1), 0);
  auto at = [m](size_t i, size_t j) { return i * (m + 1) + j; };
  for (size_t i = n; i-- > 0;) {
    for (size_t j = m; j-- > 0;) {
      if (a[i] == b[j]) {
        len[at(i, j)] = len[at(i + 1, j + 1)] + 1;
      } else {
        len[at(i, j)] = std::max(len[at(i + 1, j)], len[at(i, j + 1)]);
      }
    }
  }
  std::vector<std::string> out;
  out.reserve(len[at(0, 0)]);
  size_t i = 0;
  size_t j = 0;
  while (i < n && j < m) {
    if (a[i] == b[j] && len[at(i, j)] == len[at(i + 1, j + 1)] + 1) {
      out.push_back(a[i]);
      ++i;
      ++j;
    } else if (len[at(i, j + 1)] >= len[at(i + 1, j)]) {
      ++j;
    } else {
      ++i;
    }
  }
  return out;
}

/// LCS length only; O(min(n, m)) memory.
inline size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<uint32_t> prev(b.size() + 1, 0);
  std::vector<uint32_t> cur(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// Reads a stop-word list: one word per line, '#' comments and blank lines skipped.
inline StopwordSet load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read stop-word file '" + path + "'");
  StopwordSet words;
  std::string line;
  while (std::getline(in, line)) {
    std::string w = detail::trim(line);
    if (w.empty() || w.front() == '#') continue;
    words.insert(detail::to_lower(w));
  }
  return words;
}

}  // namespace goldext
