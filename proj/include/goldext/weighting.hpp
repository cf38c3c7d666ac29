#pragma once

// Smooth inverse frequency word weights, W(w) = alpha / (alpha + p(w)),
// with p(w) estimated per chapter.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "goldext/error.hpp"
#include "goldext/textcore.hpp"

namespace goldext {

enum class KeyMode { kStem, kNorm };

inline const std::string& token_key(const Token& t, KeyMode mode) {
  return mode == KeyMode::kStem ? t.stem : t.norm;
}

using ProbMap = std::map<std::string, double>;
using CountMap = std::map<std::string, size_t>;

inline constexpr double kDefaultAlpha = 1e-3;

class WeightTable {
 public:
  WeightTable() = default;

  double alpha() const { return alpha_; }
  KeyMode key_mode() const { return key_mode_; }
  const ProbMap& probs() const { return probs_; }
  const std::map<std::string, double>& weights() const { return weights_; }
  const CountMap& counts() const { return counts_; }
  double default_weight() const { return default_weight_; }

  double weight(std::string_view key) const {
    auto it = weights_.find(std::string(key));
    return it == weights_.end() ? default_weight_ : it->second;
  }
  double weight(const Token& t) const { return weight(token_key(t, key_mode_)); }

  /// A table assigning the same weight to every word, seen or not.
  static WeightTable uniform(double w, KeyMode mode = KeyMode::kStem) {
    if (!(w > 0.0)) throw Error(ErrorCode::kInvalidArg, "uniform weight must be positive");
    WeightTable t;
    t.default_weight_ = w;
    t.key_mode_ = mode;
    return t;
  }

 private:
  friend WeightTable build_weight_table(const ProbMap& probs, double alpha, KeyMode mode);
  friend WeightTable build_weight_table(const Document& chapter, double alpha, KeyMode mode,
                                        bool include_stopwords);

  double alpha_ = kDefaultAlpha;
  KeyMode key_mode_ = KeyMode::kStem;
  ProbMap probs_;
  std::map<std::string, double> weights_;
  CountMap counts_;
  double default_weight_ = 1.0;
};

/// Word-key counts over the chapter's non-punctuation tokens.
inline CountMap count_words(const Document& chapter, KeyMode mode, bool include_stopwords) {
  CountMap counts;
  for (const auto& seg : chapter.segments) {
    for (const auto& t : seg.tokens) {
      if (t.is_punct) continue;
      if (!include_stopwords && t.is_stopword) continue;
      ++counts[token_key(t, mode)];
    }
  }
  return counts;
}

inline ProbMap probs_from_counts(const CountMap& counts) {
  size_t total = 0;
  for (const auto& [_, c] : counts) total += c;
  if (total == 0) throw Error(ErrorCode::kDegenerateChapter, "chapter has no countable words");
  ProbMap probs;
  for (const auto& [w, c] : counts) probs.emplace(w, static_cast<double>(c) / static_cast<double>(total));
  return probs;
}

inline ProbMap estimate_probs(const Document& chapter, KeyMode mode = KeyMode::kStem,
                              bool include_stopwords = true) {
  return probs_from_counts(count_words(chapter, mode, include_stopwords));
}

inline WeightTable build_weight_table(const ProbMap& probs, double alpha = kDefaultAlpha,
                                      KeyMode mode = KeyMode::kStem) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kInvalidArg, "alpha must be a positive finite number");
  }
  double sum = 0.0;
  for (const auto& [w, p] : probs) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidArg, "probability out of [0,1] for '" + w + "'");
    sum += p;
  }
  if (!probs.empty() && std::abs(sum - 1.0) > 1e-9) {
    throw Error(ErrorCode::kInvalidArg, "probabilities do not sum to 1");
  }
  WeightTable table;
  table.alpha_ = alpha;
  table.key_mode_ = mode;
  table.probs_ = probs;
  for (const auto& [w, p] : probs) table.weights_.emplace(w, alpha / (alpha + p));
  table.default_weight_ = 1.0;
  return table;
}

/// Per-chapter table: probabilities from the chapter, then SIF weights.
inline WeightTable build_weight_table(const Document& chapter, double alpha = kDefaultAlpha,
                                      KeyMode mode = KeyMode::kStem, bool include_stopwords = true) {
  CountMap counts = count_words(chapter, mode, include_stopwords);
  WeightTable table = build_weight_table(probs_from_counts(counts), alpha, mode);
  table.counts_ = std::move(counts);
  return table;
}

/// Sum of word weights over an n-gram or LCS witness.
inline double gram_weight(std::span<const std::string> gram, const WeightTable& table) {
  if (gram.empty()) throw Error(ErrorCode::kInvalidArg, "empty gram has no weight");
  double w = 0.0;
  for (const auto& word : gram) w += table.weight(word);
  return w;
}

/// Debug dump: key, count, p, W; descending W, ties by key.
inline void write_weight_tsv(std::ostream& out, const WeightTable& table) {
  std::vector<std::pair<std::string, double>> rows(table.weights().begin(), table.weights().end());
  std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  out << "word\tcount\tp\tW\n";
  out.precision(10);
  for (const auto& [w, weight] : rows) {
    auto c = table.counts().find(w);
    out << w << '\t' << (c == table.counts().end() ? 0 : c->second) << '\t' << table.probs().at(w) << '\t'
        << weight << '\n';
  }
}

}  // namespace goldext
