#pragma once

// Summary-to-chapter alignment: per-sentence greedy argmax, one-to-one
// stable matching (summary segments propose), and summary-level greedy set
// growth stopped by word count (WL) or by score (WS).

#include <algorithm>
#include <deque>
#include <exception>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "goldext/error.hpp"
#include "goldext/simmetrics.hpp"
#include "goldext/textcore.hpp"

namespace goldext {

enum class AlignMethod { kGreedySent, kStableSent, kSummaryWL, kSummaryWS };

inline std::string_view method_name(AlignMethod m) {
  switch (m) {
    case AlignMethod::kGreedySent: return "greedy";
    case AlignMethod::kStableSent: return "stable";
    case AlignMethod::kSummaryWL: return "wl";
    case AlignMethod::kSummaryWS: return "ws";
  }
  return "?";
}

inline AlignMethod parse_method(std::string_view name) {
  for (AlignMethod m : {AlignMethod::kGreedySent, AlignMethod::kStableSent, AlignMethod::kSummaryWL,
                        AlignMethod::kSummaryWS}) {
    if (method_name(m) == name) return m;
  }
  throw Error(ErrorCode::kInvalidArg, "unknown alignment method '" + std::string(name) + "'");
}

inline bool is_sentence_level(AlignMethod m) {
  return m == AlignMethod::kGreedySent || m == AlignMethod::kStableSent;
}

struct AlignmentPair {
  std::string summary_segment_id;
  std::string chapter_segment_id;
  double score = 0.0;
};

struct AlignmentResult {
  AlignMethod method = AlignMethod::kStableSent;
  MetricId metric = MetricId::kRWtd;
  std::string chapter_id;
  std::string summary_id;
  // sentence-level methods
  std::vector<AlignmentPair> pairs;
  std::vector<std::string> unmatched_summary_ids;
  // summary-level methods, in selection order
  std::vector<std::string> selected_ids;
  std::vector<double> score_trace;
  std::vector<size_t> word_trace;
};

struct AlignOptions {
  // Pairs scoring below the floor are never matched. Unset means every pair
  // is acceptable.
  std::optional<double> min_score;
  size_t jobs = 1;
};

/// Dense |summary| x |chapter| score matrix, row-major.
class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(size_t rows, size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), v_(rows * cols, fill) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  double at(size_t r, size_t c) const { return v_[r * cols_ + c]; }
  double& at(size_t r, size_t c) { return v_[r * cols_ + c]; }

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<double> v_;
};

namespace align_detail {

inline void require_nonempty(const Document& summary, const Document& chapter) {
  if (summary.segments.empty()) throw Error(ErrorCode::kInvalidArg, "summary '" + summary.doc_id + "' is empty");
  if (chapter.segments.empty()) throw Error(ErrorCode::kInvalidArg, "chapter '" + chapter.doc_id + "' is empty");
}

inline bool acceptable(double s, const std::optional<double>& floor) { return !floor || s >= *floor; }

}  // namespace align_detail

/// Scores every (summary segment, chapter segment) cell with the chapter
/// segment as candidate and the summary segment as reference. Rows are
/// distributed over `jobs` threads; each cell is computed independently so
/// the result does not depend on the thread count.
inline ScoreMatrix compute_score_matrix(const Document& summary, const Document& chapter, const MetricConfig& cfg,
                                        size_t jobs = 1) {
  std::vector<PreparedText> srows;
  std::vector<PreparedText> ccols;
  srows.reserve(summary.segments.size());
  ccols.reserve(chapter.segments.size());
  for (const auto& s : summary.segments) srows.push_back(prepare(s, cfg));
  for (const auto& c : chapter.segments) ccols.push_back(prepare(c, cfg));
  // Validate configuration up front so worker threads cannot throw for it.
  if (is_weighted(cfg.metric)) (void)weight_table_for(cfg);
  if (cfg.metric == MetricId::kCosine && !cfg.vectors) {
    throw Error(ErrorCode::kInvalidArg, "cosine metric needs segment vectors");
  }

  ScoreMatrix m(srows.size(), ccols.size());
  auto fill_rows = [&](size_t begin, size_t step) {
    for (size_t r = begin; r < srows.size(); r += step) {
      for (size_t c = 0; c < ccols.size(); ++c) m.at(r, c) = metric_score(ccols[c], srows[r], cfg);
    }
  };
  jobs = std::max<size_t>(1, std::min(jobs, srows.size()));
  if (jobs == 1) {
    fill_rows(0, 1);
    return m;
  }
  std::vector<std::exception_ptr> errors(jobs);
  std::vector<std::thread> workers;
  for (size_t t = 0; t < jobs; ++t) {
    workers.emplace_back([&, t] {
      try {
        fill_rows(t, jobs);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& w : workers) w.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return m;
}

/// Row-wise argmax, ties to the lowest column; -1 when no cell is acceptable.
inline std::vector<int> greedy_assignment(const ScoreMatrix& m, const std::optional<double>& floor = {}) {
  std::vector<int> out(m.rows(), -1);
  for (size_t r = 0; r < m.rows(); ++r) {
    double best = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < m.cols(); ++c) {
      double s = m.at(r, c);
      if (!align_detail::acceptable(s, floor)) continue;
      if (s > best) {
        best = s;
        out[r] = static_cast<int>(c);
      }
    }
  }
  return out;
}

/// Gale-Shapley with rows proposing in index order. Both sides rank by the
/// shared score, ties broken by lower index. Returns row -> column (or -1).
inline std::vector<int> gale_shapley(const ScoreMatrix& m, const std::optional<double>& floor = {}) {
  const size_t nr = m.rows();
  const size_t nc = m.cols();
  std::vector<std::vector<int>> prefs(nr);
  for (size_t r = 0; r < nr; ++r) {
    for (size_t c = 0; c < nc; ++c) {
      if (align_detail::acceptable(m.at(r, c), floor)) prefs[r].push_back(static_cast<int>(c));
    }
    std::stable_sort(prefs[r].begin(), prefs[r].end(),
                     [&](int a, int b) { return m.at(r, static_cast<size_t>(a)) > m.at(r, static_cast<size_t>(b)); });
  }
  // column prefers row a over row b
  auto col_prefers = [&](size_t c, size_t a, size_t b) {
    double sa = m.at(a, c);
    double sb = m.at(b, c);
    return sa > sb || (sa == sb && a < b);
  };

  std::vector<int> row_match(nr, -1);
  std::vector<int> col_match(nc, -1);
  std::vector<size_t> next(nr, 0);
  std::deque<size_t> free_rows;
  for (size_t r = 0; r < nr; ++r) free_rows.push_back(r);
  while (!free_rows.empty()) {
    size_t r = free_rows.front();
    free_rows.pop_front();
    while (next[r] < prefs[r].size()) {
      size_t c = static_cast<size_t>(prefs[r][next[r]++]);
      int holder = col_match[c];
      if (holder < 0) {
        col_match[c] = static_cast<int>(r);
        row_match[r] = static_cast<int>(c);
        break;
      }
      if (col_prefers(c, r, static_cast<size_t>(holder))) {
        row_match[static_cast<size_t>(holder)] = -1;
        free_rows.push_front(static_cast<size_t>(holder));
        col_match[c] = static_cast<int>(r);
        row_match[r] = static_cast<int>(c);
        break;
      }
    }
  }
  return row_match;
}

/// Pairs (row, column) that would both rather be matched to each other.
/// Unmatched agents prefer any acceptable partner to none.
inline std::vector<std::pair<size_t, size_t>> blocking_pairs(const ScoreMatrix& m, const std::vector<int>& row_match,
                                                             const std::optional<double>& floor = {}) {
  constexpr double kNone = -std::numeric_limits<double>::infinity();
  std::vector<int> col_match(m.cols(), -1);
  for (size_t r = 0; r < row_match.size(); ++r) {
    if (row_match[r] >= 0) col_match[static_cast<size_t>(row_match[r])] = static_cast<int>(r);
  }
  std::vector<std::pair<size_t, size_t>> out;
  for (size_t r = 0; r < m.rows(); ++r) {
    double mine = row_match[r] >= 0 ? m.at(r, static_cast<size_t>(row_match[r])) : kNone;
    for (size_t c = 0; c < m.cols(); ++c) {
      if (row_match[r] == static_cast<int>(c)) continue;
      double s = m.at(r, c);
      if (!align_detail::acceptable(s, floor)) continue;
      double theirs = col_match[c] >= 0 ? m.at(static_cast<size_t>(col_match[c]), c) : kNone;
      if (s > mine && s > theirs) out.emplace_back(r, c);
    }
  }
  return out;
}

namespace align_detail {

inline AlignmentResult from_assignment(const Document& summary, const Document& chapter, const MetricConfig& cfg,
                                       AlignMethod method, const ScoreMatrix& m, const std::vector<int>& assign) {
  AlignmentResult res;
  res.method = method;
  res.metric = cfg.metric;
  res.chapter_id = chapter.doc_id;
  res.summary_id = summary.doc_id;
  for (size_t r = 0; r < assign.size(); ++r) {
    if (assign[r] < 0) {
      res.unmatched_summary_ids.push_back(summary.segments[r].id);
      continue;
    }
    size_t c = static_cast<size_t>(assign[r]);
    res.pairs.push_back({summary.segments[r].id, chapter.segments[c].id, m.at(r, c)});
  }
  return res;
}

}  // namespace align_detail

/// Each summary segment independently takes its best chapter segment; a
/// chapter segment may be chosen more than once.
inline AlignmentResult greedy_sentence_align(const Document& summary, const Document& chapter,
                                             const MetricConfig& cfg, const AlignOptions& opts = {}) {
  align_detail::require_nonempty(summary, chapter);
  ScoreMatrix m = compute_score_matrix(summary, chapter, cfg, opts.jobs);
  return align_detail::from_assignment(summary, chapter, cfg, AlignMethod::kGreedySent, m,
                                       greedy_assignment(m, opts.min_score));
}

/// One-to-one stable matching; leftover summary segments are reported as
/// unmatched rather than forced onto a chapter segment.
inline AlignmentResult stable_align(const Document& summary, const Document& chapter, const MetricConfig& cfg,
                                    const AlignOptions& opts = {}) {
  align_detail::require_nonempty(summary, chapter);
  ScoreMatrix m = compute_score_matrix(summary, chapter, cfg, opts.jobs);
  return align_detail::from_assignment(summary, chapter, cfg, AlignMethod::kStableSent, m,
                                       gale_shapley(m, opts.min_score));
}

enum class StopRule { kWordLimit, kScoreStop };

/// Grows a set of chapter segments greedily, scoring the selected segments
/// (concatenated in chapter order) against the whole summary.
inline AlignmentResult summary_level_align(const Document& summary, const Document& chapter,
                                           const MetricConfig& cfg, StopRule rule) {
  align_detail::require_nonempty(summary, chapter);
  if (cfg.metric == MetricId::kCosine) {
    throw Error(ErrorCode::kInvalidArg, "summary-level alignment needs a text metric, not cosine");
  }
  AlignmentResult res;
  res.method = rule == StopRule::kWordLimit ? AlignMethod::kSummaryWL : AlignMethod::kSummaryWS;
  res.metric = cfg.metric;
  res.chapter_id = chapter.doc_id;
  res.summary_id = summary.doc_id;

  const PreparedText ref = prepare(summary, cfg);
  std::vector<PreparedText> units;
  units.reserve(chapter.segments.size());
  for (const auto& seg : chapter.segments) units.push_back(prepare(seg, cfg));
  const size_t target_words = word_count(summary);

  std::vector<char> chosen(chapter.segments.size(), 0);
  double current = 0.0;
  size_t words = 0;
  while (true) {
    if (rule == StopRule::kWordLimit && words >= target_words) break;
    int best = -1;
    double best_score = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < units.size(); ++i) {
      if (chosen[i]) continue;
      PreparedText cand;
      for (size_t k = 0; k < units.size(); ++k) {
        if (chosen[k] || k == i) cand.append(units[k]);
      }
      double s = metric_score(cand, ref, cfg);
      if (s > best_score) {
        best_score = s;
        best = static_cast<int>(i);
      }
    }
    if (best < 0) break;
    if (rule == StopRule::kScoreStop && !(best_score > current)) break;
    chosen[static_cast<size_t>(best)] = 1;
    current = best_score;
    words += word_count(chapter.segments[static_cast<size_t>(best)]);
    res.selected_ids.push_back(chapter.segments[static_cast<size_t>(best)].id);
    res.score_trace.push_back(best_score);
    res.word_trace.push_back(words);
  }
  return res;
}

inline AlignmentResult align(const Document& summary, const Document& chapter, const MetricConfig& cfg,
                             AlignMethod method, const AlignOptions& opts = {}) {
  switch (method) {
    case AlignMethod::kGreedySent: return greedy_sentence_align(summary, chapter, cfg, opts);
    case AlignMethod::kStableSent: return stable_align(summary, chapter, cfg, opts);
    case AlignMethod::kSummaryWL: return summary_level_align(summary, chapter, cfg, StopRule::kWordLimit);
    case AlignMethod::kSummaryWS: return summary_level_align(summary, chapter, cfg, StopRule::kScoreStop);
  }
  throw Error(ErrorCode::kInvalidArg, "unknown method");
}

/// 0/1 per chapter segment in chapter order; 1 iff the segment was aligned.
inline std::vector<int> extract_labels(const AlignmentResult& result, const Document& chapter) {
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < chapter.segments.size(); ++i) index.emplace(chapter.segments[i].id, i);
  std::vector<int> labels(chapter.segments.size(), 0);
  auto mark = [&](const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw Error(ErrorCode::kInconsistentAlignment,
                  "segment '" + id + "' is not part of chapter '" + chapter.doc_id + "'");
    }
    labels[it->second] = 1;
  };
  for (const auto& p : result.pairs) mark(p.chapter_segment_id);
  for (const auto& id : result.selected_ids) mark(id);
  return labels;
}

inline nlohmann::ordered_json alignment_to_json(const AlignmentResult& r, const std::vector<int>& labels) {
  nlohmann::ordered_json j;
  j["chapter_id"] = r.chapter_id;
  j["summary_id"] = r.summary_id;
  j["method"] = method_name(r.method);
  j["metric"] = metric_name(r.metric);
  auto pairs = nlohmann::ordered_json::array();
  for (const auto& p : r.pairs) {
    nlohmann::ordered_json pj;
    pj["s"] = p.summary_segment_id;
    pj["c"] = p.chapter_segment_id;
    pj["score"] = p.score;
    pairs.push_back(std::move(pj));
  }
  j["pairs"] = std::move(pairs);
  if (!is_sentence_level(r.method)) j["selected"] = r.selected_ids;
  j["unmatched"] = r.unmatched_summary_ids;
  j["labels"] = labels;
  return j;
}

inline AlignmentResult alignment_from_json(const nlohmann::json& j) {
  AlignmentResult r;
  r.chapter_id = j.at("chapter_id").get<std::string>();
  r.summary_id = j.at("summary_id").get<std::string>();
  r.method = parse_method(j.at("method").get<std::string>());
  r.metric = parse_metric(j.at("metric").get<std::string>());
  for (const auto& pj : j.at("pairs")) {
    r.pairs.push_back({pj.at("s").get<std::string>(), pj.at("c").get<std::string>(), pj.at("score").get<double>()});
  }
  if (j.contains("selected")) r.selected_ids = j.at("selected").get<std::vector<std::string>>();
  if (j.contains("unmatched")) r.unmatched_summary_ids = j.at("unmatched").get<std::vector<std::string>>();
  return r;
}

}  // namespace goldext
