#pragma once

// Word budgets from chapter length via a 10-bin compression-ratio model,
// and assembly of extracts (ranked, oracle, sentence-context) under them.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "goldext/aligner.hpp"
#include "goldext/error.hpp"
#include "goldext/textcore.hpp"

namespace goldext {

inline constexpr size_t kQuantileBins = 10;

struct QuantileBin {
  size_t min_wc = 0;
  size_t max_wc = 0;
  double mean_cr = 1.0;
};

struct QuantileModel {
  std::vector<QuantileBin> bins;
  std::string fitted_on;

  /// Structural problems that do not stop the model from being used:
  /// overlapping or gapped ranges, decreasing compression ratios.
  std::vector<std::string> warnings() const {
    std::vector<std::string> out;
    for (size_t i = 1; i < bins.size(); ++i) {
      const auto& a = bins[i - 1];
      const auto& b = bins[i];
      if (b.min_wc <= a.max_wc) {
        out.push_back("bins " + std::to_string(i - 1) + " and " + std::to_string(i) + " overlap");
      } else if (b.min_wc != a.max_wc + 1) {
        out.push_back("gap between bins " + std::to_string(i - 1) + " and " + std::to_string(i));
      }
      if (b.mean_cr < a.mean_cr) {
        out.push_back("mean compression ratio decreases at bin " + std::to_string(i));
      }
    }
    return out;
  }
};

/// Rejects models that cannot produce budgets.
inline void validate(const QuantileModel& model) {
  if (model.bins.size() != kQuantileBins) {
    throw Error(ErrorCode::kFormat, "quantile model needs exactly 10 bins, got " + std::to_string(model.bins.size()));
  }
  for (size_t i = 0; i < model.bins.size(); ++i) {
    const auto& b = model.bins[i];
    if (b.max_wc < b.min_wc) throw Error(ErrorCode::kFormat, "bin " + std::to_string(i) + " has max < min");
    if (!(b.mean_cr > 0.0) || !std::isfinite(b.mean_cr)) {
      throw Error(ErrorCode::kFormat, "bin " + std::to_string(i) + " has non-positive compression ratio");
    }
    if (i > 0 && b.min_wc < model.bins[i - 1].min_wc) {
      throw Error(ErrorCode::kFormat, "bins are not in increasing order at " + std::to_string(i));
    }
  }
}

/// The fitted train-split table shipped as the default model, verbatim
/// (including the 2,579 lower bound of bin 5, which overlaps bin 4).
inline QuantileModel default_quantile_model() {
  QuantileModel m;
  m.fitted_on = "novel-chapter train split (bundled table)";
  m.bins = {
      {44, 1232, 6.67},     {1233, 1711, 9.09},   {1712, 2174, 9.09},  {2175, 2758, 10.00},
      {2579, 3361, 11.11},  {3362, 4165, 12.5},   {4166, 5374, 14.29}, {5375, 7762, 14.29},
      {7763, 13028, 16.67}, {13029, 70436, 20.0},
  };
  return m;
}

/// Equal-frequency bins over pairs ranked by chapter word count; the first
/// n % 10 bins take one extra pair.
inline QuantileModel fit_quantiles(std::vector<std::pair<size_t, size_t>> pairs, std::string fitted_on = {}) {
  if (pairs.size() < kQuantileBins) {
    throw Error(ErrorCode::kInsufficientData,
                "need at least 10 chapter/summary pairs, got " + std::to_string(pairs.size()));
  }
  for (const auto& [cwc, swc] : pairs) {
    if (cwc == 0 || swc == 0) throw Error(ErrorCode::kInvalidArg, "word counts must be positive");
  }
  std::sort(pairs.begin(), pairs.end());
  const size_t base = pairs.size() / kQuantileBins;
  const size_t extra = pairs.size() % kQuantileBins;
  QuantileModel m;
  m.fitted_on = std::move(fitted_on);
  size_t pos = 0;
  for (size_t b = 0; b < kQuantileBins; ++b) {
    size_t n = base + (b < extra ? 1 : 0);
    QuantileBin bin;
    bin.min_wc = pairs[pos].first;
    bin.max_wc = pairs[pos + n - 1].first;
    double sum = 0.0;
    for (size_t i = pos; i < pos + n; ++i) {
      sum += static_cast<double>(pairs[i].first) / static_cast<double>(pairs[i].second);
    }
    bin.mean_cr = sum / static_cast<double>(n);
    m.bins.push_back(bin);
    pos += n;
  }
  return m;
}

struct ExtractBudget {
  size_t target_words = 1;
  size_t bin_index = 0;
  size_t chapter_wc = 0;
};

/// First bin whose range holds the count; counts falling in a gap use the
/// bin below, and counts outside the table clamp to the first/last bin.
inline size_t bin_for(size_t chapter_wc, const QuantileModel& model) {
  for (size_t i = 0; i < model.bins.size(); ++i) {
    if (chapter_wc >= model.bins[i].min_wc && chapter_wc <= model.bins[i].max_wc) return i;
  }
  size_t idx = 0;
  for (size_t i = 0; i < model.bins.size(); ++i) {
    if (model.bins[i].min_wc <= chapter_wc) idx = i;
  }
  return idx;
}

/// round-half-up(chapter_wc / mean_cr), at least one word.
inline ExtractBudget target_length(size_t chapter_wc, const QuantileModel& model) {
  validate(model);
  if (chapter_wc == 0) throw Error(ErrorCode::kInvalidArg, "chapter word count must be >= 1");
  ExtractBudget b;
  b.chapter_wc = chapter_wc;
  b.bin_index = bin_for(chapter_wc, model);
  double raw = static_cast<double>(chapter_wc) / model.bins[b.bin_index].mean_cr;
  b.target_words = std::max<size_t>(1, static_cast<size_t>(std::floor(raw + 0.5)));
  return b;
}

/// TSV rows: bin_index min_wc max_wc mean_cr (1-based bins, '#' comments).
inline QuantileModel read_quantile_model(std::istream& in, const std::string& name = "<quantiles>") {
  QuantileModel m;
  m.fitted_on = name;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    std::istringstream row(t);
    std::string idx;
    QuantileBin bin;
    if (!(row >> idx >> bin.min_wc >> bin.max_wc >> bin.mean_cr)) {
      if (m.bins.empty() && lineno == 1 && t.find("bin") != std::string::npos) continue;  // header
      throw Error(ErrorCode::kFormat, name + ":" + std::to_string(lineno) + ": expected 'bin min_wc max_wc mean_cr'");
    }
    m.bins.push_back(bin);
  }
  validate(m);
  return m;
}

inline QuantileModel read_quantile_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read quantile model '" + path + "'");
  return read_quantile_model(in, path);
}

inline void write_quantile_model(std::ostream& out, const QuantileModel& m) {
  for (size_t i = 0; i < m.bins.size(); ++i) {
    std::ostringstream cr;
    cr.precision(12);
    cr << m.bins[i].mean_cr;
    out << (i + 1) << '\t' << m.bins[i].min_wc << '\t' << m.bins[i].max_wc << '\t' << cr.str() << '\n';
  }
}

namespace budget_detail {

inline Document restore_chapter_order(const Document& chapter, const std::set<std::string>& keep) {
  Document out;
  out.doc_id = chapter.doc_id;
  out.role = DocRole::kExtract;
  out.source_label = chapter.source_label;
  out.chapter_id = chapter.doc_id;
  for (const auto& seg : chapter.segments) {
    if (keep.contains(seg.id)) out.segments.push_back(seg);
  }
  return out;
}

}  // namespace budget_detail

/// Takes segments in rank order until the budget is met; the segment that
/// crosses the budget is kept whole. Output is in chapter order.
inline Document assemble_extract(const Document& chapter, std::span<const std::string> ranked_ids,
                                 const ExtractBudget& budget) {
  if (ranked_ids.empty()) throw Error(ErrorCode::kEmptyRanking, "nothing to extract from an empty ranking");
  std::map<std::string, const Segment*> by_id;
  for (const auto& seg : chapter.segments) by_id.emplace(seg.id, &seg);
  std::set<std::string> keep;
  size_t words = 0;
  for (const auto& id : ranked_ids) {
    if (words >= budget.target_words) break;
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kInconsistentInput, "ranked id '" + id + "' is not in chapter '" + chapter.doc_id + "'");
    }
    if (!keep.insert(id).second) {
      throw Error(ErrorCode::kInvalidArg, "ranked id '" + id + "' appears twice");
    }
    words += word_count(*it->second);
  }
  return budget_detail::restore_chapter_order(chapter, keep);
}

/// One chapter segment per aligned summary segment, deduplicated, cut to the
/// budget by descending alignment score. May fall short of the budget.
inline Document oracle_extract(const Document& chapter, const AlignmentResult& alignment, const ExtractBudget& budget) {
  if (!is_sentence_level(alignment.method)) {
    throw Error(ErrorCode::kWrongAlignmentKind, "oracle extracts need a sentence-level alignment");
  }
  std::vector<const AlignmentPair*> order;
  for (const auto& p : alignment.pairs) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(), [](const AlignmentPair* a, const AlignmentPair* b) {
    return a->score > b->score;
  });
  std::vector<std::string> ranked;
  std::set<std::string> seen;
  for (const auto* p : order) {
    if (seen.insert(p->chapter_segment_id).second) ranked.push_back(p->chapter_segment_id);
  }
  if (ranked.empty()) return budget_detail::restore_chapter_order(chapter, {});
  return assemble_extract(chapter, ranked, budget);
}

inline Document oracle_extract(const Document& chapter, const Document& /*summary*/, const AlignmentResult& alignment,
                               const ExtractBudget& budget) {
  return oracle_extract(chapter, alignment, budget);
}

/// A chapter sentence shown in full with the extracted constituents marked.
struct ContextSentence {
  Segment sentence;
  // Half-open token ranges within the sentence, in order.
  std::vector<std::pair<size_t, size_t>> marked;
};

struct ContextExtract {
  std::string doc_id;
  std::vector<ContextSentence> sentences;

  Document as_document() const {
    Document d;
    d.doc_id = doc_id;
    d.role = DocRole::kExtract;
    for (const auto& s : sentences) d.segments.push_back(s.sentence);
    return d;
  }
};

/// Swaps every extracted constituent for its containing sentence.
inline ContextExtract context_expand(const Document& extract, const Document& chapter_sentences) {
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < chapter_sentences.segments.size(); ++i) index.emplace(chapter_sentences.segments[i].id, i);
  std::map<size_t, std::vector<std::pair<size_t, size_t>>> marks;
  for (const auto& seg : extract.segments) {
    auto it = index.find(seg.source_sentence_id);
    if (it == index.end()) {
      throw Error(ErrorCode::kInconsistentInput,
                  "segment '" + seg.id + "' refers to unknown sentence '" + seg.source_sentence_id + "'");
    }
    const Segment& sentence = chapter_sentences.segments[it->second];
    size_t begin = seg.kind == SegmentKind::kSentence ? 0 : seg.sentence_offset;
    size_t end = seg.kind == SegmentKind::kSentence ? sentence.tokens.size() : begin + seg.tokens.size();
    if (end > sentence.tokens.size()) {
      throw Error(ErrorCode::kInconsistentInput, "segment '" + seg.id + "' runs past its sentence");
    }
    marks[it->second].emplace_back(begin, end);
  }
  ContextExtract out;
  out.doc_id = extract.doc_id;
  for (auto& [i, ranges] : marks) {
    std::sort(ranges.begin(), ranges.end());
    ranges.erase(std::unique(ranges.begin(), ranges.end()), ranges.end());
    out.sentences.push_back({chapter_sentences.segments[i], std::move(ranges)});
  }
  return out;
}

/// Plain-text rendering: pieces separated by " | ", extracted pieces in
/// square brackets, unextracted context bare.
inline std::string render(const ContextSentence& cs) {
  std::vector<std::string> pieces;
  auto text_of = [&](size_t b, size_t e) {
    std::string s;
    for (size_t i = b; i < e; ++i) {
      if (!s.empty()) s += ' ';
      s += cs.sentence.tokens[i].surface;
    }
    return s;
  };
  size_t pos = 0;
  for (const auto& [b, e] : cs.marked) {
    if (b > pos) pieces.push_back(text_of(pos, b));
    pieces.push_back("[" + text_of(b, e) + "]");
    pos = e;
  }
  if (pos < cs.sentence.tokens.size()) pieces.push_back(text_of(pos, cs.sentence.tokens.size()));
  std::string out;
  for (const auto& p : pieces) {
    if (!out.empty()) out += " | ";
    out += p;
  }
  return out;
}

inline std::string render(const ContextExtract& ce) {
  std::string out;
  for (const auto& s : ce.sentences) {
    out += render(s);
    out += '\n';
  }
  return out;
}

}  // namespace goldext
