#pragma once

// Chapter/summary pair corpus: filtering, book-level split assignment,
// vocabulary overlap and length statistics.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "goldext/error.hpp"
#include "goldext/io.hpp"
#include "goldext/simmetrics.hpp"
#include "goldext/textcore.hpp"

namespace goldext {

enum class Split { kTrain, kDev, kTest, kUnassigned };

inline std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
    case Split::kUnassigned: return "unassigned";
  }
  return "unassigned";
}

struct CorpusPair {
  std::string book_id;
  Document chapter;
  Document summary;
  Split split = Split::kUnassigned;
  // Manifest provenance, empty for pairs built in memory.
  std::string chapter_file;
  std::string summary_file;

  std::string source() const { return summary.source_label.value_or("unknown"); }
};

enum class FilterRule { kChapterLength, kCompression };

inline std::string_view rule_name(FilterRule r) {
  return r == FilterRule::kChapterLength ? "length" : "compression";
}

struct FilterOptions {
  size_t max_chapter_sentences = 700;
  double min_compression_ratio = 2.0;
};

struct RemovedPair {
  CorpusPair pair;
  FilterRule rule = FilterRule::kChapterLength;
  std::string detail;
};

struct FilterResult {
  std::vector<CorpusPair> kept;
  std::vector<RemovedPair> removed;
};

inline double compression_ratio(const CorpusPair& p) {
  size_t swc = word_count(p.summary);
  if (swc == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(word_count(p.chapter)) / static_cast<double>(swc);
}

/// Drops pairs whose chapter has more than 700 sentences, then pairs whose
/// compression ratio is below 2.0. Each removal records the rule it hit.
inline FilterResult filter_pairs(std::vector<CorpusPair> pairs, const FilterOptions& opts = {}) {
  FilterResult out;
  for (auto& p : pairs) {
    size_t n_sent = p.chapter.segments.size();
    if (n_sent > opts.max_chapter_sentences) {
      std::string why = std::to_string(n_sent) + " sentences";
      out.removed.push_back({std::move(p), FilterRule::kChapterLength, std::move(why)});
      continue;
    }
    double cr = compression_ratio(p);
    if (cr < opts.min_compression_ratio) {
      std::string why = "compression ratio " + format_score(cr);
      out.removed.push_back({std::move(p), FilterRule::kCompression, std::move(why)});
      continue;
    }
    out.kept.push_back(std::move(p));
  }
  return out;
}

struct SplitRatios {
  double train = 0.8;
  double dev = 0.1;
  double test = 0.1;
};

namespace corpus_detail {

// Unbiased draw in [0, bound) from a standard-specified engine, so split
// assignment is identical across standard library implementations.
inline uint64_t bounded(std::mt19937_64& rng, uint64_t bound) {
  const uint64_t limit = std::numeric_limits<uint64_t>::max() - std::numeric_limits<uint64_t>::max() % bound;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace corpus_detail

/// Shuffles the distinct books with `seed` and deals them out by ratio, so
/// every pair of one book lands in the same split.
inline void assign_splits(std::vector<CorpusPair>& pairs, const SplitRatios& ratios = {}, uint64_t seed = 0) {
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0 || ratios.train + ratios.dev + ratios.test <= 0) {
    throw Error(ErrorCode::kInvalidArg, "split ratios must be non-negative with a positive sum");
  }
  std::set<std::string> unique_books;
  for (const auto& p : pairs) {
    if (p.book_id.empty()) throw Error(ErrorCode::kInvalidArg, "pair without book_id");
    unique_books.insert(p.book_id);
  }
  std::vector<std::string> books(unique_books.begin(), unique_books.end());
  std::mt19937_64 rng(seed);
  for (size_t i = books.size(); i > 1; --i) {
    std::swap(books[i - 1], books[corpus_detail::bounded(rng, i)]);
  }
  const double total = ratios.train + ratios.dev + ratios.test;
  const size_t n = books.size();
  size_t n_train = static_cast<size_t>(std::llround(ratios.train / total * static_cast<double>(n)));
  size_t n_dev = static_cast<size_t>(std::llround(ratios.dev / total * static_cast<double>(n)));
  n_train = std::min(n_train, n);
  n_dev = std::min(n_dev, n - n_train);
  std::map<std::string, Split> assignment;
  for (size_t i = 0; i < n; ++i) {
    assignment[books[i]] = i < n_train ? Split::kTrain : (i < n_train + n_dev ? Split::kDev : Split::kTest);
  }
  for (auto& p : pairs) p.split = assignment.at(p.book_id);
}

struct WordOverlap {
  double summary_coverage = 0.0;  // |Vs ∩ Vc| / |Vs|, the headline value
  double chapter_coverage = 0.0;  // |Vs ∩ Vc| / |Vc|
  double jaccard = 0.0;           // |Vs ∩ Vc| / |Vs ∪ Vc|
};

inline std::set<std::string> vocabulary(const Document& d) {
  std::set<std::string> v;
  for (const auto& s : d.segments) {
    for (const auto& t : s.tokens) {
      if (!t.is_punct) v.insert(t.norm);
    }
  }
  return v;
}

/// Share of lowercased word types shared by summary and chapter.
inline WordOverlap word_overlap(const Document& summary, const Document& chapter) {
  auto vs = vocabulary(summary);
  auto vc = vocabulary(chapter);
  if (vs.empty()) throw Error(ErrorCode::kDegenerateChapter, "summary '" + summary.doc_id + "' has no words");
  if (vc.empty()) throw Error(ErrorCode::kDegenerateChapter, "chapter '" + chapter.doc_id + "' has no words");
  size_t shared = 0;
  for (const auto& w : vs) shared += vc.contains(w) ? 1 : 0;
  size_t uni = vs.size() + vc.size() - shared;
  WordOverlap o;
  o.summary_coverage = static_cast<double>(shared) / static_cast<double>(vs.size());
  o.chapter_coverage = static_cast<double>(shared) / static_cast<double>(vc.size());
  o.jaccard = static_cast<double>(shared) / static_cast<double>(uni);
  return o;
}

struct DescriptiveStats {
  std::string label;
  double mean = 0.0;
  double stdev = 0.0;   // sample (n - 1); 0 for a single value
  double median = 0.0;  // midpoint of the middle two for even counts
  size_t total = 0;
};

inline DescriptiveStats describe(std::string label, std::vector<double> values) {
  DescriptiveStats d;
  d.label = std::move(label);
  d.total = values.size();
  if (values.empty()) return d;
  double sum = 0.0;
  for (double v : values) sum += v;
  d.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - d.mean) * (v - d.mean);
    d.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  std::sort(values.begin(), values.end());
  size_t mid = values.size() / 2;
  d.median = values.size() % 2 == 1 ? values[mid] : (values[mid - 1] + values[mid]) / 2.0;
  return d;
}

struct CorpusStats {
  std::vector<DescriptiveStats> per_source;  // summary word counts by source
  DescriptiveStats all_sources;
  DescriptiveStats chapter_text;
  DescriptiveStats overlap_summary;
  DescriptiveStats overlap_chapter;
  DescriptiveStats overlap_jaccard;
  DescriptiveStats compression;
};

inline CorpusStats corpus_stats(const std::vector<CorpusPair>& pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kInvalidArg, "no pairs to describe");
  std::map<std::string, std::vector<double>> by_source;
  std::vector<double> all;
  std::vector<double> chapters;
  std::vector<double> ov_s;
  std::vector<double> ov_c;
  std::vector<double> ov_j;
  std::vector<double> crs;
  for (const auto& p : pairs) {
    double swc = static_cast<double>(word_count(p.summary));
    by_source[p.source()].push_back(swc);
    all.push_back(swc);
    chapters.push_back(static_cast<double>(word_count(p.chapter)));
    WordOverlap o = word_overlap(p.summary, p.chapter);
    ov_s.push_back(o.summary_coverage);
    ov_c.push_back(o.chapter_coverage);
    ov_j.push_back(o.jaccard);
    crs.push_back(compression_ratio(p));
  }
  CorpusStats s;
  for (auto& [src, v] : by_source) s.per_source.push_back(describe(src, std::move(v)));
  s.all_sources = describe("All Sources", std::move(all));
  s.chapter_text = describe("Chapter Text", std::move(chapters));
  s.overlap_summary = describe("word_overlap:summary", std::move(ov_s));
  s.overlap_chapter = describe("word_overlap:chapter", std::move(ov_c));
  s.overlap_jaccard = describe("word_overlap:jaccard", std::move(ov_j));
  s.compression = describe("compression_ratio", std::move(crs));
  return s;
}

inline void write_stats_tsv(std::ostream& out, const CorpusStats& s) {
  out << "source\tmean\tstdev\tmedian\ttotal\n";
  auto row = [&](const DescriptiveStats& d) {
    out << d.label << '\t' << format_score(d.mean) << '\t' << format_score(d.stdev) << '\t' << format_score(d.median)
        << '\t' << d.total << '\n';
  };
  for (const auto& d : s.per_source) row(d);
  row(s.all_sources);
  row(s.chapter_text);
  row(s.overlap_summary);
  row(s.overlap_chapter);
  row(s.overlap_jaccard);
  row(s.compression);
}

/// Manifest records {"book_id", "chapter_file", "summary_file", "source"};
/// each file holds a document JSONL whose first record is used. Relative
/// paths resolve against the manifest's directory.
inline std::vector<CorpusPair> load_manifest(const std::string& path, bool pretokenized = true) {
  namespace fs = std::filesystem;
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read manifest '" + path + "'");
  const fs::path base = fs::path(path).parent_path();
  std::map<std::string, Document> cache;
  auto load_doc = [&](const std::string& rel) -> const Document& {
    auto it = cache.find(rel);
    if (it != cache.end()) return it->second;
    fs::path p = fs::path(rel).is_absolute() ? fs::path(rel) : base / rel;
    auto docs = read_documents_file(p.string(), pretokenized);
    if (docs.empty()) throw Error(ErrorCode::kFormat, "no document in '" + p.string() + "'");
    return cache.emplace(rel, std::move(docs.front())).first->second;
  };
  std::vector<CorpusPair> pairs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      CorpusPair p;
      p.book_id = j.at("book_id").get<std::string>();
      p.chapter_file = j.at("chapter_file").get<std::string>();
      p.summary_file = j.at("summary_file").get<std::string>();
      p.chapter = load_doc(p.chapter_file);
      p.summary = load_doc(p.summary_file);
      if (j.contains("source") && !j.at("source").is_null()) p.summary.source_label = j.at("source").get<std::string>();
      if (p.chapter.role != DocRole::kChapter || p.summary.role != DocRole::kReferenceSummary) {
        throw Error(ErrorCode::kFormat, "chapter/summary roles do not match the manifest");
      }
      pairs.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kFormat, path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pairs;
}

inline nlohmann::ordered_json manifest_record(const CorpusPair& p) {
  nlohmann::ordered_json j;
  j["book_id"] = p.book_id;
  j["chapter_file"] = p.chapter_file;
  j["summary_file"] = p.summary_file;
  j["source"] = p.source();
  if (p.split != Split::kUnassigned) j["split"] = split_name(p.split);
  return j;
}

}  // namespace goldext
