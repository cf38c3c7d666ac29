#pragma once

// Subcommand implementations behind the goldext binary. Each command takes a
// RunConfig, logs to the given stream and returns a process exit code.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "goldext/aligner.hpp"
#include "goldext/budgeter.hpp"
#include "goldext/corpus.hpp"
#include "goldext/error.hpp"
#include "goldext/io.hpp"
#include "goldext/segmenter.hpp"
#include "goldext/simmetrics.hpp"
#include "goldext/textcore.hpp"
#include "goldext/weighting.hpp"

namespace goldext {

inline constexpr int kExitOk = 0;
inline constexpr int kExitProcessing = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags or unusable input; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class SegmentMode { kSentence, kConstituent };

struct RunConfig {
  std::string subcommand;
  std::string input;       // document JSONL (chapters + reference summaries)
  std::string manifest;    // corpus manifest JSONL
  std::string alignments;  // alignment JSONL (extract)
  std::string generated;   // generated-summary JSONL (score)
  std::string output;      // file, or directory for pipeline
  std::string removed;     // filter: removed-pairs TSV
  std::string report;      // align: per-pair report TSV
  std::string metric = "r-wtd";
  std::string method = "stable";
  std::string segments = "sentence";
  std::string score_metrics = "r1,r2,rl,meteor";
  std::string label_source;
  double alpha = kDefaultAlpha;
  size_t min_len = kDefaultMinConstituentWords;
  std::optional<double> min_score;
  std::string trees;
  std::string vectors;
  std::string stopwords;
  std::string synonyms;
  std::string quantiles;
  size_t jobs = 1;
  uint64_t seed = 0;
  bool pretokenized = true;
};

/// A chapter with every reference summary that points at it, in input order.
struct ChapterGroup {
  Document chapter;
  std::vector<Document> summaries;
};

namespace cmd_detail {

class Log {
 public:
  explicit Log(std::ostream& out) : out_(out) {}
  void line(const std::string& s) {
    std::lock_guard<std::mutex> lock(mu_);
    out_ << "goldext: " << s << '\n';
  }

 private:
  std::ostream& out_;
  std::mutex mu_;
};

template <class T>
struct Outcome {
  std::optional<T> value;
  std::string error;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Results land in
/// input order; an exception from fn(i) is stored in slot i.
template <class T, class F>
std::vector<Outcome<T>> parallel_map(size_t n, size_t jobs, F fn) {
  std::vector<Outcome<T>> out(n);
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < n; i = next++) {
      try {
        out[i].value.emplace(fn(i));
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  jobs = std::max<size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    worker();
    return out;
  }
  std::vector<std::thread> threads;
  for (size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return out;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = detail::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

/// Loading failures are input problems, reported as usage errors.
template <class F>
auto load_or_usage(F fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    throw UsageError(e.what());
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(e.what());
  }
}

inline const StopwordSet& stopword_set(const RunConfig& cfg, std::shared_ptr<const StopwordSet>& holder) {
  if (cfg.stopwords.empty()) return default_stopwords();
  if (!holder) holder = std::make_shared<StopwordSet>(load_or_usage([&] { return load_stopwords(cfg.stopwords); }));
  return *holder;
}

/// Summaries attach to the chapter named by their chapter_id, or to the
/// only chapter when the file holds exactly one.
inline std::vector<ChapterGroup> group_documents(std::vector<Document> docs) {
  std::vector<ChapterGroup> groups;
  std::map<std::string, size_t> index;
  for (auto& d : docs) {
    if (d.role != DocRole::kChapter) continue;
    if (!index.emplace(d.doc_id, groups.size()).second) {
      throw Error(ErrorCode::kFormat, "duplicate chapter id '" + d.doc_id + "'");
    }
    groups.push_back({std::move(d), {}});
  }
  for (auto& d : docs) {
    if (d.role != DocRole::kReferenceSummary) continue;
    std::string target;
    if (d.chapter_id) {
      target = *d.chapter_id;
    } else if (groups.size() == 1) {
      target = groups.front().chapter.doc_id;
    } else {
      throw Error(ErrorCode::kFormat, "summary '" + d.doc_id + "' has no chapter_id");
    }
    auto it = index.find(target);
    if (it == index.end()) {
      throw Error(ErrorCode::kFormat, "summary '" + d.doc_id + "' refers to unknown chapter '" + target + "'");
    }
    groups[it->second].summaries.push_back(std::move(d));
  }
  return groups;
}

/// Chapter groups from --input or --manifest (manifest pairs sharing a
/// chapter file form one group).
inline std::vector<ChapterGroup> load_groups(const RunConfig& cfg, const StopwordSet& stopwords) {
  if (!cfg.input.empty() && !cfg.manifest.empty()) throw UsageError("give either --input or --manifest, not both");
  if (cfg.input.empty() && cfg.manifest.empty()) throw UsageError("missing --input or --manifest");
  std::vector<ChapterGroup> groups;
  if (!cfg.input.empty()) {
    groups = load_or_usage(
        [&] { return group_documents(read_documents_file(cfg.input, cfg.pretokenized, stopwords)); });
  } else {
    auto pairs = load_or_usage([&] { return load_manifest(cfg.manifest, cfg.pretokenized); });
    std::map<std::string, size_t> index;
    for (auto& p : pairs) {
      auto [it, fresh] = index.emplace(p.chapter_file, groups.size());
      if (fresh) groups.push_back({p.chapter, {}});
      groups[it->second].summaries.push_back(std::move(p.summary));
    }
  }
  if (groups.empty()) throw UsageError("no chapters in input");
  return groups;
}

inline std::vector<CorpusPair> load_pairs(const RunConfig& cfg) {
  if (cfg.manifest.empty()) throw UsageError("missing --manifest");
  auto pairs = load_or_usage([&] { return load_manifest(cfg.manifest, cfg.pretokenized); });
  if (pairs.empty()) throw UsageError("manifest '" + cfg.manifest + "' lists no pairs");
  return pairs;
}

struct Resources {
  std::shared_ptr<const SynonymLexicon> synonyms;
  std::shared_ptr<const SegmentVectors> vectors;
  std::optional<std::vector<ParseTree>> unkeyed_trees;
  std::map<std::string, ParseTree> keyed_trees;
};

/// Trees file: one bracketed tree per line, optionally prefixed by
/// "<sentence id>\t". Unprefixed trees are consumed in document order.
inline void load_trees(const std::string& path, Resources& res) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read trees file '" + path + "'");
  std::string line;
  size_t lineno = 0;
  std::vector<ParseTree> unkeyed;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      auto tab = t.find('\t');
      if (tab != std::string::npos && t.front() != '(') {
        res.keyed_trees.insert_or_assign(detail::trim(t.substr(0, tab)), parse_bracketed(t.substr(tab + 1)));
      } else {
        unkeyed.push_back(parse_bracketed(t));
      }
    } catch (const Error& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  res.unkeyed_trees = std::move(unkeyed);
}

inline TreeMap tree_map_for(const std::vector<ChapterGroup>& groups, const Resources& res) {
  TreeMap map(res.keyed_trees.begin(), res.keyed_trees.end());
  if (res.unkeyed_trees) {
    size_t k = 0;
    for (const auto& g : groups) {
      for (const auto& s : g.chapter.segments) {
        if (k >= res.unkeyed_trees->size()) break;
        if (!map.contains(s.id)) map.emplace(s.id, (*res.unkeyed_trees)[k++]);
      }
    }
  }
  return map;
}

inline SegmentMode segment_mode(const RunConfig& cfg) {
  if (cfg.segments == "sentence") return SegmentMode::kSentence;
  if (cfg.segments == "constituent") return SegmentMode::kConstituent;
  throw UsageError("--segments must be sentence or constituent");
}

/// Flag checks that must pass before any work starts.
inline MetricId checked_metric(const RunConfig& cfg) {
  MetricId id;
  try {
    id = parse_metric(cfg.metric);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (id == MetricId::kCosine && cfg.vectors.empty()) throw UsageError("--metric cosine needs --vectors");
  if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) throw UsageError("--alpha must be positive");
  return id;
}

inline AlignMethod checked_method(const RunConfig& cfg, MetricId metric) {
  AlignMethod m;
  try {
    m = parse_method(cfg.method);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (!is_sentence_level(m) && metric == MetricId::kCosine) {
    throw UsageError("--method " + cfg.method + " needs a text metric, not cosine");
  }
  return m;
}

inline Resources load_resources(const RunConfig& cfg) {
  Resources res;
  if (!cfg.synonyms.empty()) {
    res.synonyms = std::make_shared<SynonymLexicon>(load_or_usage([&] { return SynonymLexicon::load(cfg.synonyms); }));
  }
  if (!cfg.vectors.empty()) {
    res.vectors = std::make_shared<SegmentVectors>(load_or_usage([&] { return SegmentVectors::load(cfg.vectors); }));
  }
  if (!cfg.trees.empty()) load_trees(cfg.trees, res);
  return res;
}

/// Metric configuration for one chapter; weighted metrics get a SIF table
/// estimated from that chapter.
inline MetricConfig metric_config(MetricId id, const RunConfig& cfg, const Resources& res, const Document& chapter) {
  MetricConfig mc = default_config(id);
  mc.synonyms = res.synonyms;
  mc.vectors = res.vectors;
  if (res.synonyms) mc.matchers.push_back(MeteorMatcher::kSynonym);
  if (is_weighted(id) || id == MetricId::kRM) {
    mc.weight_table = std::make_shared<WeightTable>(build_weight_table(chapter, cfg.alpha));
  }
  return mc;
}

inline QuantileModel quantile_model(const RunConfig& cfg) {
  if (cfg.quantiles.empty()) return default_quantile_model();
  return load_or_usage([&] { return read_quantile_model_file(cfg.quantiles); });
}

inline Document segmented_chapter(const Document& chapter, SegmentMode mode, const TreeMap& trees, size_t min_len) {
  if (mode == SegmentMode::kSentence) return chapter;
  return segment_document(chapter, trees, min_len);
}

inline std::string to_jsonl(const std::vector<nlohmann::ordered_json>& records) {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

inline void emit(const std::string& path, const std::string& content, std::ostream& fallback) {
  if (path.empty() || path == "-") {
    fallback << content;
  } else {
    write_file_atomic(path, content);
  }
}

inline double mean_pair_score(const AlignmentResult& r) {
  if (!r.pairs.empty()) {
    double s = 0.0;
    for (const auto& p : r.pairs) s += p.score;
    return s / static_cast<double>(r.pairs.size());
  }
  return r.score_trace.empty() ? 0.0 : r.score_trace.back();
}

/// Extract for any alignment kind: oracle ranking for sentence-level
/// methods, the selected set itself for summary-level ones.
inline Document extract_for(const Document& chapter, const AlignmentResult& alignment, const ExtractBudget& budget) {
  if (is_sentence_level(alignment.method)) return oracle_extract(chapter, alignment, budget);
  if (alignment.selected_ids.empty()) {
    Document d;
    d.doc_id = chapter.doc_id;
    d.role = DocRole::kExtract;
    d.chapter_id = chapter.doc_id;
    return d;
  }
  ExtractBudget all = budget;
  all.target_words = word_count(chapter) + 1;
  return assemble_extract(chapter, alignment.selected_ids, all);
}

inline int finish(Log& log, const std::string& what, size_t failures, size_t total) {
  if (failures > 0) {
    log.line(what + ": " + std::to_string(failures) + " of " + std::to_string(total) + " item(s) failed");
    return kExitProcessing;
  }
  return kExitOk;
}

}  // namespace cmd_detail

/// Constituent spans per chapter sentence, as JSONL.
inline int cmd_segment(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cmd_detail::Log log(err);
  if (cfg.trees.empty()) throw UsageError("segment needs --trees");
  std::shared_ptr<const StopwordSet> sw;
  auto groups = cmd_detail::load_groups(cfg, cmd_detail::stopword_set(cfg, sw));
  auto res = cmd_detail::load_resources(cfg);
  TreeMap trees = cmd_detail::tree_map_for(groups, res);
  std::vector<nlohmann::ordered_json> records;
  size_t failures = 0;
  size_t total = 0;
  for (const auto& g : groups) {
    for (const auto& s : g.chapter.segments) {
      ++total;
      try {
        auto it = trees.find(s.id);
        if (it == trees.end()) throw Error(ErrorCode::kMissingParse, "no parse tree for sentence '" + s.id + "'");
        Document one;
        one.doc_id = g.chapter.doc_id;
        one.segments.push_back(s);
        (void)segment_document(one, trees, cfg.min_len);  // token check
        auto spans = constituent_segments(it->second, cfg.min_len, s.id);
        records.push_back(spans_to_json(s.id, spans));
      } catch (const std::exception& e) {
        ++failures;
        log.line("segment " + s.id + ": " + e.what());
      }
    }
  }
  cmd_detail::emit(cfg.output, cmd_detail::to_jsonl(records), out);
  return cmd_detail::finish(log, "segment", failures, total);
}

/// SIF weight tables, one block of rows per chapter.
inline int cmd_weight(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cmd_detail::Log log(err);
  if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) throw UsageError("--alpha must be positive");
  std::shared_ptr<const StopwordSet> sw;
  auto groups = cmd_detail::load_groups(cfg, cmd_detail::stopword_set(cfg, sw));
  auto results = cmd_detail::parallel_map<std::string>(groups.size(), cfg.jobs, [&](size_t i) {
    std::ostringstream table;
    write_weight_tsv(table, build_weight_table(groups[i].chapter, cfg.alpha));
    std::istringstream lines(table.str());
    std::string line;
    std::string block;
    std::getline(lines, line);  // per-table header
    while (std::getline(lines, line)) block += groups[i].chapter.doc_id + '\t' + line + '\n';
    return block;
  });
  std::string content = "chapter_id\tword\tcount\tp\tW\n";
  size_t failures = 0;
  for (size_t i = 0; i < results.size(); ++i) {
    if (results[i].value) {
      content += *results[i].value;
    } else {
      ++failures;
      log.line("weight " + groups[i].chapter.doc_id + ": " + results[i].error);
    }
  }
  cmd_detail::emit(cfg.output, content, out);
  return cmd_detail::finish(log, "weight", failures, groups.size());
}

/// Alignment records for every (chapter, summary) pair plus an optional
/// per-pair report.
inline int cmd_align(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cmd_detail::Log log(err);
  MetricId metric = cmd_detail::checked_metric(cfg);
  AlignMethod method = cmd_detail::checked_method(cfg, metric);
  SegmentMode mode = cmd_detail::segment_mode(cfg);
  if (mode == SegmentMode::kConstituent && cfg.trees.empty()) throw UsageError("constituent mode needs --trees");
  std::shared_ptr<const StopwordSet> sw;
  auto groups = cmd_detail::load_groups(cfg, cmd_detail::stopword_set(cfg, sw));
  auto res = cmd_detail::load_resources(cfg);
  TreeMap trees = cmd_detail::tree_map_for(groups, res);

  struct Job {
    size_t group;
    size_t summary;
  };
  std::vector<Job> jobs;
  for (size_t g = 0; g < groups.size(); ++g) {
    for (size_t s = 0; s < groups[g].summaries.size(); ++s) jobs.push_back({g, s});
  }
  if (jobs.empty()) throw UsageError("no reference summaries in input");

  AlignOptions opts;
  opts.min_score = cfg.min_score;
  auto results = cmd_detail::parallel_map<AlignmentResult>(jobs.size(), cfg.jobs, [&](size_t i) {
    const ChapterGroup& g = groups[jobs[i].group];
    Document chapter = cmd_detail::segmented_chapter(g.chapter, mode, trees, cfg.min_len);
    MetricConfig mc = cmd_detail::metric_config(metric, cfg, res, g.chapter);
    return align(g.summaries[jobs[i].summary], chapter, mc, method, opts);
  });

  std::vector<nlohmann::ordered_json> records;
  std::string report = "chapter_id\tsummary_id\tmethod\tmetric\tmean_score\n";
  size_t failures = 0;
  for (size_t i = 0; i < jobs.size(); ++i) {
    const ChapterGroup& g = groups[jobs[i].group];
    const Document& summary = g.summaries[jobs[i].summary];
    if (!results[i].value) {
      ++failures;
      log.line("align " + g.chapter.doc_id + " / " + summary.doc_id + ": " + results[i].error);
      continue;
    }
    const AlignmentResult& r = *results[i].value;
    Document chapter = cmd_detail::segmented_chapter(g.chapter, mode, trees, cfg.min_len);
    records.push_back(alignment_to_json(r, extract_labels(r, chapter)));
    report += r.chapter_id + '\t' + r.summary_id + '\t' + std::string(method_name(r.method)) + '\t' +
              std::string(metric_name(r.metric)) + '\t' + format_score(cmd_detail::mean_pair_score(r)) + '\n';
    log.line("align " + r.chapter_id + " / " + r.summary_id + ": ok");
  }
  cmd_detail::emit(cfg.output, cmd_detail::to_jsonl(records), out);
  if (!cfg.report.empty()) write_file_atomic(cfg.report, report);
  return cmd_detail::finish(log, "align", failures, jobs.size());
}

/// Target extract length per chapter.
inline int cmd_budget(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cmd_detail::Log log(err);
  QuantileModel model = cmd_detail::quantile_model(cfg);
  for (const auto& w : model.warnings()) log.line("quantiles: " + w);
  std::shared_ptr<const StopwordSet> sw;
  auto groups = cmd_detail::load_groups(cfg, cmd_detail::stopword_set(cfg, sw));
  std::string content = "chapter_id\tchapter_wc\tbin\ttarget_words\n";
  for (const auto& g : groups) {
    ExtractBudget b = target_length(word_count(g.chapter), model);
    content += g.chapter.doc_id + '\t' + std::to_string(b.chapter_wc) + '\t' + std::to_string(b.bin_index + 1) +
               '\t' + std::to_string(b.target_words) + '\n';
  }
  cmd_detail::emit(cfg.output, content, out);
  return kExitOk;
}

/// Oracle extracts from a previously written alignment file.
inline int cmd_extract(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cmd_detail::Log log(err);
  if (cfg.alignments.empty()) throw UsageError("extract needs --alignments");
  SegmentMode mode = cmd_detail::segment_mode(cfg);
  if (mode == SegmentMode::kConstituent && cfg.trees.empty()) throw UsageError("constituent mode needs --trees");
  QuantileModel model = cmd_detail::quantile_model(cfg);
  std::shared_ptr<const StopwordSet> sw;
  auto groups = cmd_detail::load_groups(cfg, cmd_detail::stopword_set(cfg, sw));
  auto res = cmd_detail::load_resources(cfg);
  TreeMap trees = cmd_detail::tree_map_for(groups, res);
  std::vector<AlignmentResult> alignments = cmd_detail::load_or_usage([&] {
    std::vector<AlignmentResult> v;
    std::istringstream in(read_text_file(cfg.alignments));
    std::string line;
    while (std::getline(in, line)) {
      if (!detail::trim(line).empty()) v.push_back(alignment_from_json(nlohmann::json::parse(line)));
    }
    return v;
  });
  if (alignments.empty()) throw UsageError("no alignments in '" + cfg.alignments + "'");
  std::map<std::string, const ChapterGroup*> by_id;
  for (const auto& g : groups) by_id.emplace(g.chapter.doc_id, &g);

  std::vector<nlohmann::ordered_json> records;
  size_t failures = 0;
  for (const auto& a : alignments) {
    try {
      auto it = by_id.find(a.chapter_id);
      if (it == by_id.end()) throw Error(ErrorCode::kInconsistentInput, "unknown chapter '" + a.chapter_id + "'");
      Document chapter = cmd_detail::segmented_chapter(it->second->chapter, mode, trees, cfg.min_len);
      Document ex = cmd_detail::extract_for(chapter, a, target_length(word_count(chapter), model));
      ex.doc_id = a.chapter_id + ":" + a.summary_id;
      auto j = document_to_json(ex);
      j["label_reference"] = a.summary_id;
      records.push_back(std::move(j));
    } catch (const std::exception& e) {
      ++failures;
      log.line("extract " + a.chapter_id + " / " + a.summary_id + ": " + e.what());
    }
  }
  cmd_detail::emit(cfg.output, cmd_detail::to_jsonl(records), out);
  return cmd_detail::finish(log, "extract", failures, alignments.size());
}

/// Generated summaries scored against every reference of their chapter.
inline int cmd_score(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cmd_detail::Log log(err);
  if (cfg.generated.empty()) throw UsageError("score needs --generated");
  std::vector<MetricId> metrics;
  for (const auto& name : cmd_detail::split_list(cfg.score_metrics)) {
    try {
      metrics.push_back(parse_metric(name));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (metrics.back() == MetricId::kCosine) throw UsageError("cosine cannot score whole summaries");
  }
  if (metrics.empty()) throw UsageError("--score-metrics is empty");
  std::shared_ptr<const StopwordSet> sw;
  const StopwordSet& stop = cmd_detail::stopword_set(cfg, sw);
  auto groups = cmd_detail::load_groups(cfg, stop);
  auto res = cmd_detail::load_resources(cfg);
  auto generated = cmd_detail::load_or_usage(
      [&] { return read_documents_file(cfg.generated, cfg.pretokenized, stop); });
  if (generated.empty()) throw UsageError("no generated summaries in '" + cfg.generated + "'");
  std::map<std::string, const ChapterGroup*> by_id;
  for (const auto& g : groups) by_id.emplace(g.chapter.doc_id, &g);

  auto results = cmd_detail::parallel_map<std::string>(generated.size(), cfg.jobs, [&](size_t i) {
    const Document& gen = generated[i];
    const ChapterGroup* g = nullptr;
    if (gen.chapter_id) {
      auto it = by_id.find(*gen.chapter_id);
      if (it != by_id.end()) g = it->second;
    } else if (groups.size() == 1) {
      g = &groups.front();
    }
    if (g == nullptr) throw Error(ErrorCode::kInconsistentInput, "no chapter for '" + gen.doc_id + "'");
    MetricConfig base = cmd_detail::metric_config(MetricId::kRWtd, cfg, res, g->chapter);
    auto scores = score_multi_reference(gen, g->summaries, metrics, base);
    std::ostringstream rows;
    write_score_tsv(rows, scores, false, gen.doc_id);
    return rows.str();
  });
  std::string content = "generated_id\tmetric\treference_id\tP\tR\tF1\n";
  size_t failures = 0;
  for (size_t i = 0; i < results.size(); ++i) {
    if (results[i].value) {
      content += *results[i].value;
    } else {
      ++failures;
      log.line("score " + generated[i].doc_id + ": " + results[i].error);
    }
  }
  cmd_detail::emit(cfg.output, content, out);
  return cmd_detail::finish(log, "score", failures, generated.size());
}

inline int cmd_stats(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  auto pairs = cmd_detail::load_pairs(cfg);
  CorpusStats s = cmd_detail::load_or_usage([&] { return corpus_stats(pairs); });
  std::ostringstream tsv;
  write_stats_tsv(tsv, s);
  cmd_detail::emit(cfg.output, tsv.str(), out);
  return kExitOk;
}

/// Kept pairs as a manifest (with split labels), removed pairs as TSV.
inline int cmd_filter(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  cmd_detail::Log log(err);
  auto pairs = cmd_detail::load_pairs(cfg);
  FilterResult fr = filter_pairs(std::move(pairs));
  if (!fr.kept.empty()) assign_splits(fr.kept, SplitRatios{}, cfg.seed);
  std::vector<nlohmann::ordered_json> records;
  for (const auto& p : fr.kept) records.push_back(manifest_record(p));
  std::string removed = "book_id\tchapter_file\tsummary_file\trule\tdetail\n";
  for (const auto& r : fr.removed) {
    removed += r.pair.book_id + '\t' + r.pair.chapter_file + '\t' + r.pair.summary_file + '\t' +
               std::string(rule_name(r.rule)) + '\t' + r.detail + '\n';
  }
  cmd_detail::emit(cfg.output, cmd_detail::to_jsonl(records), out);
  if (!cfg.removed.empty()) write_file_atomic(cfg.removed, removed);
  log.line("filter: kept " + std::to_string(fr.kept.size()) + ", removed " + std::to_string(fr.removed.size()));
  return kExitOk;
}

inline int cmd_fit_quantiles(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/) {
  auto pairs = cmd_detail::load_pairs(cfg);
  std::vector<std::pair<size_t, size_t>> counts;
  for (const auto& p : pairs) counts.emplace_back(word_count(p.chapter), word_count(p.summary));
  QuantileModel m = cmd_detail::load_or_usage([&] { return fit_quantiles(std::move(counts), cfg.manifest); });
  std::ostringstream tsv;
  write_quantile_model(tsv, m);
  cmd_detail::emit(cfg.output, tsv.str(), out);
  return kExitOk;
}

/// Segment, align against the label reference, budget, extract, score.
/// Writes alignments.jsonl, extracts.jsonl, extracts.txt, budgets.tsv and
/// scores.tsv into the output directory.
inline int cmd_pipeline(const RunConfig& cfg, std::ostream& /*out*/, std::ostream& err) {
  namespace fs = std::filesystem;
  cmd_detail::Log log(err);
  if (cfg.output.empty()) throw UsageError("pipeline needs --output DIR");
  MetricId metric = cmd_detail::checked_metric(cfg);
  AlignMethod method = cmd_detail::checked_method(cfg, metric);
  SegmentMode mode = cmd_detail::segment_mode(cfg);
  if (mode == SegmentMode::kConstituent && cfg.trees.empty()) throw UsageError("constituent mode needs --trees");
  std::vector<MetricId> score_metrics;
  for (const auto& name : cmd_detail::split_list(cfg.score_metrics)) {
    try {
      score_metrics.push_back(parse_metric(name));
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (score_metrics.back() == MetricId::kCosine) throw UsageError("cosine cannot score whole summaries");
  }
  QuantileModel model = cmd_detail::quantile_model(cfg);
  std::shared_ptr<const StopwordSet> sw;
  auto groups = cmd_detail::load_groups(cfg, cmd_detail::stopword_set(cfg, sw));
  auto res = cmd_detail::load_resources(cfg);
  TreeMap trees = cmd_detail::tree_map_for(groups, res);

  struct ChapterOutput {
    nlohmann::ordered_json alignment;
    nlohmann::ordered_json extract;
    std::string text;
    std::string budget_row;
    std::string score_rows;
  };
  auto results = cmd_detail::parallel_map<ChapterOutput>(groups.size(), cfg.jobs, [&](size_t i) {
    const ChapterGroup& g = groups[i];
    if (g.summaries.empty()) throw Error(ErrorCode::kInconsistentInput, "chapter has no reference summaries");
    const Document* label_ref = &g.summaries.front();
    if (!cfg.label_source.empty()) {
      label_ref = nullptr;
      for (const auto& s : g.summaries) {
        if (s.source_label == cfg.label_source) {
          label_ref = &s;
          break;
        }
      }
      if (label_ref == nullptr) {
        throw Error(ErrorCode::kInconsistentInput, "no reference from source '" + cfg.label_source + "'");
      }
    }
    Document chapter = cmd_detail::segmented_chapter(g.chapter, mode, trees, cfg.min_len);
    MetricConfig mc = cmd_detail::metric_config(metric, cfg, res, g.chapter);
    AlignOptions opts;
    opts.min_score = cfg.min_score;
    AlignmentResult r = align(*label_ref, chapter, mc, method, opts);
    ExtractBudget budget = target_length(word_count(g.chapter), model);
    Document ex = cmd_detail::extract_for(chapter, r, budget);
    ex.doc_id = g.chapter.doc_id + ":extract";

    ChapterOutput o;
    o.alignment = alignment_to_json(r, extract_labels(r, chapter));
    o.extract = document_to_json(ex);
    o.extract["label_reference"] = label_ref->doc_id;
    o.text = "# " + g.chapter.doc_id + '\n';
    if (mode == SegmentMode::kConstituent) {
      o.text += render(context_expand(ex, g.chapter));
    } else {
      for (const auto& s : ex.segments) o.text += segment_text(s) + '\n';
    }
    o.budget_row = g.chapter.doc_id + '\t' + label_ref->doc_id + '\t' + std::to_string(budget.chapter_wc) + '\t' +
                   std::to_string(budget.bin_index + 1) + '\t' + std::to_string(budget.target_words) + '\t' +
                   std::to_string(word_count(ex)) + '\n';
    if (!ex.segments.empty()) {
      MetricConfig base = cmd_detail::metric_config(MetricId::kRWtd, cfg, res, g.chapter);
      auto scores = score_multi_reference(ex, g.summaries, score_metrics, base);
      std::ostringstream rows;
      write_score_tsv(rows, scores, false, ex.doc_id);
      o.score_rows = rows.str();
    }
    return o;
  });

  std::vector<nlohmann::ordered_json> alignments;
  std::vector<nlohmann::ordered_json> extracts;
  std::string text;
  std::string budgets = "chapter_id\tlabel_reference\tchapter_wc\tbin\ttarget_words\textract_wc\n";
  std::string scores = "generated_id\tmetric\treference_id\tP\tR\tF1\n";
  size_t failures = 0;
  for (size_t i = 0; i < results.size(); ++i) {
    if (!results[i].value) {
      ++failures;
      log.line("pipeline " + groups[i].chapter.doc_id + ": " + results[i].error);
      continue;
    }
    auto& o = *results[i].value;
    alignments.push_back(std::move(o.alignment));
    extracts.push_back(std::move(o.extract));
    text += o.text;
    budgets += o.budget_row;
    scores += o.score_rows;
    log.line("pipeline " + groups[i].chapter.doc_id + ": ok");
  }
  fs::path dir(cfg.output);
  write_file_atomic(dir / "alignments.jsonl", cmd_detail::to_jsonl(alignments));
  write_file_atomic(dir / "extracts.jsonl", cmd_detail::to_jsonl(extracts));
  write_file_atomic(dir / "extracts.txt", text);
  write_file_atomic(dir / "budgets.tsv", budgets);
  write_file_atomic(dir / "scores.tsv", scores);
  return cmd_detail::finish(log, "pipeline", failures, groups.size());
}

/// Dispatches by subcommand name, translating errors into exit codes.
inline int run_command(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  static const std::map<std::string, std::function<int(const RunConfig&, std::ostream&, std::ostream&)>> kCommands = {
      {"segment", cmd_segment}, {"weight", cmd_weight},   {"align", cmd_align},
      {"budget", cmd_budget},   {"extract", cmd_extract}, {"score", cmd_score},
      {"stats", cmd_stats},     {"filter", cmd_filter},   {"fit-quantiles", cmd_fit_quantiles},
      {"pipeline", cmd_pipeline},
  };
  auto it = kCommands.find(cfg.subcommand);
  if (it == kCommands.end()) {
    err << "goldext: unknown subcommand '" << cfg.subcommand << "'\n";
    return kExitUsage;
  }
  if (cfg.jobs == 0) {
    err << "goldext: --jobs must be at least 1\n";
    return kExitUsage;
  }
  try {
    return it->second(cfg, out, err);
  } catch (const UsageError& e) {
    err << "goldext: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    err << "goldext: " << error_code_name(e.code()) << ": " << e.what() << '\n';
    return kExitProcessing;
  } catch (const std::exception& e) {
    err << "goldext: " << e.what() << '\n';
    return kExitProcessing;
  }
}

}  // namespace goldext
