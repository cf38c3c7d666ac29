#pragma once

// Segment-pair similarity: plain and SIF-weighted ROUGE-1/2/L, a METEOR
// variant with exact/stem/synonym stages, the R-wtd / RM / RM-wtd
// composites and cosine similarity over externally computed vectors.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "goldext/error.hpp"
#include "goldext/textcore.hpp"
#include "goldext/weighting.hpp"

namespace goldext {

struct ScoreTriple {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when either side had nothing to score.
  bool degenerate = false;

  static ScoreTriple from_pr(double p, double r) {
    ScoreTriple s;
    s.precision = p;
    s.recall = r;
    s.f1 = (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    return s;
  }
  static ScoreTriple degenerate_zero() {
    ScoreTriple s;
    s.degenerate = true;
    return s;
  }
};

enum class Component { kPrecision, kRecall, kF1 };

inline double component_of(const ScoreTriple& s, Component c) {
  switch (c) {
    case Component::kPrecision: return s.precision;
    case Component::kRecall: return s.recall;
    case Component::kF1: return s.f1;
  }
  return s.f1;
}

enum class MetricId { kR1, kR2, kRL, kR1StopStem, kRWtd, kRM, kRMWtd, kMeteor, kCosine };

inline std::string_view metric_name(MetricId id) {
  switch (id) {
    case MetricId::kR1: return "r1";
    case MetricId::kR2: return "r2";
    case MetricId::kRL: return "rl";
    case MetricId::kR1StopStem: return "r1-stopstem";
    case MetricId::kRWtd: return "r-wtd";
    case MetricId::kRM: return "rm";
    case MetricId::kRMWtd: return "rm-wtd";
    case MetricId::kMeteor: return "meteor";
    case MetricId::kCosine: return "cosine";
  }
  return "?";
}

inline MetricId parse_metric(std::string_view name) {
  for (MetricId id : {MetricId::kR1, MetricId::kR2, MetricId::kRL, MetricId::kR1StopStem, MetricId::kRWtd,
                      MetricId::kRM, MetricId::kRMWtd, MetricId::kMeteor, MetricId::kCosine}) {
    if (metric_name(id) == name) return id;
  }
  throw Error(ErrorCode::kInvalidArg, "unknown metric '" + std::string(name) + "'");
}

inline bool is_weighted(MetricId id) { return id == MetricId::kRWtd || id == MetricId::kRMWtd; }

enum class MeteorMatcher { kExact, kStem, kSynonym };

/// Symmetric word-synonym relation loaded from `word<TAB>synonym` lines.
class SynonymLexicon {
 public:
  void add(const std::string& a, const std::string& b) {
    if (a == b) return;
    links_[a].insert(b);
    links_[b].insert(a);
  }
  bool related(const std::string& a, const std::string& b) const {
    auto it = links_.find(a);
    return it != links_.end() && it->second.contains(b);
  }
  size_t size() const { return links_.size(); }

  static SynonymLexicon load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot read synonym lexicon '" + path + "'");
    SynonymLexicon lex;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string t = detail::trim(line);
      if (t.empty() || t.front() == '#') continue;
      auto tab = t.find('\t');
      if (tab == std::string::npos) {
        throw Error(ErrorCode::kFormat, path + ":" + std::to_string(lineno) + ": expected word<TAB>synonym");
      }
      lex.add(detail::to_lower(detail::trim(t.substr(0, tab))), detail::to_lower(detail::trim(t.substr(tab + 1))));
    }
    return lex;
  }

 private:
  std::map<std::string, std::set<std::string>> links_;
};

/// Segment id -> fixed-dimension vector.
class SegmentVectors {
 public:
  void add(const std::string& id, std::vector<double> v) {
    if (v.empty()) throw Error(ErrorCode::kFormat, "empty vector for '" + id + "'");
    for (double x : v) {
      if (!std::isfinite(x)) throw Error(ErrorCode::kFormat, "non-finite component in vector for '" + id + "'");
    }
    if (dim_ == 0) dim_ = v.size();
    if (v.size() != dim_) {
      throw Error(ErrorCode::kFormat, "vector for '" + id + "' has dimension " + std::to_string(v.size()) +
                                          ", expected " + std::to_string(dim_));
    }
    vecs_[id] = std::move(v);
  }
  const std::vector<double>* find(const std::string& id) const {
    auto it = vecs_.find(id);
    return it == vecs_.end() ? nullptr : &it->second;
  }
  size_t dim() const { return dim_; }
  size_t size() const { return vecs_.size(); }

  /// JSONL records {"segment_id": str, "vector": [float, ...]}.
  static SegmentVectors load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot read vectors file '" + path + "'");
    SegmentVectors out;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (detail::trim(line).empty()) continue;
      try {
        auto j = nlohmann::json::parse(line);
        out.add(j.at("segment_id").get<std::string>(), j.at("vector").get<std::vector<double>>());
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kFormat, path + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return out;
  }

 private:
  size_t dim_ = 0;
  std::map<std::string, std::vector<double>> vecs_;
};

struct MetricConfig {
  MetricId metric = MetricId::kRWtd;
  std::shared_ptr<const WeightTable> weight_table;
  // Tokens whose norm is in this set are dropped before scoring.
  std::shared_ptr<const StopwordSet> stopwords;
  bool use_stems = true;
  Component component = Component::kF1;
  std::vector<MeteorMatcher> matchers = {MeteorMatcher::kExact, MeteorMatcher::kStem};
  std::shared_ptr<const SynonymLexicon> synonyms;
  std::shared_ptr<const SegmentVectors> vectors;
};

/// Defaults per metric: the plain ROUGE baselines match on surface forms;
/// R-1 stop/stem removes the bundled stop words and stems; everything
/// built around R-wtd stems.
inline MetricConfig default_config(MetricId id) {
  MetricConfig cfg;
  cfg.metric = id;
  switch (id) {
    case MetricId::kR1:
    case MetricId::kR2:
    case MetricId::kRL:
      cfg.use_stems = false;
      break;
    case MetricId::kR1StopStem:
      cfg.use_stems = true;
      cfg.stopwords = std::make_shared<StopwordSet>(default_stopwords());
      break;
    default:
      cfg.use_stems = true;
      break;
  }
  return cfg;
}

/// Eligible (non-punctuation, non-stop) words of a text unit, in order.
struct PreparedText {
  std::string id;
  std::vector<std::string> norms;
  std::vector<std::string> stems;

  size_t size() const { return norms.size(); }
  bool empty() const { return norms.empty(); }
  const std::vector<std::string>& keys(bool use_stems) const { return use_stems ? stems : norms; }

  void append(const PreparedText& other) {
    norms.insert(norms.end(), other.norms.begin(), other.norms.end());
    stems.insert(stems.end(), other.stems.begin(), other.stems.end());
  }
};

inline PreparedText prepare(std::span<const Token> tokens, std::string id, const StopwordSet* stopwords) {
  PreparedText p;
  p.id = std::move(id);
  for (const auto& t : tokens) {
    if (t.is_punct) continue;
    if (stopwords != nullptr && stopwords->contains(t.norm)) continue;
    p.norms.push_back(t.norm);
    p.stems.push_back(t.stem);
  }
  return p;
}

inline PreparedText prepare(const Segment& seg, const StopwordSet* stopwords = nullptr) {
  return prepare(seg.tokens, seg.id, stopwords);
}

inline PreparedText prepare(const Segment& seg, const MetricConfig& cfg) {
  return prepare(seg, cfg.stopwords.get());
}

/// All segments of a document concatenated into one unit.
inline PreparedText prepare(const Document& doc, const MetricConfig& cfg) {
  PreparedText p;
  p.id = doc.doc_id;
  for (const auto& seg : doc.segments) p.append(prepare(seg, cfg));
  return p;
}

namespace detail {

inline double weighted_count(const NGram& g, size_t count, const WeightTable* table) {
  return table == nullptr ? static_cast<double>(count) : static_cast<double>(count) * gram_weight(g, *table);
}

inline double weighted_length(std::span<const std::string> keys, const WeightTable* table) {
  if (table == nullptr) return static_cast<double>(keys.size());
  double sum = 0.0;
  for (const auto& k : keys) sum += table->weight(k);
  return sum;
}

// Weighted metrics match on the table's key mode so every matched gram has
// one well-defined weight.
inline bool match_on_stems(bool use_stems, const WeightTable* table) {
  return table == nullptr ? use_stems : table->key_mode() == KeyMode::kStem;
}

}  // namespace detail

/// ROUGE-N over prepared texts; `table` switches on SIF weighting.
inline ScoreTriple rouge_n(const PreparedText& cand, const PreparedText& ref, size_t n, bool use_stems,
                           const WeightTable* table = nullptr) {
  if (n < 1) throw Error(ErrorCode::kInvalidArg, "ROUGE-N needs n >= 1");
  const bool stems = detail::match_on_stems(use_stems, table);
  NGramCounts cand_grams = ngrams(std::span<const std::string>(cand.keys(stems)), n);
  NGramCounts ref_grams = ngrams(std::span<const std::string>(ref.keys(stems)), n);
  if (cand_grams.empty() || ref_grams.empty()) return ScoreTriple::degenerate_zero();

  double cand_total = 0.0;
  for (const auto& [g, c] : cand_grams) cand_total += detail::weighted_count(g, c, table);
  double ref_total = 0.0;
  double matched = 0.0;
  for (const auto& [g, c] : ref_grams) {
    ref_total += detail::weighted_count(g, c, table);
    auto it = cand_grams.find(g);
    if (it != cand_grams.end()) matched += detail::weighted_count(g, std::min(c, it->second), table);
  }
  return ScoreTriple::from_pr(matched / cand_total, matched / ref_total);
}

/// ROUGE-L; weighted form scores the LCS witness by its word weights.
inline ScoreTriple rouge_l(const PreparedText& cand, const PreparedText& ref, bool use_stems,
                           const WeightTable* table = nullptr) {
  const bool stems = detail::match_on_stems(use_stems, table);
  const auto& ck = cand.keys(stems);
  const auto& rk = ref.keys(stems);
  if (ck.empty() || rk.empty()) return ScoreTriple::degenerate_zero();
  if (table == nullptr) {
    double m = static_cast<double>(lcs_length(ck, rk));
    return ScoreTriple::from_pr(m / static_cast<double>(ck.size()), m / static_cast<double>(rk.size()));
  }
  std::vector<std::string> witness = lcs(ck, rk);
  double m = witness.empty() ? 0.0 : gram_weight(witness, *table);
  return ScoreTriple::from_pr(m / detail::weighted_length(ck, table), m / detail::weighted_length(rk, table));
}

inline const WeightTable* weight_table_for(const MetricConfig& cfg) {
  if (!is_weighted(cfg.metric)) return nullptr;
  if (!cfg.weight_table) {
    throw Error(ErrorCode::kInvalidArg, "metric " + std::string(metric_name(cfg.metric)) + " needs a weight table");
  }
  return cfg.weight_table.get();
}

inline ScoreTriple rouge_n(const Segment& cand, const Segment& ref, size_t n, const MetricConfig& cfg) {
  if (n != 1 && n != 2) throw Error(ErrorCode::kInvalidArg, "rouge_n supports n in {1, 2}");
  return rouge_n(prepare(cand, cfg), prepare(ref, cfg), n, cfg.use_stems, weight_table_for(cfg));
}

inline ScoreTriple rouge_l(const Segment& cand, const Segment& ref, const MetricConfig& cfg) {
  return rouge_l(prepare(cand, cfg), prepare(ref, cfg), cfg.use_stems, weight_table_for(cfg));
}

// ---------------------------------------------------------------------------
// METEOR

struct MeteorResult {
  double score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  size_t matches = 0;
  size_t chunks = 0;
  // False when some stage fell back to the greedy aligner.
  bool exhaustive = true;
};

/// Stages with more potential matches than this use the greedy aligner.
inline constexpr size_t kMeteorExhaustiveLimit = 12;

namespace meteor_detail {

inline size_t count_chunks(const std::vector<int>& cand_to_ref) {
  size_t chunks = 0;
  int last_c = -2;
  int last_r = -2;
  for (int c = 0; c < static_cast<int>(cand_to_ref.size()); ++c) {
    int r = cand_to_ref[static_cast<size_t>(c)];
    if (r < 0) continue;
    if (!(c == last_c + 1 && r == last_r + 1)) ++chunks;
    last_c = c;
    last_r = r;
  }
  return chunks;
}

// Maximum bipartite matching size (Kuhn's algorithm); sizes here are tiny.
inline size_t max_matching(const std::vector<std::vector<int>>& edges, size_t n_ref) {
  std::vector<int> ref_owner(n_ref, -1);
  std::function<bool(int, std::vector<char>&)> augment = [&](int c, std::vector<char>& seen) {
    for (int r : edges[static_cast<size_t>(c)]) {
      if (seen[static_cast<size_t>(r)]) continue;
      seen[static_cast<size_t>(r)] = 1;
      if (ref_owner[static_cast<size_t>(r)] < 0 || augment(ref_owner[static_cast<size_t>(r)], seen)) {
        ref_owner[static_cast<size_t>(r)] = c;
        return true;
      }
    }
    return false;
  };
  size_t size = 0;
  for (size_t c = 0; c < edges.size(); ++c) {
    std::vector<char> seen(n_ref, 0);
    if (augment(static_cast<int>(c), seen)) ++size;
  }
  return size;
}

class StageSearch {
 public:
  StageSearch(const std::vector<std::vector<int>>& edges, std::vector<int> base, std::vector<char> ref_used)
      : edges_(edges), cur_(std::move(base)), ref_used_(std::move(ref_used)) {
    remaining_.assign(edges_.size() + 1, 0);
    for (size_t c = edges_.size(); c-- > 0;) remaining_[c] = remaining_[c + 1] + (edges_[c].empty() ? 0 : 1);
  }

  // Left to right: continue the current chunk if possible, else take the
  // leftmost free reference word.
  std::vector<int> greedy() {
    std::vector<int> out = cur_;
    std::vector<char> used = ref_used_;
    int last_c = -2;
    int last_r = -2;
    for (size_t c = 0; c < out.size(); ++c) {
      if (out[c] >= 0) {
        last_c = static_cast<int>(c);
        last_r = out[c];
        continue;
      }
      int pick = -1;
      for (int r : edges_[c]) {
        if (used[static_cast<size_t>(r)]) continue;
        if (static_cast<int>(c) == last_c + 1 && r == last_r + 1) {
          pick = r;
          break;
        }
        if (pick < 0) pick = r;
      }
      if (pick >= 0) {
        out[c] = pick;
        used[static_cast<size_t>(pick)] = 1;
        last_c = static_cast<int>(c);
        last_r = pick;
      }
    }
    return out;
  }

  // Maximise stage matches, then minimise total chunks. Returns false if the
  // node budget ran out (best-so-far is still valid).
  bool exhaustive(std::vector<int>& best) {
    best = greedy();
    best_matches_ = new_matches(best);
    best_chunks_ = count_chunks(best);
    best_ = best;
    nodes_ = 0;
    exhausted_budget_ = false;
    dfs(0, 0, 0, -2, -2);
    best = best_;
    return !exhausted_budget_;
  }

 private:
  static constexpr size_t kNodeBudget = 4'000'000;

  size_t new_matches(const std::vector<int>& a) const {
    size_t n = 0;
    for (size_t c = 0; c < a.size(); ++c) {
      if (a[c] >= 0 && !edges_[c].empty() && cur_[c] < 0) ++n;
    }
    return n;
  }

  void dfs(size_t c, size_t matches, size_t chunks, int last_c, int last_r) {
    if (exhausted_budget_) return;
    if (++nodes_ > kNodeBudget) {
      exhausted_budget_ = true;
      return;
    }
    size_t optimistic = matches + remaining_[c];
    if (optimistic < best_matches_) return;
    if (optimistic == best_matches_ && chunks >= best_chunks_) return;
    if (c == cur_.size()) {
      if (matches > best_matches_ || (matches == best_matches_ && chunks < best_chunks_)) {
        best_matches_ = matches;
        best_chunks_ = chunks;
        best_ = cur_;
      }
      return;
    }
    auto step = [&](int r) {
      bool joins = static_cast<int>(c) == last_c + 1 && r == last_r + 1;
      return chunks + (joins ? 0 : 1);
    };
    if (cur_[c] >= 0 && edges_[c].empty()) {
      // matched in an earlier stage
      int r = cur_[c];
      dfs(c + 1, matches, step(r), static_cast<int>(c), r);
      return;
    }
    for (int r : edges_[c]) {
      if (ref_used_[static_cast<size_t>(r)]) continue;
      ref_used_[static_cast<size_t>(r)] = 1;
      cur_[c] = r;
      dfs(c + 1, matches + 1, step(r), static_cast<int>(c), r);
      cur_[c] = -1;
      ref_used_[static_cast<size_t>(r)] = 0;
    }
    dfs(c + 1, matches, chunks, last_c, last_r);
  }

  const std::vector<std::vector<int>>& edges_;
  std::vector<int> cur_;
  std::vector<char> ref_used_;
  std::vector<size_t> remaining_;
  std::vector<int> best_;
  size_t best_matches_ = 0;
  size_t best_chunks_ = 0;
  size_t nodes_ = 0;
  bool exhausted_budget_ = false;
};

}  // namespace meteor_detail

/// METEOR over eligible words: staged unigram alignment, F_mean with recall
/// weighted 9:1, fragmentation penalty 0.5 * (chunks / m)^3.
inline MeteorResult meteor(const PreparedText& cand, const PreparedText& ref,
                           std::span<const MeteorMatcher> matchers = {},
                           const SynonymLexicon* synonyms = nullptr) {
  static constexpr MeteorMatcher kDefault[] = {MeteorMatcher::kExact, MeteorMatcher::kStem};
  if (matchers.empty()) matchers = kDefault;

  MeteorResult res;
  const size_t nc = cand.size();
  const size_t nr = ref.size();
  if (nc == 0 || nr == 0) return res;

  std::vector<int> cand_to_ref(nc, -1);
  std::vector<char> ref_used(nr, 0);
  for (MeteorMatcher stage : matchers) {
    if (stage == MeteorMatcher::kSynonym && synonyms == nullptr) continue;
    std::vector<std::vector<int>> edges(nc);
    for (size_t c = 0; c < nc; ++c) {
      if (cand_to_ref[c] >= 0) continue;
      for (size_t r = 0; r < nr; ++r) {
        if (ref_used[r]) continue;
        bool hit = false;
        switch (stage) {
          case MeteorMatcher::kExact: hit = cand.norms[c] == ref.norms[r]; break;
          case MeteorMatcher::kStem: hit = cand.stems[c] == ref.stems[r]; break;
          case MeteorMatcher::kSynonym: hit = synonyms->related(cand.norms[c], ref.norms[r]); break;
        }
        if (hit) edges[c].push_back(static_cast<int>(r));
      }
    }
    size_t potential = meteor_detail::max_matching(edges, nr);
    if (potential == 0) continue;
    meteor_detail::StageSearch search(edges, cand_to_ref, ref_used);
    std::vector<int> chosen;
    if (potential <= kMeteorExhaustiveLimit) {
      if (!search.exhaustive(chosen)) res.exhaustive = false;
    } else {
      chosen = search.greedy();
      res.exhaustive = false;
    }
    cand_to_ref = std::move(chosen);
    std::fill(ref_used.begin(), ref_used.end(), 0);
    for (int r : cand_to_ref) {
      if (r >= 0) ref_used[static_cast<size_t>(r)] = 1;
    }
  }

  for (int r : cand_to_ref) {
    if (r >= 0) ++res.matches;
  }
  if (res.matches == 0) return res;
  res.chunks = meteor_detail::count_chunks(cand_to_ref);
  const double m = static_cast<double>(res.matches);
  res.precision = m / static_cast<double>(nc);
  res.recall = m / static_cast<double>(nr);
  res.fmean = 10.0 * res.precision * res.recall / (res.recall + 9.0 * res.precision);
  double frag = static_cast<double>(res.chunks) / m;
  res.penalty = 0.5 * frag * frag * frag;
  res.score = res.fmean * (1.0 - res.penalty);
  return res;
}

inline MeteorResult meteor(const Segment& cand, const Segment& ref, const MetricConfig& cfg) {
  return meteor(prepare(cand, cfg), prepare(ref, cfg), cfg.matchers, cfg.synonyms.get());
}

// ---------------------------------------------------------------------------
// Composites

/// Mean of the three weighted ROUGE scalars.
inline double r_wtd(const PreparedText& cand, const PreparedText& ref, const WeightTable& table,
                    Component component = Component::kF1) {
  double r1 = component_of(rouge_n(cand, ref, 1, true, &table), component);
  double r2 = component_of(rouge_n(cand, ref, 2, true, &table), component);
  double rl = component_of(rouge_l(cand, ref, true, &table), component);
  return (r1 + r2 + rl) / 3.0;
}

inline double r_wtd(const Segment& cand, const Segment& ref, const WeightTable& table,
                    Component component = Component::kF1) {
  return r_wtd(prepare(cand), prepare(ref), table, component);
}

/// Mean of ROUGE-1/2/L (weighted when `table` is given) and METEOR.
inline double rm(const PreparedText& cand, const PreparedText& ref, const WeightTable* table,
                 const MetricConfig& cfg) {
  double r1 = component_of(rouge_n(cand, ref, 1, cfg.use_stems, table), cfg.component);
  double r2 = component_of(rouge_n(cand, ref, 2, cfg.use_stems, table), cfg.component);
  double rl = component_of(rouge_l(cand, ref, cfg.use_stems, table), cfg.component);
  double mt = meteor(cand, ref, cfg.matchers, cfg.synonyms.get()).score;
  return (r1 + r2 + rl + mt) / 4.0;
}

inline double rm(const Segment& cand, const Segment& ref, const WeightTable* table,
                 const MetricConfig& cfg = default_config(MetricId::kRM)) {
  return rm(prepare(cand, cfg), prepare(ref, cfg), table, cfg);
}

inline double cosine(const std::string& a, const std::string& b, const SegmentVectors& vecs) {
  const auto* va = vecs.find(a);
  if (va == nullptr) throw Error(ErrorCode::kMissingVector, "no vector for segment '" + a + "'");
  const auto* vb = vecs.find(b);
  if (vb == nullptr) throw Error(ErrorCode::kMissingVector, "no vector for segment '" + b + "'");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (size_t i = 0; i < va->size(); ++i) {
    dot += (*va)[i] * (*vb)[i];
    na += (*va)[i] * (*va)[i];
    nb += (*vb)[i] * (*vb)[i];
  }
  if (na == 0.0) throw Error(ErrorCode::kZeroVector, "zero vector for segment '" + a + "'");
  if (nb == 0.0) throw Error(ErrorCode::kZeroVector, "zero vector for segment '" + b + "'");
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

/// Full P/R/F triple for any non-cosine metric. Composites average their
/// components' triples; METEOR reports (P, R, final score).
inline ScoreTriple metric_triple(const PreparedText& cand, const PreparedText& ref, const MetricConfig& cfg) {
  const WeightTable* table = weight_table_for(cfg);
  auto mean_of = [](std::initializer_list<ScoreTriple> parts) {
    ScoreTriple s;
    for (const auto& p : parts) {
      s.precision += p.precision;
      s.recall += p.recall;
      s.f1 += p.f1;
    }
    double n = static_cast<double>(parts.size());
    s.precision /= n;
    s.recall /= n;
    s.f1 /= n;
    return s;
  };
  auto meteor_triple = [&] {
    MeteorResult m = meteor(cand, ref, cfg.matchers, cfg.synonyms.get());
    ScoreTriple s;
    s.precision = m.precision;
    s.recall = m.recall;
    s.f1 = m.score;
    return s;
  };
  switch (cfg.metric) {
    case MetricId::kR1:
    case MetricId::kR1StopStem:
      return rouge_n(cand, ref, 1, cfg.use_stems, nullptr);
    case MetricId::kR2:
      return rouge_n(cand, ref, 2, cfg.use_stems, nullptr);
    case MetricId::kRL:
      return rouge_l(cand, ref, cfg.use_stems, nullptr);
    case MetricId::kRWtd:
      return mean_of({rouge_n(cand, ref, 1, true, table), rouge_n(cand, ref, 2, true, table),
                      rouge_l(cand, ref, true, table)});
    case MetricId::kRM:
    case MetricId::kRMWtd:
      return mean_of({rouge_n(cand, ref, 1, cfg.use_stems, table), rouge_n(cand, ref, 2, cfg.use_stems, table),
                      rouge_l(cand, ref, cfg.use_stems, table), meteor_triple()});
    case MetricId::kMeteor:
      return meteor_triple();
    case MetricId::kCosine:
      break;
  }
  throw Error(ErrorCode::kInvalidArg, "cosine has no precision/recall form");
}

/// Scalar similarity used for alignment preferences.
inline double metric_score(const PreparedText& cand, const PreparedText& ref, const MetricConfig& cfg) {
  switch (cfg.metric) {
    case MetricId::kCosine:
      if (!cfg.vectors) throw Error(ErrorCode::kInvalidArg, "cosine metric needs segment vectors");
      return cosine(cand.id, ref.id, *cfg.vectors);
    case MetricId::kRWtd:
      return r_wtd(cand, ref, *weight_table_for(cfg), cfg.component);
    case MetricId::kRM:
      return rm(cand, ref, nullptr, cfg);
    case MetricId::kRMWtd:
      return rm(cand, ref, weight_table_for(cfg), cfg);
    case MetricId::kMeteor:
      return meteor(cand, ref, cfg.matchers, cfg.synonyms.get()).score;
    default:
      return component_of(metric_triple(cand, ref, cfg), cfg.component);
  }
}

inline double metric_score(const Segment& cand, const Segment& ref, const MetricConfig& cfg) {
  return metric_score(prepare(cand, cfg), prepare(ref, cfg), cfg);
}

// ---------------------------------------------------------------------------
// Multi-reference evaluation

struct MultiReferenceScore {
  MetricId metric = MetricId::kR1;
  std::vector<std::string> reference_ids;
  std::vector<ScoreTriple> per_reference;
  ScoreTriple mean;
  ScoreTriple max;
};

/// Scores the whole generated summary against each reference; the headline
/// aggregate is the arithmetic mean, the per-component max is kept too.
inline std::vector<MultiReferenceScore> score_multi_reference(const Document& generated,
                                                              std::span<const Document> references,
                                                              std::span<const MetricId> metrics,
                                                              const MetricConfig& base = MetricConfig{}) {
  if (references.empty()) throw Error(ErrorCode::kInvalidArg, "need at least one reference summary");
  std::vector<MultiReferenceScore> out;
  for (MetricId id : metrics) {
    if (id == MetricId::kCosine) throw Error(ErrorCode::kInvalidArg, "cosine is not a summary-level metric");
    MetricConfig cfg = default_config(id);
    cfg.weight_table = base.weight_table;
    cfg.component = base.component;
    cfg.matchers = base.matchers;
    cfg.synonyms = base.synonyms;
    if (base.stopwords && id != MetricId::kR1StopStem) cfg.stopwords = base.stopwords;
    PreparedText cand = prepare(generated, cfg);
    MultiReferenceScore row;
    row.metric = id;
    for (const auto& ref : references) {
      row.reference_ids.push_back(ref.doc_id);
      row.per_reference.push_back(metric_triple(cand, prepare(ref, cfg), cfg));
    }
    double n = static_cast<double>(references.size());
    row.max.precision = row.max.recall = row.max.f1 = -std::numeric_limits<double>::infinity();
    for (const auto& s : row.per_reference) {
      row.mean.precision += s.precision / n;
      row.mean.recall += s.recall / n;
      row.mean.f1 += s.f1 / n;
      row.max.precision = std::max(row.max.precision, s.precision);
      row.max.recall = std::max(row.max.recall, s.recall);
      row.max.f1 = std::max(row.max.f1, s.f1);
    }
    out.push_back(std::move(row));
  }
  return out;
}

inline std::string format_score(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

/// TSV: metric, reference_id, P, R, F1; one row per reference, then "mean" and "max".
inline void write_score_tsv(std::ostream& out, std::span<const MultiReferenceScore> scores,
                            bool header = true, std::string_view prefix_col = {}) {
  if (header) {
    if (!prefix_col.empty()) out << "generated_id\t";
    out << "metric\treference_id\tP\tR\tF1\n";
  }
  auto row = [&](const MultiReferenceScore& s, std::string_view ref, const ScoreTriple& t) {
    if (!prefix_col.empty()) out << prefix_col << '\t';
    out << metric_name(s.metric) << '\t' << ref << '\t' << format_score(t.precision) << '\t'
        << format_score(t.recall) << '\t' << format_score(t.f1) << '\n';
  };
  for (const auto& s : scores) {
    for (size_t i = 0; i < s.per_reference.size(); ++i) row(s, s.reference_ids[i], s.per_reference[i]);
    row(s, "mean", s.mean);
    row(s, "max", s.max);
  }
}

}  // namespace goldext
