#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "goldext/simmetrics.hpp"

using namespace goldext;

namespace {

PreparedText text(const std::string& s, const std::string& id = "t") {
  auto tokens = tokenize(s, true);
  return prepare(std::span<const Token>(tokens), id, nullptr);
}

Segment seg(const std::string& s, const std::string& id = "s#0") {
  Segment out;
  out.id = id;
  out.tokens = tokenize(s, true);
  return out;
}

std::string random_sentence(std::mt19937& rng, size_t max_len) {
  static const std::vector<std::string> kVocab = {"cigar", "cigars", "river", "house", "walk", "walked",
                                                  "night", "garden", "the", "of", "sea", "light"};
  std::uniform_int_distribution<size_t> len(1, max_len);
  std::uniform_int_distribution<size_t> pick(0, kVocab.size() - 1);
  std::string out;
  size_t n = len(rng);
  for (size_t i = 0; i < n; ++i) out += (i ? " " : "") + kVocab[pick(rng)];
  return out;
}

}  // namespace

TEST(Rouge, MatchesReferenceImplementation) {
  std::ifstream in(std::string(GOLDEXT_FIXTURES) + "/oracle/rouge_pairs.jsonl");
  ASSERT_TRUE(in);
  std::string line;
  size_t checked = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    PreparedText ref = text(j["reference"]);
    PreparedText cand = text(j["candidate"]);
    auto check = [&](const ScoreTriple& s, const nlohmann::json& want) {
      EXPECT_NEAR(s.precision, want["p"].get<double>(), 1e-4) << line;
      EXPECT_NEAR(s.recall, want["r"].get<double>(), 1e-4) << line;
      EXPECT_NEAR(s.f1, want["f"].get<double>(), 1e-4) << line;
    };
    check(rouge_n(cand, ref, 1, false), j["r1"]);
    check(rouge_n(cand, ref, 2, false), j["r2"]);
    check(rouge_l(cand, ref, false), j["rl"]);
    ++checked;
  }
  EXPECT_EQ(checked, 20u);
}

TEST(Rouge, ClippedCounts) {
  auto s = rouge_n(text("the cat the dog"), text("the the the the cat"), 1, false);
  EXPECT_DOUBLE_EQ(s.precision, 0.75);
  EXPECT_DOUBLE_EQ(s.recall, 0.6);
}

TEST(Rouge, EmptySideIsDegenerateZero) {
  PreparedText empty;
  auto s = rouge_n(empty, text("a b"), 1, false);
  EXPECT_TRUE(s.degenerate);
  EXPECT_EQ(s.f1, 0.0);
  // A single word has no bigrams.
  EXPECT_TRUE(rouge_n(text("cat"), text("cat"), 2, false).degenerate);
  EXPECT_TRUE(rouge_l(text("cat"), empty, false).degenerate);
}

TEST(Rouge, RejectsZeroOrder) { EXPECT_THROW(rouge_n(text("a"), text("a"), 0, false), Error); }

TEST(Rouge, StemsMergeInflections) {
  EXPECT_EQ(rouge_n(text("cigars"), text("cigar"), 1, false).f1, 0.0);
  EXPECT_EQ(rouge_n(text("cigars"), text("cigar"), 1, true).f1, 1.0);
}

TEST(WeightedRouge, ConstantTableReducesToPlain) {
  std::mt19937 rng(5);
  for (double w : {1.0, 0.37, 4.0}) {
    WeightTable table = WeightTable::uniform(w);
    for (int i = 0; i < 200; ++i) {
      PreparedText a = text(random_sentence(rng, 12));
      PreparedText b = text(random_sentence(rng, 12));
      for (size_t n : {1u, 2u}) {
        auto plain = rouge_n(a, b, n, true);
        auto wtd = rouge_n(a, b, n, true, &table);
        EXPECT_NEAR(plain.precision, wtd.precision, 1e-12);
        EXPECT_NEAR(plain.recall, wtd.recall, 1e-12);
        EXPECT_NEAR(plain.f1, wtd.f1, 1e-12);
      }
      EXPECT_NEAR(rouge_l(a, b, true).f1, rouge_l(a, b, true, &table).f1, 1e-12);
    }
  }
}

TEST(WeightedRouge, RareWordsDominate) {
  // "the" is frequent in the chapter, "cigar" is rare.
  Document chapter = make_document("ch", DocRole::kChapter, {"the the the the the the the the cigar"});
  WeightTable table = build_weight_table(chapter);
  PreparedText ref = text("the cigar");
  double rare = rouge_n(text("cigar"), ref, 1, true, &table).recall;
  double common = rouge_n(text("the"), ref, 1, true, &table).recall;
  EXPECT_GT(rare, common);
  EXPECT_NEAR(rare + common, 1.0, 1e-12);
}

TEST(WeightedRouge, MatchesOnTableKeyMode) {
  WeightTable by_norm = WeightTable::uniform(1.0, KeyMode::kNorm);
  EXPECT_EQ(rouge_n(text("cigars"), text("cigar"), 1, true, &by_norm).f1, 0.0);
  WeightTable by_stem = WeightTable::uniform(1.0, KeyMode::kStem);
  EXPECT_EQ(rouge_n(text("cigars"), text("cigar"), 1, false, &by_stem).f1, 1.0);
}

TEST(WeightedRouge, SmallAlphaChangeMovesScoreLittle) {
  Document chapter = make_document("ch", DocRole::kChapter,
                                   {"the river ran past the house", "a cigar glowed in the garden at night",
                                    "the sea light walked over the river"});
  WeightTable t1 = build_weight_table(chapter, 1e-3);
  WeightTable t2 = build_weight_table(chapter, 1e-3 * (1.0 + 1e-7));
  std::mt19937 rng(17);
  for (int i = 0; i < 200; ++i) {
    PreparedText a = text(random_sentence(rng, 10));
    PreparedText b = text(random_sentence(rng, 10));
    EXPECT_NEAR(r_wtd(a, b, t1), r_wtd(a, b, t2), 1e-6);
  }
}

TEST(Rouge, F1IsSymmetric) {
  std::mt19937 rng(23);
  WeightTable table = WeightTable::uniform(1.0);
  for (int i = 0; i < 300; ++i) {
    PreparedText a = text(random_sentence(rng, 10));
    PreparedText b = text(random_sentence(rng, 10));
    auto ab = rouge_n(a, b, 1, true);
    auto ba = rouge_n(b, a, 1, true);
    EXPECT_NEAR(ab.f1, ba.f1, 1e-12);
    EXPECT_NEAR(ab.precision, ba.recall, 1e-12);
    EXPECT_NEAR(rouge_l(a, b, false).f1, rouge_l(b, a, false).f1, 1e-12);
    EXPECT_NEAR(r_wtd(a, b, table), r_wtd(b, a, table), 1e-12);
    double s = rouge_n(a, b, 2, false).f1;
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Meteor, HandValues) {
  EXPECT_DOUBLE_EQ(meteor(text("he finished his cigar"), text("he finished his cigar")).score, 0.9921875);
  EXPECT_DOUBLE_EQ(meteor(text("cigar"), text("cigar")).score, 0.5);
  auto none = meteor(text("river house"), text("cigar smoke"));
  EXPECT_EQ(none.matches, 0u);
  EXPECT_EQ(none.score, 0.0);
}

TEST(Meteor, FragmentationPenalty) {
  auto r = meteor(text("sat the cat"), text("the cat sat"));
  EXPECT_EQ(r.matches, 3u);
  EXPECT_EQ(r.chunks, 2u);
  EXPECT_NEAR(r.penalty, 0.5 * 8.0 / 27.0, 1e-15);
  EXPECT_NEAR(r.score, 1.0 - 0.5 * 8.0 / 27.0, 1e-12);
}

TEST(Meteor, RecallWeightedMean) {
  auto r = meteor(text("a b"), text("a b a"));
  EXPECT_EQ(r.chunks, 1u);
  EXPECT_NEAR(r.fmean, 20.0 / 29.0, 1e-15);
  EXPECT_NEAR(r.score, 20.0 / 29.0 * 0.9375, 1e-12);
}

TEST(Meteor, StemStage) {
  EXPECT_DOUBLE_EQ(meteor(text("cats running"), text("cat run")).score, 0.9375);
  std::vector<MeteorMatcher> exact_only = {MeteorMatcher::kExact};
  EXPECT_EQ(meteor(text("cats running"), text("cat run"), exact_only).score, 0.0);
}

TEST(Meteor, SynonymStage) {
  SynonymLexicon lex;
  lex.add("big", "large");
  EXPECT_TRUE(lex.related("large", "big"));
  std::vector<MeteorMatcher> all = {MeteorMatcher::kExact, MeteorMatcher::kStem, MeteorMatcher::kSynonym};
  EXPECT_DOUBLE_EQ(meteor(text("big dog"), text("large dog"), all, nullptr).score, 0.25);
  EXPECT_DOUBLE_EQ(meteor(text("big dog"), text("large dog"), all, &lex).score, 0.9375);
}

TEST(Meteor, LongInputsUseGreedyAligner) {
  std::string s;
  for (int i = 0; i < 20; ++i) s += (i ? " w" : "w") + std::to_string(i);
  auto r = meteor(text(s), text(s));
  EXPECT_FALSE(r.exhaustive);
  EXPECT_EQ(r.chunks, 1u);
  EXPECT_TRUE(meteor(text("a b c"), text("a b c")).exhaustive);
}

TEST(Composites, MeansOfComponents) {
  PreparedText a = text("he says he will finish his last cigar");
  PreparedText b = text("just as soon as i have finished my cigar");
  WeightTable table = WeightTable::uniform(1.0);
  double expect_rwtd =
      (rouge_n(a, b, 1, true, &table).f1 + rouge_n(a, b, 2, true, &table).f1 + rouge_l(a, b, true, &table).f1) / 3.0;
  EXPECT_NEAR(r_wtd(a, b, table), expect_rwtd, 1e-15);

  MetricConfig cfg = default_config(MetricId::kRM);
  double expect_rm = (rouge_n(a, b, 1, true).f1 + rouge_n(a, b, 2, true).f1 + rouge_l(a, b, true).f1 +
                      meteor(a, b).score) /
                     4.0;
  EXPECT_NEAR(rm(a, b, nullptr, cfg), expect_rm, 1e-15);
  EXPECT_NEAR(metric_score(a, b, cfg), expect_rm, 1e-15);
}

TEST(Composites, WeightedMetricsNeedTable) {
  MetricConfig cfg = default_config(MetricId::kRWtd);
  EXPECT_THROW(metric_score(seg("a b"), seg("a b"), cfg), Error);
  cfg.weight_table = std::make_shared<WeightTable>(WeightTable::uniform(1.0));
  EXPECT_DOUBLE_EQ(metric_score(seg("cigar smoke"), seg("cigar smoke"), cfg), 1.0);
}

TEST(Composites, StopStemDropsStopWords) {
  MetricConfig cfg = default_config(MetricId::kR1StopStem);
  EXPECT_DOUBLE_EQ(metric_score(seg("the cigars"), seg("a cigar"), cfg), 1.0);
  EXPECT_DOUBLE_EQ(metric_score(seg("the cigars"), seg("a cigar"), default_config(MetricId::kR1)), 0.0);
}

TEST(Metrics, NamesRoundTrip) {
  for (MetricId id : {MetricId::kR1, MetricId::kR2, MetricId::kRL, MetricId::kR1StopStem, MetricId::kRWtd,
                      MetricId::kRM, MetricId::kRMWtd, MetricId::kMeteor, MetricId::kCosine}) {
    EXPECT_EQ(parse_metric(metric_name(id)), id);
  }
  EXPECT_THROW(parse_metric("bleu"), Error);
}

TEST(Cosine, Values) {
  SegmentVectors v;
  v.add("a#0", {1.0, 0.0});
  v.add("a#1", {0.0, 2.0});
  v.add("a#2", {-3.0, 0.0});
  v.add("a#3", {1.0, 1.0});
  EXPECT_DOUBLE_EQ(cosine("a#0", "a#0", v), 1.0);
  EXPECT_DOUBLE_EQ(cosine("a#0", "a#1", v), 0.0);
  EXPECT_DOUBLE_EQ(cosine("a#0", "a#2", v), -1.0);
  EXPECT_NEAR(cosine("a#0", "a#3", v), 1.0 / std::sqrt(2.0), 1e-15);
}

TEST(Cosine, Errors) {
  SegmentVectors v;
  v.add("a#0", {1.0, 0.0});
  v.add("z#0", {0.0, 0.0});
  try {
    cosine("a#0", "b#0", v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMissingVector);
  }
  try {
    cosine("a#0", "z#0", v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroVector);
  }
  EXPECT_THROW(v.add("c#0", {1.0, 2.0, 3.0}), Error);
  EXPECT_THROW(v.add("c#0", {}), Error);
  MetricConfig cfg = default_config(MetricId::kCosine);
  EXPECT_THROW(metric_score(seg("a"), seg("a"), cfg), Error);
  EXPECT_THROW(metric_triple(text("a"), text("a"), cfg), Error);
}

TEST(MultiReference, MeanAndMax) {
  Document gen = make_document("gen", DocRole::kExtract, {"alpha beta gamma delta epsilon"});
  std::vector<Document> refs = {make_document("r1", DocRole::kReferenceSummary, {"alpha zeta eta theta iota"}),
                                make_document("r2", DocRole::kReferenceSummary, {"alpha beta theta iota kappa"})};
  std::vector<MetricId> metrics = {MetricId::kR1};
  auto rows = score_multi_reference(gen, refs, metrics);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].per_reference[0].f1, 0.2, 1e-12);
  EXPECT_NEAR(rows[0].per_reference[1].f1, 0.4, 1e-12);
  EXPECT_NEAR(rows[0].mean.f1, 0.3, 1e-12);
  EXPECT_NEAR(rows[0].max.f1, 0.4, 1e-12);

  std::ostringstream out;
  write_score_tsv(out, rows);
  EXPECT_EQ(out.str(),
            "metric\treference_id\tP\tR\tF1\n"
            "r1\tr1\t0.200000\t0.200000\t0.200000\n"
            "r1\tr2\t0.400000\t0.400000\t0.400000\n"
            "r1\tmean\t0.300000\t0.300000\t0.300000\n"
            "r1\tmax\t0.400000\t0.400000\t0.400000\n");
}

TEST(MultiReference, Rejections) {
  Document gen = make_document("gen", DocRole::kExtract, {"alpha"});
  std::vector<Document> none;
  std::vector<MetricId> r1 = {MetricId::kR1};
  EXPECT_THROW(score_multi_reference(gen, none, r1), Error);
  std::vector<Document> refs = {make_document("r", DocRole::kReferenceSummary, {"alpha"})};
  std::vector<MetricId> cos = {MetricId::kCosine};
  EXPECT_THROW(score_multi_reference(gen, refs, cos), Error);
}
