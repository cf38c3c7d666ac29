#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "goldext/corpus.hpp"

using namespace goldext;

namespace {

const std::string kCorpus = std::string(GOLDEXT_FIXTURES) + "/corpus";

// A document of `n_sentences` one-word sentences plus `extra_words` in the last.
Document words_doc(const std::string& id, DocRole role, size_t n_sentences, size_t extra_words = 0) {
  std::vector<std::string> sents(n_sentences, "word .");
  std::string tail;
  for (size_t i = 0; i < extra_words; ++i) tail += " more";
  sents.back() = "word" + tail + " .";
  return make_document(id, role, std::span<const std::string>(sents));
}

CorpusPair pair_of(const std::string& book, size_t chapter_sents, size_t chapter_extra, size_t summary_words,
                   const std::string& source = "Alpha") {
  CorpusPair p;
  p.book_id = book;
  p.chapter = words_doc(book + "-ch", DocRole::kChapter, chapter_sents, chapter_extra);
  p.summary = words_doc(book + "-su", DocRole::kReferenceSummary, 1, summary_words - 1);
  p.summary.source_label = source;
  return p;
}

}  // namespace

TEST(Filter, SentenceLimitBoundary) {
  std::vector<CorpusPair> pairs = {pair_of("keep", 700, 0, 350), pair_of("drop", 701, 0, 10)};
  auto r = filter_pairs(pairs);
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].book_id, "keep");
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].rule, FilterRule::kChapterLength);
  EXPECT_EQ(rule_name(r.removed[0].rule), "length");
}

TEST(Filter, CompressionBoundary) {
  std::vector<CorpusPair> pairs = {pair_of("even", 1, 5, 3), pair_of("low", 1, 4, 3)};
  EXPECT_DOUBLE_EQ(compression_ratio(pairs[0]), 2.0);
  EXPECT_NEAR(compression_ratio(pairs[1]), 5.0 / 3.0, 1e-15);
  auto r = filter_pairs(pairs);
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].book_id, "even");
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].rule, FilterRule::kCompression);
  EXPECT_EQ(r.removed[0].detail, "compression ratio 1.666667");
}

TEST(Filter, LengthRuleChecksFirst) {
  auto r = filter_pairs({pair_of("both", 800, 0, 700)});
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].rule, FilterRule::kChapterLength);
}

TEST(Filter, Idempotent) {
  std::vector<CorpusPair> pairs;
  for (size_t i = 0; i < 12; ++i) pairs.push_back(pair_of("b" + std::to_string(i), 100 + i * 60, i, 20 + i * 6));
  auto once = filter_pairs(pairs);
  auto twice = filter_pairs(once.kept);
  EXPECT_TRUE(twice.removed.empty());
  ASSERT_EQ(twice.kept.size(), once.kept.size());
  for (size_t i = 0; i < once.kept.size(); ++i) EXPECT_EQ(twice.kept[i].book_id, once.kept[i].book_id);
  EXPECT_EQ(once.kept.size() + once.removed.size(), pairs.size());
}

TEST(Splits, BooksStayTogether) {
  std::vector<CorpusPair> pairs;
  for (size_t b = 0; b < 10; ++b) {
    for (size_t k = 0; k < 3; ++k) pairs.push_back(pair_of("book" + std::to_string(b), 4, 0, 2));
  }
  assign_splits(pairs, {}, 42);
  std::map<std::string, Split> seen;
  std::map<Split, size_t> books_per_split;
  for (const auto& p : pairs) {
    EXPECT_NE(p.split, Split::kUnassigned);
    auto [it, fresh] = seen.emplace(p.book_id, p.split);
    if (fresh) {
      ++books_per_split[p.split];
    } else {
      EXPECT_EQ(it->second, p.split);
    }
  }
  EXPECT_EQ(books_per_split[Split::kTrain], 8u);
  EXPECT_EQ(books_per_split[Split::kDev], 1u);
  EXPECT_EQ(books_per_split[Split::kTest], 1u);
}

TEST(Splits, DeterministicForSeed) {
  std::vector<CorpusPair> a;
  for (size_t b = 0; b < 20; ++b) a.push_back(pair_of("book" + std::to_string(b), 4, 0, 2));
  auto b = a;
  assign_splits(a, {}, 7);
  assign_splits(b, {}, 7);
  for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].split, b[i].split);
}

TEST(Splits, Rejections) {
  std::vector<CorpusPair> pairs = {pair_of("x", 4, 0, 2)};
  EXPECT_THROW(assign_splits(pairs, {-1.0, 1.0, 1.0}), Error);
  EXPECT_THROW(assign_splits(pairs, {0.0, 0.0, 0.0}), Error);
  pairs[0].book_id.clear();
  EXPECT_THROW(assign_splits(pairs), Error);
}

TEST(Overlap, SharedTypes) {
  Document s = make_document("s", DocRole::kReferenceSummary, {"Cat dog ."});
  Document c = make_document("c", DocRole::kChapter, {"cat bird cat ."});
  auto o = word_overlap(s, c);
  EXPECT_DOUBLE_EQ(o.summary_coverage, 0.5);
  EXPECT_DOUBLE_EQ(o.chapter_coverage, 0.5);
  EXPECT_DOUBLE_EQ(o.jaccard, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(word_overlap(c, c).summary_coverage, 1.0);
  Document punct = make_document("p", DocRole::kChapter, {". ,"});
  EXPECT_THROW(word_overlap(s, punct), Error);
}

TEST(Describe, Conventions) {
  auto one = describe("x", {5.0});
  EXPECT_EQ(one.mean, 5.0);
  EXPECT_EQ(one.stdev, 0.0);
  EXPECT_EQ(one.median, 5.0);
  auto even = describe("x", {4.0, 1.0, 3.0, 2.0});
  EXPECT_DOUBLE_EQ(even.median, 2.5);
  EXPECT_DOUBLE_EQ(even.stdev, std::sqrt(5.0 / 3.0));
  EXPECT_EQ(even.total, 4u);
  EXPECT_EQ(describe("x", {}).total, 0u);
}

TEST(Stats, HandComputedCorpus) {
  std::vector<CorpusPair> pairs = {pair_of("a", 10, 0, 2, "A"), pair_of("b", 20, 0, 4, "A"),
                                   pair_of("c", 30, 0, 6, "B")};
  auto s = corpus_stats(pairs);
  ASSERT_EQ(s.per_source.size(), 2u);
  EXPECT_EQ(s.per_source[0].label, "A");
  EXPECT_DOUBLE_EQ(s.per_source[0].mean, 3.0);
  EXPECT_DOUBLE_EQ(s.per_source[0].stdev, std::sqrt(2.0));
  EXPECT_EQ(s.per_source[1].label, "B");
  EXPECT_DOUBLE_EQ(s.per_source[1].mean, 6.0);
  EXPECT_DOUBLE_EQ(s.per_source[1].stdev, 0.0);
  EXPECT_DOUBLE_EQ(s.all_sources.mean, 4.0);
  EXPECT_DOUBLE_EQ(s.all_sources.stdev, 2.0);
  EXPECT_DOUBLE_EQ(s.all_sources.median, 4.0);
  EXPECT_DOUBLE_EQ(s.chapter_text.mean, 20.0);
  EXPECT_DOUBLE_EQ(s.chapter_text.stdev, 10.0);
  EXPECT_DOUBLE_EQ(s.compression.mean, 5.0);
  EXPECT_DOUBLE_EQ(s.compression.stdev, 0.0);
  // Summaries use "word" and "more"; chapters only "word".
  EXPECT_DOUBLE_EQ(s.overlap_summary.mean, 0.5);

  std::ostringstream out;
  write_stats_tsv(out, s);
  std::string tsv = out.str();
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')), "source\tmean\tstdev\tmedian\ttotal");
  EXPECT_NE(tsv.find("All Sources\t4.000000\t2.000000\t4.000000\t3\n"), std::string::npos);
  EXPECT_THROW(corpus_stats({}), Error);
}

TEST(Manifest, LoadsFixtureCorpus) {
  auto pairs = load_manifest(kCorpus + "/manifest.jsonl");
  ASSERT_EQ(pairs.size(), 7u);
  std::map<std::string, size_t> per_book;
  for (const auto& p : pairs) {
    ++per_book[p.book_id];
    EXPECT_EQ(p.chapter.role, DocRole::kChapter);
    EXPECT_EQ(p.summary.role, DocRole::kReferenceSummary);
    EXPECT_FALSE(p.source().empty());
  }
  EXPECT_EQ(per_book["awakening"], 3u);
  EXPECT_EQ(per_book["harbor"], 4u);
  EXPECT_EQ(pairs[0].chapter.doc_id, "awakening-11");
  auto rec = manifest_record(pairs[0]);
  EXPECT_FALSE(rec.contains("split"));
  pairs[0].split = Split::kDev;
  EXPECT_EQ(manifest_record(pairs[0])["split"], "dev");
}

TEST(Manifest, FilterFixtureDropsDensePair) {
  auto r = filter_pairs(load_manifest(kCorpus + "/filter_manifest.jsonl"));
  EXPECT_EQ(r.kept.size(), 2u);
  ASSERT_EQ(r.removed.size(), 1u);
  EXPECT_EQ(r.removed[0].pair.book_id, "dense");
  EXPECT_EQ(r.removed[0].rule, FilterRule::kCompression);
}

TEST(Manifest, Errors) {
  EXPECT_THROW(load_manifest(kCorpus + "/missing.jsonl"), Error);
}
