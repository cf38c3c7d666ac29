#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "goldext/commands.hpp"

using namespace goldext;
namespace fs = std::filesystem;

namespace {

const std::string kFixtures = GOLDEXT_FIXTURES;
const std::string kChapter11 = kFixtures + "/chapter11/documents.jsonl";
const std::string kTrees = kFixtures + "/chapter11/trees.txt";
const std::string kManifest = kFixtures + "/corpus/manifest.jsonl";

class Commands : public ::testing::Test {
 protected:
  void SetUp() override {
    std::random_device rd;
    dir_ = fs::temp_directory_path() / ("goldext-test-" + std::to_string(rd()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(path(name)) << content;
    return path(name);
  }

  int run(const RunConfig& cfg) {
    out_.str("");
    err_.str("");
    return run_command(cfg, out_, err_);
  }

  static RunConfig config(const std::string& sub, const std::string& input = kChapter11) {
    RunConfig cfg;
    cfg.subcommand = sub;
    cfg.input = input;
    return cfg;
  }

  std::vector<nlohmann::json> out_records() const {
    std::vector<nlohmann::json> v;
    std::istringstream in(out_.str());
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) v.push_back(nlohmann::json::parse(line));
    }
    return v;
  }

  fs::path dir_;
  std::ostringstream out_;
  std::ostringstream err_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_binary(const std::string& args) {
  std::string cmd = std::string(GOLDEXT_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_F(Commands, AlignProducesStableOneToOneRecords) {
  auto cfg = config("align");
  ASSERT_EQ(run(cfg), kExitOk) << err_.str();
  auto recs = out_records();
  ASSERT_EQ(recs.size(), 3u);

  Document chapter = read_documents_file(kChapter11).front();
  MetricConfig mc = default_config(MetricId::kRWtd);
  mc.weight_table = std::make_shared<WeightTable>(build_weight_table(chapter));
  for (const auto& rec : recs) {
    EXPECT_EQ(rec["chapter_id"], "awakening-11");
    EXPECT_EQ(rec["method"], "stable");
    EXPECT_EQ(rec["labels"].size(), chapter.segments.size());
    auto summary = read_documents_file(kChapter11);
    const Document* ref = nullptr;
    for (const auto& d : summary) {
      if (d.doc_id == rec["summary_id"]) ref = &d;
    }
    ASSERT_NE(ref, nullptr);
    ScoreMatrix m = compute_score_matrix(*ref, chapter, mc);
    std::vector<int> row_match(ref->segments.size(), -1);
    for (const auto& p : rec["pairs"]) {
      std::string s = p["s"], c = p["c"];
      size_t r = std::stoul(s.substr(s.find('#') + 1));
      row_match[r] = std::stoi(c.substr(c.find('#') + 1));
      EXPECT_NEAR(p["score"].get<double>(), m.at(r, static_cast<size_t>(row_match[r])), 1e-12);
    }
    EXPECT_TRUE(blocking_pairs(m, row_match).empty());
  }
}

TEST_F(Commands, AlignReportAndSummaryLevel) {
  auto cfg = config("align");
  cfg.method = "ws";
  cfg.report = path("report.tsv");
  ASSERT_EQ(run(cfg), kExitOk) << err_.str();
  for (const auto& rec : out_records()) EXPECT_FALSE(rec["selected"].empty());
  std::string report = slurp(cfg.report);
  EXPECT_EQ(report.substr(0, report.find('\n')), "chapter_id\tsummary_id\tmethod\tmetric\tmean_score");
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 4);
}

TEST_F(Commands, UsageErrors) {
  auto cosine = config("align");
  cosine.metric = "cosine";
  EXPECT_EQ(run(cosine), kExitUsage);

  auto empty = config("align", write("empty.jsonl", ""));
  EXPECT_EQ(run(empty), kExitUsage);

  auto missing = config("align", path("nope.jsonl"));
  EXPECT_EQ(run(missing), kExitUsage);

  auto constituent = config("pipeline");
  constituent.segments = "constituent";
  constituent.output = path("out");
  EXPECT_EQ(run(constituent), kExitUsage);

  auto jobs = config("align");
  jobs.jobs = 0;
  EXPECT_EQ(run(jobs), kExitUsage);

  auto bad_metric = config("align");
  bad_metric.metric = "bleu";
  EXPECT_EQ(run(bad_metric), kExitUsage);

  auto bad_alpha = config("weight");
  bad_alpha.alpha = 0.0;
  EXPECT_EQ(run(bad_alpha), kExitUsage);

  EXPECT_EQ(run(config("segment")), kExitUsage);
  EXPECT_EQ(run(config("frobnicate")), kExitUsage);
}

TEST_F(Commands, SegmentWritesSpans) {
  auto cfg = config("segment");
  cfg.trees = kTrees;
  cfg.min_len = 2;
  ASSERT_EQ(run(cfg), kExitOk) << err_.str();
  auto recs = out_records();
  ASSERT_EQ(recs.size(), 57u);
  EXPECT_EQ(recs[1]["sentence_id"], "awakening-11#1");
  std::vector<std::string> texts;
  for (const auto& s : recs[1]["spans"]) texts.push_back(s["text"]);
  EXPECT_EQ(texts, (std::vector<std::string>{"I thought I should find you in bed , ''", "said her husband ,",
                                             "when he discovered her", "lying there ."}));
}

TEST_F(Commands, WeightAndBudgetTables) {
  auto w = config("weight");
  ASSERT_EQ(run(w), kExitOk) << err_.str();
  std::string weights = out_.str();
  EXPECT_EQ(weights.rfind("chapter_id\t", 0), 0u);
  EXPECT_NE(weights.find("awakening-11\tcigar\t"), std::string::npos);

  auto b = config("budget");
  ASSERT_EQ(run(b), kExitOk) << err_.str();
  EXPECT_EQ(out_.str(), "chapter_id\tchapter_wc\tbin\ttarget_words\nawakening-11\t691\t1\t104\n");
}

TEST_F(Commands, ExtractFromAlignments) {
  auto a = config("align");
  a.output = path("align.jsonl");
  ASSERT_EQ(run(a), kExitOk) << err_.str();
  auto e = config("extract");
  e.alignments = a.output;
  ASSERT_EQ(run(e), kExitOk) << err_.str();
  auto recs = out_records();
  ASSERT_EQ(recs.size(), 3u);
  for (const auto& r : recs) {
    EXPECT_EQ(r["role"], "extract");
    EXPECT_FALSE(r["sentences"].empty());
  }
  EXPECT_EQ(recs[0]["label_reference"], "awakening-11-bookwolf");
}

TEST_F(Commands, ScoreGeneratedSummary) {
  std::string gen = write("gen.jsonl",
                          R"({"doc_id": "g1", "role": "extract", "chapter_id": "awakening-11", "sentences": )"
                          R"(["He says he will , as soon as he has finished his cigar ."]})"
                          "\n");
  auto cfg = config("score");
  cfg.generated = gen;
  cfg.score_metrics = "r1,meteor";
  ASSERT_EQ(run(cfg), kExitOk) << err_.str();
  std::string tsv = out_.str();
  // header + 2 metrics x (3 references + mean + max)
  EXPECT_EQ(std::count(tsv.begin(), tsv.end(), '\n'), 11);
  EXPECT_NE(tsv.find("g1\tr1\tmean\t"), std::string::npos);
  EXPECT_NE(tsv.find("g1\tmeteor\tawakening-11-novelguide\t"), std::string::npos);
}

TEST_F(Commands, CorpusCommands) {
  auto stats = config("stats", "");
  stats.manifest = kManifest;
  ASSERT_EQ(run(stats), kExitOk) << err_.str();
  EXPECT_NE(out_.str().find("All Sources\t"), std::string::npos);

  auto filter = config("filter", "");
  filter.manifest = kFixtures + "/corpus/filter_manifest.jsonl";
  filter.removed = path("removed.tsv");
  ASSERT_EQ(run(filter), kExitOk) << err_.str();
  auto kept = out_records();
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_TRUE(kept[0].contains("split"));
  EXPECT_NE(slurp(filter.removed).find("compression"), std::string::npos);

  auto fit = config("fit-quantiles", "");
  fit.manifest = kManifest;
  EXPECT_EQ(run(fit), kExitUsage);
  EXPECT_NE(err_.str().find("at least 10"), std::string::npos);
}

TEST_F(Commands, PipelineWritesAllOutputs) {
  auto cfg = config("pipeline", "");
  cfg.manifest = kManifest;
  cfg.output = path("out");
  ASSERT_EQ(run(cfg), kExitOk) << err_.str();
  for (const char* f : {"alignments.jsonl", "extracts.jsonl", "extracts.txt", "budgets.tsv", "scores.tsv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "out" / f)) << f;
  }
  std::string budgets = slurp(dir_ / "out" / "budgets.tsv");
  EXPECT_NE(budgets.find("awakening-11\tawakening-11-bookwolf\t691\t1\t104\t"), std::string::npos);
  EXPECT_EQ(std::count(budgets.begin(), budgets.end(), '\n'), 4);
}

TEST_F(Commands, PipelineConstituentModeRendersContext) {
  auto cfg = config("pipeline");
  cfg.segments = "constituent";
  cfg.trees = kTrees;
  cfg.min_len = 2;
  cfg.label_source = "NovelGuide";
  cfg.output = path("out");
  ASSERT_EQ(run(cfg), kExitOk) << err_.str();
  std::string text = slurp(dir_ / "out" / "extracts.txt");
  EXPECT_EQ(text.rfind("# awakening-11\n", 0), 0u);
  EXPECT_NE(text.find('['), std::string::npos);
  auto ex = nlohmann::json::parse(slurp(dir_ / "out" / "extracts.jsonl"));
  EXPECT_EQ(ex["label_reference"], "awakening-11-novelguide");

  cfg.label_source = "Nobody";
  EXPECT_EQ(run(cfg), kExitProcessing);
}

TEST_F(Commands, BinaryExitCodes) {
  EXPECT_EQ(run_binary("budget -i " + kChapter11), kExitOk);
  EXPECT_EQ(run_binary("align -i " + kChapter11 + " --metric cosine"), kExitUsage);
  EXPECT_EQ(run_binary("align --bogus-flag"), kExitUsage);
  EXPECT_EQ(run_binary(""), kExitUsage);
  EXPECT_EQ(run_binary("align -i " + path("missing.jsonl")), kExitUsage);
}
