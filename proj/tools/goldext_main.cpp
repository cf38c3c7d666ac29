// goldext: gold-extract construction and evaluation from the command line.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "goldext/commands.hpp"

namespace {

struct Subcommand {
  const char* name;
  const char* help;
};

constexpr Subcommand kSubcommands[] = {
    {"segment", "split chapter sentences into constituents using parse trees"},
    {"weight", "dump per-chapter SIF word weights"},
    {"align", "align reference summaries to their chapters"},
    {"budget", "target extract length per chapter"},
    {"extract", "build oracle extracts from an alignment file"},
    {"score", "score generated summaries against all references"},
    {"stats", "corpus word-count and overlap statistics"},
    {"filter", "drop over-long chapters and low-compression summaries"},
    {"fit-quantiles", "fit the compression-ratio budget table to a corpus"},
    {"pipeline", "segment, align, budget, extract and score in one run"},
};

void add_common(CLI::App* sub, goldext::RunConfig& cfg) {
  sub->add_option("-i,--input", cfg.input, "document JSONL (chapters and reference summaries)");
  sub->add_option("--manifest", cfg.manifest, "corpus manifest JSONL");
  sub->add_option("-o,--output", cfg.output, "output file (directory for pipeline); '-' for stdout");
  sub->add_option("--metric", cfg.metric, "r1, r2, rl, r1-stopstem, r-wtd, rm, rm-wtd, meteor or cosine")
      ->capture_default_str();
  sub->add_option("--method", cfg.method, "greedy, stable, wl or ws")->capture_default_str();
  sub->add_option("--alpha", cfg.alpha, "SIF smoothing constant")->capture_default_str();
  sub->add_option("--min-const-len", cfg.min_len, "shortest constituent in words")->capture_default_str();
  sub->add_option("--segments", cfg.segments, "sentence or constituent")->capture_default_str();
  sub->add_option("--trees", cfg.trees, "bracketed parse trees, one per line");
  sub->add_option("--vectors", cfg.vectors, "segment vectors JSONL (cosine)");
  sub->add_option("--stopwords", cfg.stopwords, "stop-word list, one per line");
  sub->add_option("--synonyms", cfg.synonyms, "synonym pairs TSV (METEOR)");
  sub->add_option("--quantiles", cfg.quantiles, "budget table TSV (default: bundled table)");
  sub->add_option("--jobs", cfg.jobs, "worker threads")->capture_default_str();
  sub->add_option("--seed", cfg.seed, "split assignment seed")->capture_default_str();
  sub->add_option("--alignments", cfg.alignments, "alignment JSONL (extract)");
  sub->add_option("--generated", cfg.generated, "generated summaries JSONL (score)");
  sub->add_option("--score-metrics", cfg.score_metrics, "comma-separated evaluation metrics")->capture_default_str();
  sub->add_option("--label-source", cfg.label_source, "reference source used for alignment labels");
  sub->add_option("--min-score", cfg.min_score, "pairs scoring below this are never aligned");
  sub->add_option("--report", cfg.report, "per-pair alignment report TSV");
  sub->add_option("--removed", cfg.removed, "removed-pairs TSV (filter)");
  sub->add_flag("!--raw-text", cfg.pretokenized, "sentences are raw text rather than space-tokenized");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goldext: build and evaluate gold extracts for chapter summarization"};
  app.require_subcommand(1);
  goldext::RunConfig cfg;
  for (const auto& s : kSubcommands) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, cfg);
    sub->callback([&cfg, name = std::string(s.name)] { cfg.subcommand = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return goldext::kExitUsage;
  }
  return goldext::run_command(cfg, std::cout, std::cerr);
}
