#pragma once

// Subcommand implementations behind the `uidprof` executable. Each throws
// InputError (exit 2) or DataError (exit 3); the executable maps them.

#include <filesystem>
#include <string>
#include <vector>

#include "uidprof/analysis.hpp"
#include "uidprof/ingestion.hpp"
#include "uidprof/ngram.hpp"
#include "uidprof/scoring.hpp"
#include "uidprof/synth.hpp"

namespace uidprof::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitData = 3;

struct RunConfig {
  std::string subcommand;
  std::filesystem::path manifest;
  std::string backend = "external";  // "ngram" or "external"
  std::filesystem::path model;
  std::filesystem::path scores;
  std::vector<std::filesystem::path> corpus;
  int order = 3;
  double smoothing_k = 0.1;
  std::vector<double> weights;  // empty: equal weights
  std::size_t max_tokens = 300;
  std::string group_by = "l1";
  std::string metric = "all";
  std::size_t window = 1;
  double alpha = 0.05;
  std::filesystem::path out;
  unsigned workers = 1;
  std::uint64_t seed = 1;
  std::size_t essays_per_group = 50;
  std::size_t min_tokens = 120;
  std::size_t synth_max_tokens = 400;
  bool with_text = false;
  bool keep_text = false;
};

/// One sequence per non-empty line, whitespace-tokenized.
inline std::vector<std::vector<std::string>> read_training_corpus(
    const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) throw InputError("no corpus files given");
  std::vector<std::vector<std::string>> corpus;
  for (const auto& p : paths) {
    if (!std::filesystem::is_regular_file(p)) throw InputError("corpus file not found: " + p.string());
    for (const auto& line : split_lines(read_file(p))) {
      auto toks = split_whitespace(line);
      if (!toks.empty()) corpus.push_back(std::move(toks));
    }
  }
  return corpus;
}

inline NgramModel cmd_train(const RunConfig& cfg) {
  if (cfg.order < 1) throw InputError("order must be ≥ 1");
  if (cfg.model.empty()) throw InputError("--model output path is required");
  auto corpus = read_training_corpus(cfg.corpus);
  auto weights = cfg.weights.empty() ? uniform_weights(cfg.order) : cfg.weights;
  auto model = NgramModel::train(corpus, cfg.order, cfg.smoothing_k, std::move(weights));
  model.save(cfg.model);
  return model;
}

inline std::vector<EssayRecord> score_with_ngram(const RunConfig& cfg) {
  if (cfg.manifest.empty()) throw InputError("--manifest is required for the ngram backend");
  if (cfg.model.empty()) throw InputError("--model is required for the ngram backend");
  if (!std::filesystem::exists(cfg.model)) throw InputError("model not found: " + cfg.model.string());
  const auto manifest = parse_manifest(cfg.manifest);
  const auto model = NgramModel::load(cfg.model);
  return score_manifest(model, manifest, cfg.workers, cfg.keep_text);
}

inline std::filesystem::path cmd_score(const RunConfig& cfg) {
  if (cfg.out.empty()) throw InputError("--out is required");
  auto records = score_with_ngram(cfg);
  const auto path = cfg.out / "scores.jsonl";
  write_scores(records, path);
  return path;
}

inline AnalysisConfig analysis_config(const RunConfig& cfg) {
  AnalysisConfig a;
  if (cfg.group_by == "l1")
    a.group_by = Factor::l1;
  else if (cfg.group_by == "proficiency")
    a.group_by = Factor::proficiency;
  else
    throw InputError("unknown grouping factor: " + cfg.group_by);
  auto m = parse_metric_selection(cfg.metric);
  if (!m) throw InputError("unknown metric: " + cfg.metric);
  a.metrics = *m;
  a.max_tokens = cfg.max_tokens;
  a.window = cfg.window;
  a.alpha = cfg.alpha;
  return a;
}

inline AnalysisBundle cmd_analyze(const RunConfig& cfg) {
  if (cfg.out.empty()) throw InputError("--out is required");
  const auto acfg = analysis_config(cfg);
  std::vector<EssayRecord> records;
  if (cfg.backend == "external") {
    if (cfg.scores.empty()) throw InputError("--scores is required for the external backend");
    records = read_scores(cfg.scores);
  } else if (cfg.backend == "ngram") {
    records = score_with_ngram(cfg);
  } else {
    throw InputError("unknown backend: " + cfg.backend);
  }
  auto bundle = run_analysis(records, acfg);
  write_bundle(bundle, cfg.out);
  return bundle;
}

inline void cmd_synth(const RunConfig& cfg) {
  if (cfg.out.empty()) throw InputError("--out is required");
  SynthConfig s;
  s.seed = cfg.seed;
  s.essays_per_group = cfg.essays_per_group;
  s.min_tokens = cfg.min_tokens;
  s.max_tokens = cfg.synth_max_tokens;
  s.with_text = cfg.with_text;
  write_synthetic_corpus(s, cfg.out);
}

}  // namespace uidprof::cli
