// uidprof: corpus information-density profiler.
//
//   uidprof train   --corpus a.txt b.txt --order 3 --k 0.1 --model lm.json
//   uidprof score   --manifest corpus.tsv --model lm.json --out scored/
//   uidprof analyze --scores scored/scores.jsonl --group-by l1 --out report/
//   uidprof synth   --out synth/ --seed 7 [--with-text]
//
// Every flag can also be set through an environment variable UIDPROF_<FLAG>,
// e.g. UIDPROF_MAX_TOKENS=200. Exit codes: 0 ok, 2 input/config error,
// 3 data-invariant violation.

#include <iostream>

#include <CLI11.hpp>

#include "uidprof/cli.hpp"

namespace {

using uidprof::cli::RunConfig;

void add_env(CLI::Option* opt, const char* env) { opt->envname(env); }

}  // namespace

int main(int argc, char** argv) {
  using namespace uidprof;
  RunConfig cfg;

  CLI::App app{"uidprof: surprisal, entropy and UID profiling of grouped essay corpora"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "Train the built-in n-gram backend on text files");
  add_env(train->add_option("--corpus", cfg.corpus, "Training text files (one sentence per line)")
              ->required(),
          "UIDPROF_CORPUS");
  add_env(train->add_option("--order", cfg.order, "N-gram order")->capture_default_str(),
          "UIDPROF_ORDER");
  add_env(train->add_option("--k", cfg.smoothing_k, "Add-k smoothing constant")->capture_default_str(),
          "UIDPROF_K");
  add_env(train->add_option("--weights", cfg.weights,
                            "Interpolation weights, unigram first (default: equal)"),
          "UIDPROF_WEIGHTS");
  add_env(train->add_option("--model", cfg.model, "Output model file")->required(), "UIDPROF_MODEL");

  auto* score = app.add_subcommand("score", "Score manifest essays into the exchange JSONL");
  add_env(score->add_option("--manifest", cfg.manifest, "TSV manifest")->required(),
          "UIDPROF_MANIFEST");
  add_env(score->add_option("--model", cfg.model, "Trained n-gram model")->required(),
          "UIDPROF_MODEL");
  add_env(score->add_option("--out", cfg.out, "Output directory")->required(), "UIDPROF_OUT");
  add_env(score->add_option("--workers", cfg.workers, "Scoring threads")->capture_default_str(),
          "UIDPROF_WORKERS");
  score->add_flag("--keep-text", cfg.keep_text, "Store token text in the output");

  auto* analyze = app.add_subcommand("analyze", "Essay metrics, profiles, ANOVA, post-hoc, LMM");
  add_env(analyze->add_option("--backend", cfg.backend, "Score source")
              ->check(CLI::IsMember({"ngram", "external"}))
              ->capture_default_str(),
          "UIDPROF_BACKEND");
  add_env(analyze->add_option("--scores", cfg.scores, "Exchange JSONL (external backend)"),
          "UIDPROF_SCORES");
  add_env(analyze->add_option("--manifest", cfg.manifest, "TSV manifest (ngram backend)"),
          "UIDPROF_MANIFEST");
  add_env(analyze->add_option("--model", cfg.model, "Trained n-gram model (ngram backend)"),
          "UIDPROF_MODEL");
  add_env(analyze->add_option("--max-tokens", cfg.max_tokens, "Leading tokens for position analyses")
              ->capture_default_str(),
          "UIDPROF_MAX_TOKENS");
  add_env(analyze->add_option("--group-by", cfg.group_by, "Grouping factor")
              ->check(CLI::IsMember({"l1", "proficiency"}))
              ->capture_default_str(),
          "UIDPROF_GROUP_BY");
  add_env(analyze->add_option("--metric", cfg.metric, "Metric selection")
              ->check(CLI::IsMember({"surprisal", "entropy", "uid", "all"}))
              ->capture_default_str(),
          "UIDPROF_METRIC");
  add_env(analyze->add_option("--window", cfg.window, "Profile smoothing window (odd)")
              ->capture_default_str(),
          "UIDPROF_WINDOW");
  add_env(analyze->add_option("--alpha", cfg.alpha, "Post-hoc family-wise alpha")->capture_default_str(),
          "UIDPROF_ALPHA");
  add_env(analyze->add_option("--out", cfg.out, "Output directory")->required(), "UIDPROF_OUT");
  add_env(analyze->add_option("--workers", cfg.workers, "Scoring threads (ngram backend)")
              ->capture_default_str(),
          "UIDPROF_WORKERS");

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with known parameters");
  add_env(synth->add_option("--out", cfg.out, "Output directory")->required(), "UIDPROF_OUT");
  add_env(synth->add_option("--seed", cfg.seed, "Random seed")->capture_default_str(), "UIDPROF_SEED");
  add_env(synth->add_option("--essays-per-group", cfg.essays_per_group, "Essays per proficiency group")
              ->capture_default_str(),
          "UIDPROF_ESSAYS_PER_GROUP");
  add_env(synth->add_option("--min-tokens", cfg.min_tokens, "Shortest essay")->capture_default_str(),
          "UIDPROF_MIN_TOKENS");
  add_env(synth->add_option("--max-tokens", cfg.synth_max_tokens, "Longest essay")
              ->capture_default_str(),
          "UIDPROF_SYNTH_MAX_TOKENS");
  synth->add_flag("--with-text", cfg.with_text, "Also write text essays, train.txt and manifest.tsv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cli::kExitInput;
  }

  try {
    if (*train) {
      auto model = cli::cmd_train(cfg);
      std::cerr << "trained order-" << model.order() << " model, vocabulary "
                << model.vocabulary_size() << " -> " << cfg.model.string() << '\n';
    } else if (*score) {
      auto path = cli::cmd_score(cfg);
      std::cerr << "wrote " << path.string() << '\n';
    } else if (*analyze) {
      auto bundle = cli::cmd_analyze(cfg);
      std::cerr << "analyzed " << bundle.essay_metrics.size() << " essays -> " << cfg.out.string()
                << '\n';
    } else if (*synth) {
      cli::cmd_synth(cfg);
      std::cerr << "wrote synthetic corpus to " << cfg.out.string() << '\n';
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitInput;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return cli::kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cli::kExitInput;
  }
  return cli::kExitOk;
}
