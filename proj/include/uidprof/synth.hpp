#pragma once

// Synthetic corpora with known generating parameters.
//
// Scores mode draws token surprisal/entropy directly from a random-intercept
// model whose proficiency means are ordered by construction (surprisal rises and
// entropy falls from low proficiency to native). Text mode additionally writes
// plain-text essays, a training corpus and a manifest for the n-gram pipeline.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uidprof/core_types.hpp"
#include "uidprof/ingestion.hpp"
#include "uidprof/util.hpp"

namespace uidprof {

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t essays_per_group = 50;
  std::size_t min_tokens = 120;
  std::size_t max_tokens = 400;
  bool with_text = false;
  std::size_t training_sentences = 400;
};

struct SynthGroupParams {
  Proficiency proficiency;
  double surprisal_mean;
  double entropy_mean;
  double predictable_share;  // text mode: share of tokens drawn from the predictable chain
};

inline constexpr std::array<SynthGroupParams, 4> kSynthGroups{{
    {Proficiency::low, 4.8, 7.6, 0.70},
    {Proficiency::medium, 5.6, 7.0, 0.55},
    {Proficiency::high, 6.3, 6.6, 0.40},
    {Proficiency::native, 7.0, 6.1, 0.30},
}};

inline constexpr std::array<const char*, 11> kSynthL1Codes{
    "ARA", "CHI", "FRE", "GER", "HIN", "ITA", "JPN", "KOR", "SPA", "TEL", "TUR"};
inline constexpr const char* kNativeL1 = "ENG_NATIVE";

struct SynthNoise {
  double essay_sd = 0.6;
  double surprisal_sd = 1.2;
  double entropy_sd = 0.8;
  double position_slope = -0.001;
  double l1_step = 0.05;  // L1 offset = (index - 5) * l1_step
};

struct SynthCorpus {
  std::vector<EssayRecord> records;
  nlohmann::json ground_truth;
};

inline std::string synth_essay_id(Proficiency p, std::size_t i) {
  std::ostringstream os;
  os << to_string(p) << '_';
  os.width(4);
  os.fill('0');
  os << i;
  return os.str();
}

inline SynthCorpus synthesize_scores(const SynthConfig& cfg, const SynthNoise& noise = {}) {
  if (cfg.essays_per_group < 1) throw InputError("essays per group must be >= 1");
  if (cfg.min_tokens < 1 || cfg.max_tokens < cfg.min_tokens)
    throw InputError("token length range must satisfy 1 <= min <= max");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> z(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> len(cfg.min_tokens, cfg.max_tokens);

  SynthCorpus out;
  for (const auto& g : kSynthGroups) {
    for (std::size_t e = 0; e < cfg.essays_per_group; ++e) {
      EssayRecord r;
      r.essay_id = synth_essay_id(g.proficiency, e);
      r.label.proficiency = g.proficiency;
      double l1_offset = 0.0;
      if (g.proficiency == Proficiency::native) {
        r.label.l1 = kNativeL1;
      } else {
        const std::size_t idx = e % kSynthL1Codes.size();
        r.label.l1 = kSynthL1Codes[idx];
        l1_offset = (static_cast<double>(idx) - 5.0) * noise.l1_step;
      }
      const double b_s = noise.essay_sd * z(rng);
      const double b_h = noise.essay_sd * z(rng);
      const std::size_t n = len(rng);
      r.scores.reserve(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double trend = noise.position_slope * static_cast<double>(i);
        const double s = g.surprisal_mean + l1_offset + b_s + trend + noise.surprisal_sd * z(rng);
        const double h = g.entropy_mean - l1_offset + b_h - trend + noise.entropy_sd * z(rng);
        r.scores.push_back({i, std::max(0.0, s), std::max(0.0, h), std::nullopt});
      }
      out.records.push_back(std::move(r));
    }
  }

  using nlohmann::json;
  json groups = json::array();
  const auto& native = kSynthGroups.back();
  for (const auto& g : kSynthGroups)
    groups.push_back({{"proficiency", to_string(g.proficiency)},
                      {"surprisal_mean", g.surprisal_mean},
                      {"entropy_mean", g.entropy_mean},
                      {"surprisal_beta_vs_native", g.surprisal_mean - native.surprisal_mean},
                      {"entropy_beta_vs_native", g.entropy_mean - native.entropy_mean}});
  out.ground_truth = {{"seed", cfg.seed},
                      {"essays_per_group", cfg.essays_per_group},
                      {"min_tokens", cfg.min_tokens},
                      {"max_tokens", cfg.max_tokens},
                      {"essay_intercept_sd", noise.essay_sd},
                      {"surprisal_noise_sd", noise.surprisal_sd},
                      {"entropy_noise_sd", noise.entropy_sd},
                      {"position_slope_surprisal", noise.position_slope},
                      {"position_slope_entropy", -noise.position_slope},
                      {"l1_step", noise.l1_step},
                      {"values_clamped_at_zero", true},
                      {"groups", groups}};
  return out;
}

// ---------------------------------------------------------------------------
// Text mode

/// Word generator: with probability `predictable_share` the next word follows a
/// fixed successor chain over a small core vocabulary, otherwise it is drawn
/// uniformly from the full vocabulary.
class SynthTextGenerator {
 public:
  static constexpr std::size_t kVocab = 240;
  static constexpr std::size_t kCore = 24;

  explicit SynthTextGenerator(std::uint64_t seed) : rng_(seed) {}

  std::vector<std::string> sentence(double predictable_share, std::size_t n_words) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> any(0, kVocab - 1);
    std::uniform_int_distribution<std::size_t> core(0, kCore - 1);
    std::vector<std::string> words;
    std::size_t prev = core(rng_);
    for (std::size_t i = 0; i < n_words; ++i) {
      const std::size_t w = (u(rng_) < predictable_share && prev < kCore) ? (prev * 7 + 3) % kCore
                            : (u(rng_) < 0.5)                               ? core(rng_)
                                                                            : any(rng_);
      words.push_back(word(w));
      prev = w;
    }
    return words;
  }

  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }

  static std::string word(std::size_t i) { return "w" + std::to_string(i); }

 private:
  std::mt19937_64 rng_;
};

/// Writes scores.jsonl, ground_truth.json and, in text mode, essays/, train.txt
/// and manifest.tsv under `out_dir`.
inline void write_synthetic_corpus(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  auto corpus = synthesize_scores(cfg);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create output directory: " + out_dir.string());

  if (cfg.with_text) {
    SynthTextGenerator gen(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    std::ostringstream manifest;
    manifest << "essay_id\tpath\tl1\tproficiency\n";
    std::map<std::string, std::string> texts;
    for (const auto& r : corpus.records) {
      const auto& g = kSynthGroups[static_cast<std::size_t>(r.label.proficiency)];
      std::ostringstream text;
      const std::size_t n_sent = gen.uniform(6, 12);
      for (std::size_t s = 0; s < n_sent; ++s) {
        auto words = gen.sentence(g.predictable_share, gen.uniform(8, 18));
        for (std::size_t i = 0; i < words.size(); ++i) text << (i ? " " : "") << words[i];
        text << '\n';
      }
      const std::string rel = "essays/" + r.essay_id + ".txt";
      texts[rel] = text.str();
      manifest << r.essay_id << '\t' << rel << '\t' << r.label.l1 << '\t'
               << to_string(r.label.proficiency) << '\n';
    }
    std::ostringstream train;
    for (std::size_t s = 0; s < cfg.training_sentences; ++s) {
      auto words = gen.sentence(kSynthGroups.back().predictable_share, gen.uniform(8, 18));
      for (std::size_t i = 0; i < words.size(); ++i) train << (i ? " " : "") << words[i];
      train << '\n';
    }
    for (const auto& [rel, content] : texts) write_file_atomic(out_dir / rel, content);
    write_file_atomic(out_dir / "train.txt", train.str());
    write_file_atomic(out_dir / "manifest.tsv", manifest.str());
  }
  write_scores(corpus.records, out_dir / "scores.jsonl");
  write_file_atomic(out_dir / "ground_truth.json", corpus.ground_truth.dump(2) + "\n");
}

}  // namespace uidprof
