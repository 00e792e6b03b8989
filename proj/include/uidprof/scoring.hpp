#pragma once

// Scores manifest essays with the built-in n-gram backend.

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "uidprof/ingestion.hpp"
#include "uidprof/ngram.hpp"

namespace uidprof {

inline EssayRecord score_essay(const NgramModel& model, const ManifestEntry& entry,
                               bool keep_text = false) {
  if (!std::filesystem::exists(entry.text_path))
    throw InputError("essay '" + entry.essay_id + "': text file not found: " +
                     entry.text_path.string());
  const auto tokens = split_whitespace(read_file(entry.text_path));
  if (tokens.empty()) throw DataError("essay '" + entry.essay_id + "': no tokens");
  return {entry.essay_id, entry.label(), model.score_sequence(tokens, keep_text)};
}

/// Scores every entry with up to `workers` threads; output keeps manifest order.
/// The first failure (in manifest order) is rethrown after all workers stop.
inline std::vector<EssayRecord> score_manifest(const NgramModel& model,
                                               const CorpusManifest& manifest,
                                               unsigned workers = 1, bool keep_text = false) {
  const std::size_t n = manifest.entries.size();
  std::vector<EssayRecord> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        out[i] = score_essay(model, manifest.entries[i], keep_text);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace uidprof
