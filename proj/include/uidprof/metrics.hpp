#pragma once

// Information measures: surprisal, next-token entropy, and the UID score
// (population variance of surprisal), plus essay-level aggregation.

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>

#include "uidprof/core_types.hpp"
#include "uidprof/util.hpp"

namespace uidprof {

/// -log2 p for p in (0, 1].
inline double surprisal_bits(double p) {
  if (!(p > 0.0 && p <= 1.0))
    throw std::domain_error("surprisal_bits: probability must lie in (0, 1], got " +
                            format_double(p));
  return p == 1.0 ? 0.0 : -std::log2(p);
}

inline constexpr double kDistributionSumTolerance = 1e-9;

/// -sum p log2 p with 0 log 0 := 0. The input must be normalized within 1e-9.
inline double entropy_bits(std::span<const double> dist) {
  CompensatedSum total;
  CompensatedSum h;
  for (double p : dist) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw std::domain_error("entropy_bits: entries must be finite and non-negative");
    total.add(p);
    if (p > 0.0) h.add(-p * std::log2(p));
  }
  if (std::abs(total.value() - 1.0) > kDistributionSumTolerance)
    throw std::domain_error("entropy_bits: distribution sums to " + format_double(total.value()) +
                            ", not 1");
  return std::max(0.0, h.value());
}

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty list");
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value() / static_cast<double>(xs.size());
}

/// Population variance (divisor |y|) of the surprisal sequence.
inline double uid_score(std::span<const double> surprisals) {
  if (surprisals.empty()) throw std::invalid_argument("uid_score: empty surprisal list");
  const double m = mean(surprisals);
  CompensatedSum ss;
  for (double y : surprisals) ss.add((y - m) * (y - m));
  return ss.value() / static_cast<double>(surprisals.size());
}

/// Means and UID over all tokens of the essay (no truncation).
inline EssayMetrics essay_metrics(const EssayRecord& record) {
  if (record.scores.empty())
    throw std::invalid_argument("essay '" + record.essay_id + "': uid_score: empty surprisal list");
  std::vector<double> s, h;
  s.reserve(record.scores.size());
  h.reserve(record.scores.size());
  for (const auto& t : record.scores) {
    s.push_back(t.surprisal_bits);
    h.push_back(t.entropy_bits);
  }
  EssayMetrics m;
  m.essay_id = record.essay_id;
  m.label = record.label;
  m.mean_surprisal_bits = mean(s);
  m.mean_entropy_bits = mean(h);
  m.uid_score = uid_score(s);
  m.token_count = record.scores.size();
  return m;
}

/// Essay-level metric selector (the per-essay analogues of the token metrics).
enum class EssayMetric { mean_surprisal, mean_entropy, uid };

inline constexpr EssayMetric kAllEssayMetrics[] = {EssayMetric::mean_surprisal,
                                                   EssayMetric::mean_entropy, EssayMetric::uid};

inline std::string_view to_string(EssayMetric m) {
  switch (m) {
    case EssayMetric::mean_surprisal: return "mean_surprisal";
    case EssayMetric::mean_entropy: return "mean_entropy";
    case EssayMetric::uid: return "uid";
  }
  return "?";
}

inline double value_of(const EssayMetrics& m, EssayMetric which) {
  switch (which) {
    case EssayMetric::mean_surprisal: return m.mean_surprisal_bits;
    case EssayMetric::mean_entropy: return m.mean_entropy_bits;
    case EssayMetric::uid: return m.uid_score;
  }
  return 0.0;
}

}  // namespace uidprof
