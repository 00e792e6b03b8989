#pragma once

// Shared domain types. All information quantities are in bits (log base 2).

#include <cmath>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "uidprof/error.hpp"

namespace uidprof {

enum class Proficiency { low, medium, high, native };

inline constexpr Proficiency kAllProficiencies[] = {
    Proficiency::low, Proficiency::medium, Proficiency::high, Proficiency::native};

inline std::string_view to_string(Proficiency p) {
  switch (p) {
    case Proficiency::low: return "low";
    case Proficiency::medium: return "medium";
    case Proficiency::high: return "high";
    case Proficiency::native: return "native";
  }
  return "?";
}

inline std::optional<Proficiency> parse_proficiency(std::string_view s) {
  for (auto p : kAllProficiencies)
    if (to_string(p) == s) return p;
  return std::nullopt;
}

struct TokenScore {
  std::size_t position = 0;
  double surprisal_bits = 0.0;
  double entropy_bits = 0.0;
  std::optional<std::string> token_text;  // diagnostic only

  friend bool operator==(const TokenScore&, const TokenScore&) = default;
};

struct GroupLabel {
  std::string l1;
  Proficiency proficiency = Proficiency::low;

  friend bool operator==(const GroupLabel&, const GroupLabel&) = default;
};

struct EssayRecord {
  std::string essay_id;
  GroupLabel label;
  std::vector<TokenScore> scores;

  friend bool operator==(const EssayRecord&, const EssayRecord&) = default;
};

struct EssayMetrics {
  std::string essay_id;
  GroupLabel label;
  double mean_surprisal_bits = 0.0;
  double mean_entropy_bits = 0.0;
  double uid_score = 0.0;  // bits^2
  std::size_t token_count = 0;
};

/// Grouping factor used by profiles, ANOVA and boxplots.
enum class Factor { l1, proficiency };

inline std::string_view to_string(Factor f) {
  return f == Factor::l1 ? "l1" : "proficiency";
}

inline std::string group_key(const GroupLabel& label, Factor f) {
  return f == Factor::l1 ? label.l1 : std::string(to_string(label.proficiency));
}

enum class Metric { surprisal, entropy };

inline std::string_view to_string(Metric m) {
  return m == Metric::surprisal ? "surprisal" : "entropy";
}

inline double metric_value(const TokenScore& t, Metric m) {
  return m == Metric::surprisal ? t.surprisal_bits : t.entropy_bits;
}

// ---------------------------------------------------------------------------
// Validation

enum class ViolationCode {
  empty_essay_id,
  empty_score_sequence,
  position_gap,
  negative_surprisal,
  nonfinite_surprisal,
  negative_entropy,
  nonfinite_entropy,
  duplicate_essay_id,
};

inline std::string_view to_string(ViolationCode c) {
  switch (c) {
    case ViolationCode::empty_essay_id: return "empty essay id";
    case ViolationCode::empty_score_sequence: return "empty score sequence";
    case ViolationCode::position_gap: return "non-consecutive position";
    case ViolationCode::negative_surprisal: return "negative surprisal";
    case ViolationCode::nonfinite_surprisal: return "non-finite surprisal";
    case ViolationCode::negative_entropy: return "negative entropy";
    case ViolationCode::nonfinite_entropy: return "non-finite entropy";
    case ViolationCode::duplicate_essay_id: return "duplicate essay id";
  }
  return "?";
}

struct Violation {
  ViolationCode code;
  std::optional<std::size_t> position;  // token index, when the violation is token-level
  std::string message;
};

using ValidationReport = std::vector<Violation>;

/// Checks every TokenScore and EssayRecord invariant. Never throws on bad data.
inline ValidationReport validate_record(const EssayRecord& record) {
  ValidationReport report;
  auto add = [&](ViolationCode code, std::optional<std::size_t> pos) {
    std::string msg = "essay '" + record.essay_id + "'";
    if (pos) msg += " position " + std::to_string(*pos);
    msg += ": ";
    msg += to_string(code);
    report.push_back({code, pos, std::move(msg)});
  };

  if (record.essay_id.empty()) add(ViolationCode::empty_essay_id, std::nullopt);
  if (record.scores.empty()) add(ViolationCode::empty_score_sequence, std::nullopt);

  for (std::size_t i = 0; i < record.scores.size(); ++i) {
    const auto& t = record.scores[i];
    if (t.position != i) add(ViolationCode::position_gap, i);
    if (!std::isfinite(t.surprisal_bits))
      add(ViolationCode::nonfinite_surprisal, i);
    else if (t.surprisal_bits < 0.0)
      add(ViolationCode::negative_surprisal, i);
    if (!std::isfinite(t.entropy_bits))
      add(ViolationCode::nonfinite_entropy, i);
    else if (t.entropy_bits < 0.0)
      add(ViolationCode::negative_entropy, i);
  }
  return report;
}

/// Per-record validation plus corpus-level essay_id uniqueness.
inline ValidationReport validate_corpus(const std::vector<EssayRecord>& records) {
  ValidationReport report;
  std::set<std::string_view> seen;
  for (const auto& r : records) {
    auto sub = validate_record(r);
    report.insert(report.end(), sub.begin(), sub.end());
    if (!seen.insert(r.essay_id).second)
      report.push_back({ViolationCode::duplicate_essay_id, std::nullopt,
                        "essay '" + r.essay_id + "': duplicate essay id"});
  }
  return report;
}

}  // namespace uidprof
