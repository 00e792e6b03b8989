#pragma once

// Position-indexed group curves over the leading tokens of each essay.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "uidprof/core_types.hpp"
#include "uidprof/ingestion.hpp"
#include "uidprof/util.hpp"

namespace uidprof {

struct ProfileRow {
  std::size_t position = 0;
  std::size_t n_essays = 0;
  double mean = 0.0;
  double std_dev = 0.0;  // sample SD (n-1); 0 when n_essays == 1
};

struct PositionProfile {
  std::string group;
  Factor factor = Factor::proficiency;
  Metric metric = Metric::surprisal;
  std::size_t window = 1;
  std::vector<ProfileRow> rows;
};

/// Centered moving average. Windows are truncated at the sequence edges and
/// average over the neighbours that exist.
inline std::vector<double> moving_average(const std::vector<double>& xs, std::size_t window) {
  if (window == 0 || window % 2 == 0) throw InputError("smoothing window must be a positive odd integer");
  if (window == 1) return xs;
  const std::size_t half = window / 2;
  std::vector<double> out(xs.size());
  for (std::size_t p = 0; p < xs.size(); ++p) {
    const std::size_t lo = p >= half ? p - half : 0;
    const std::size_t hi = std::min(xs.size() - 1, p + half);
    CompensatedSum s;
    for (std::size_t q = lo; q <= hi; ++q) s.add(xs[q]);
    out[p] = s.value() / static_cast<double>(hi - lo + 1);
  }
  return out;
}

/// Per-position mean/SD for one group. Essays contribute only to positions they
/// reach (no zero-padding); sequences are cut to `max_tokens` first.
inline PositionProfile profile_for_group(const std::vector<const EssayRecord*>& essays,
                                         const std::string& group, Factor factor, Metric metric,
                                         std::size_t max_tokens = 300, std::size_t window = 1) {
  if (essays.empty()) throw InputError("empty group: " + group);
  if (window == 0 || window % 2 == 0) throw InputError("smoothing window must be a positive odd integer");
  if (max_tokens == 0) throw InputError("max_tokens must be >= 1");

  std::size_t len = 0;
  for (const auto* e : essays) len = std::max(len, std::min(e->scores.size(), max_tokens));

  // Welford per position, in input order.
  std::vector<std::size_t> n(len, 0);
  std::vector<double> mu(len, 0.0), m2(len, 0.0);
  for (const auto* e : essays) {
    const std::size_t upto = std::min(e->scores.size(), max_tokens);
    for (std::size_t p = 0; p < upto; ++p) {
      const double x = metric_value(e->scores[p], metric);
      ++n[p];
      const double d = x - mu[p];
      mu[p] += d / static_cast<double>(n[p]);
      m2[p] += d * (x - mu[p]);
    }
  }

  const auto smoothed = moving_average(mu, window);
  PositionProfile prof{group, factor, metric, window, {}};
  prof.rows.reserve(len);
  for (std::size_t p = 0; p < len; ++p) {
    const double sd = n[p] > 1 ? std::sqrt(m2[p] / static_cast<double>(n[p] - 1)) : 0.0;
    prof.rows.push_back({p, n[p], smoothed[p], sd});
  }
  return prof;
}

/// One profile per group level, ordered by group key.
inline std::vector<PositionProfile> build_profiles(const std::vector<EssayRecord>& records,
                                                   Factor group_by, Metric metric,
                                                   std::size_t max_tokens = 300,
                                                   std::size_t window = 1) {
  std::map<std::string, std::vector<const EssayRecord*>> groups;
  for (const auto& r : records) groups[group_key(r.label, group_by)].push_back(&r);
  std::vector<PositionProfile> out;
  for (const auto& [key, essays] : groups)
    out.push_back(profile_for_group(essays, key, group_by, metric, max_tokens, window));
  return out;
}

/// Profile for a single named group; throws if no essay belongs to it.
inline PositionProfile build_profile(const std::vector<EssayRecord>& records,
                                     const std::string& group, Factor group_by, Metric metric,
                                     std::size_t max_tokens = 300, std::size_t window = 1) {
  std::vector<const EssayRecord*> essays;
  for (const auto& r : records)
    if (group_key(r.label, group_by) == group) essays.push_back(&r);
  return profile_for_group(essays, group, group_by, metric, max_tokens, window);
}

inline void write_profiles_csv(std::ostream& out, const std::vector<PositionProfile>& profiles) {
  out << "group,metric,position,n,mean,sd\n";
  for (const auto& p : profiles)
    for (const auto& r : p.rows)
      out << p.group << ',' << to_string(p.metric) << ',' << r.position << ',' << r.n_essays << ','
          << format_double(r.mean) << ',' << format_double(r.std_dev) << '\n';
}

}  // namespace uidprof
