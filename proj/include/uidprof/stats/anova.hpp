#pragma once

// One-way ANOVA, eta squared, and Tukey HSD pairwise comparisons.

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "uidprof/error.hpp"
#include "uidprof/stats/distributions.hpp"
#include "uidprof/util.hpp"

namespace uidprof::stats {

using GroupedValues = std::map<std::string, std::vector<double>>;

struct AnovaResult {
  double f_value = 0.0;
  long df_between = 0;
  long df_within = 0;
  double p_value = 1.0;
  double eta_squared = 0.0;
  double ss_between = 0.0;
  double ss_within = 0.0;
};

struct Decomposition {
  double ss_between = 0.0;
  double ss_within = 0.0;
  std::size_t n_total = 0;
  std::size_t n_groups = 0;
  std::map<std::string, double> means;
  std::map<std::string, std::size_t> sizes;
};

/// Between/within sums of squares. Group means are taken first, so the result
/// does not depend on the order of observations inside a group beyond rounding.
inline Decomposition decompose(const GroupedValues& groups) {
  if (groups.size() < 2) throw InputError("need ≥ 2 groups for ANOVA, got " + std::to_string(groups.size()));
  Decomposition d;
  CompensatedSum grand;
  for (const auto& [name, xs] : groups) {
    if (xs.size() < 2)
      throw InputError("group '" + name + "' has " + std::to_string(xs.size()) +
                       " observation(s); need >= 2");
    CompensatedSum s;
    for (double x : xs) s.add(x);
    d.means[name] = s.value() / static_cast<double>(xs.size());
    d.sizes[name] = xs.size();
    grand.add(s.value());
    d.n_total += xs.size();
  }
  d.n_groups = groups.size();
  const double grand_mean = grand.value() / static_cast<double>(d.n_total);
  CompensatedSum ssb, ssw;
  for (const auto& [name, xs] : groups) {
    const double m = d.means.at(name);
    ssb.add(static_cast<double>(xs.size()) * (m - grand_mean) * (m - grand_mean));
    for (double x : xs) ssw.add((x - m) * (x - m));
  }
  d.ss_between = ssb.value();
  d.ss_within = ssw.value();
  return d;
}

inline AnovaResult one_way_anova(const GroupedValues& groups) {
  const auto d = decompose(groups);
  AnovaResult r;
  r.df_between = static_cast<long>(d.n_groups) - 1;
  r.df_within = static_cast<long>(d.n_total) - static_cast<long>(d.n_groups);
  r.ss_between = d.ss_between;
  r.ss_within = d.ss_within;
  if (d.ss_within == 0.0 && d.ss_between == 0.0) throw DataError("degenerate data");
  const double total = d.ss_between + d.ss_within;
  r.eta_squared = d.ss_between / total;
  if (d.ss_within == 0.0) {
    r.f_value = std::numeric_limits<double>::infinity();
    r.p_value = 0.0;
  } else {
    r.f_value = (d.ss_between / static_cast<double>(r.df_between)) /
                (d.ss_within / static_cast<double>(r.df_within));
    r.p_value = f_upper_tail(r.f_value, static_cast<double>(r.df_between),
                             static_cast<double>(r.df_within));
  }
  return r;
}

/// SS_between / SS_total.
inline double eta_squared(const GroupedValues& groups) {
  const auto d = decompose(groups);
  const double total = d.ss_between + d.ss_within;
  if (total == 0.0) throw DataError("degenerate data");
  return d.ss_between / total;
}

// ---------------------------------------------------------------------------
// Tukey HSD (Tukey-Kramer for unequal sizes).

struct PosthocTable {
  std::vector<std::string> levels;
  std::vector<std::vector<double>> diff;   // diff[i][j] = mean(levels[i]) - mean(levels[j])
  std::vector<std::vector<double>> p_adj;  // 1 on the diagonal
  std::vector<std::vector<double>> q_stat;
  std::vector<std::vector<bool>> significant;
  double alpha = 0.05;
  double mse = 0.0;
  long df_within = 0;
};

inline PosthocTable posthoc_pairwise(const GroupedValues& groups, double alpha = 0.05) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  const auto d = decompose(groups);
  if (d.ss_within == 0.0 && d.ss_between == 0.0) throw DataError("degenerate data");

  PosthocTable t;
  t.alpha = alpha;
  t.df_within = static_cast<long>(d.n_total - d.n_groups);
  t.mse = d.ss_within / static_cast<double>(t.df_within);
  for (const auto& [name, _] : groups) t.levels.push_back(name);
  const std::size_t k = t.levels.size();
  t.diff.assign(k, std::vector<double>(k, 0.0));
  t.p_adj.assign(k, std::vector<double>(k, 1.0));
  t.q_stat.assign(k, std::vector<double>(k, 0.0));
  t.significant.assign(k, std::vector<bool>(k, false));

  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const auto& a = t.levels[i];
      const auto& b = t.levels[j];
      const double diff = d.means.at(a) - d.means.at(b);
      const double se = std::sqrt(0.5 * t.mse *
                                  (1.0 / static_cast<double>(d.sizes.at(a)) +
                                   1.0 / static_cast<double>(d.sizes.at(b))));
      double q = 0.0;
      double p = 1.0;
      if (diff != 0.0) {
        q = se > 0.0 ? std::abs(diff) / se : std::numeric_limits<double>::infinity();
        p = studentized_range_upper_tail(q, static_cast<int>(k), static_cast<double>(t.df_within));
      }
      t.diff[i][j] = diff;
      t.diff[j][i] = -diff;
      t.q_stat[i][j] = t.q_stat[j][i] = q;
      t.p_adj[i][j] = t.p_adj[j][i] = p;
      t.significant[i][j] = t.significant[j][i] = p < alpha;
    }
  }
  return t;
}

}  // namespace uidprof::stats
