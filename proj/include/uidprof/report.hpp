#pragma once

// Group summaries behind the boxplot figures and the native-speaker reference band.

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "uidprof/core_types.hpp"
#include "uidprof/error.hpp"
#include "uidprof/metrics.hpp"
#include "uidprof/stats/anova.hpp"
#include "uidprof/stats/lmm.hpp"
#include "uidprof/util.hpp"

namespace uidprof {

/// Linear interpolation between order statistics (R type 7): h = (n-1) p.
inline double percentile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InputError("percentile of empty sample");
  if (p <= 0.0) return sorted.front();
  if (p >= 1.0) return sorted.back();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline double median_sorted(const double* first, std::size_t n) {
  return n % 2 ? first[n / 2] : 0.5 * (first[n / 2 - 1] + first[n / 2]);
}

struct BoxplotSummary {
  std::string group;
  EssayMetric metric = EssayMetric::mean_surprisal;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0, mean = 0;
  std::size_t n = 0;
};

/// Quartiles are medians of the lower and upper halves; for odd n the overall
/// median belongs to neither half. A single value fills all five points.
inline BoxplotSummary summarize(std::vector<double> values, std::string group, EssayMetric metric) {
  if (values.empty()) throw InputError("empty group: " + group);
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  BoxplotSummary b{std::move(group), metric};
  b.n = n;
  b.min = values.front();
  b.max = values.back();
  b.median = median_sorted(values.data(), n);
  if (n == 1) {
    b.q1 = b.q3 = values.front();
  } else {
    const std::size_t half = n / 2;
    b.q1 = median_sorted(values.data(), half);
    b.q3 = median_sorted(values.data() + (n - half), half);
  }
  b.mean = uidprof::mean(values);
  return b;
}

inline std::vector<BoxplotSummary> boxplot_summary(const std::vector<EssayMetrics>& metrics,
                                                   Factor group_by, EssayMetric metric) {
  std::map<std::string, std::vector<double>> groups;
  for (const auto& m : metrics) groups[group_key(m.label, group_by)].push_back(value_of(m, metric));
  if (groups.empty()) throw InputError("boxplot_summary: no essays");
  std::vector<BoxplotSummary> out;
  for (auto& [key, vals] : groups) out.push_back(summarize(std::move(vals), key, metric));
  return out;
}

struct ReferenceBand {
  EssayMetric metric = EssayMetric::mean_surprisal;
  double mean = 0.0;
  double lower = 0.0;  // 2.5th percentile
  double upper = 0.0;  // 97.5th percentile
  std::size_t n = 0;
  bool small_sample = false;  // fewer than 20 essays
};

inline constexpr std::size_t kMinReferenceEssays = 20;

/// Central 95% interval of the native group's essay-level values plus their mean.
inline ReferenceBand native_reference_band(const std::vector<double>& native_values,
                                           EssayMetric metric) {
  if (native_values.empty()) throw InputError("native reference band: no native essays");
  auto sorted = native_values;
  std::sort(sorted.begin(), sorted.end());
  ReferenceBand band;
  band.metric = metric;
  band.n = sorted.size();
  band.mean = uidprof::mean(sorted);
  band.lower = percentile_sorted(sorted, 0.025);
  band.upper = percentile_sorted(sorted, 0.975);
  // Rounding can push the mean of a constant sample a hair outside its zero-width
  // band. Genuine excursions (extreme skew) are reported as they are.
  const double slack = 1e-12 * std::max(1.0, std::abs(band.mean));
  if (band.mean < band.lower && band.lower - band.mean <= slack) band.mean = band.lower;
  if (band.mean > band.upper && band.mean - band.upper <= slack) band.mean = band.upper;
  band.small_sample = band.n < kMinReferenceEssays;
  return band;
}

inline ReferenceBand native_reference_band(const std::vector<EssayMetrics>& metrics,
                                           EssayMetric metric) {
  std::vector<double> vals;
  for (const auto& m : metrics)
    if (m.label.proficiency == Proficiency::native) vals.push_back(value_of(m, metric));
  return native_reference_band(vals, metric);
}

// ---------------------------------------------------------------------------
// CSV writers

inline void write_boxplot_csv(std::ostream& out, const std::vector<BoxplotSummary>& rows) {
  out << "group,metric,n,min,q1,median,q3,max,mean\n";
  for (const auto& b : rows)
    out << b.group << ',' << to_string(b.metric) << ',' << b.n << ',' << format_double(b.min) << ','
        << format_double(b.q1) << ',' << format_double(b.median) << ',' << format_double(b.q3)
        << ',' << format_double(b.max) << ',' << format_double(b.mean) << '\n';
}

inline void write_reference_band_csv(std::ostream& out, const std::vector<ReferenceBand>& bands) {
  out << "metric,n,mean,lower_2_5,upper_97_5\n";
  for (const auto& b : bands)
    out << to_string(b.metric) << ',' << b.n << ',' << format_double(b.mean) << ','
        << format_double(b.lower) << ',' << format_double(b.upper) << '\n';
}

inline void write_essay_metrics_csv(std::ostream& out, const std::vector<EssayMetrics>& rows) {
  out << "essay_id,l1,proficiency,token_count,mean_surprisal_bits,mean_entropy_bits,uid_bits2\n";
  for (const auto& m : rows)
    out << m.essay_id << ',' << m.label.l1 << ',' << to_string(m.label.proficiency) << ','
        << m.token_count << ',' << format_double(m.mean_surprisal_bits) << ','
        << format_double(m.mean_entropy_bits) << ',' << format_double(m.uid_score) << '\n';
}

struct LmmTable {
  std::string response;
  stats::LmmFit fit;
};

inline void write_lmm_csv(std::ostream& out, const std::vector<LmmTable>& tables) {
  out << "response,term,beta,se,z,p\n";
  for (const auto& t : tables)
    for (std::size_t i = 0; i < t.fit.terms.size(); ++i)
      out << t.response << ',' << t.fit.terms[i] << ',' << format_double(t.fit.beta[i]) << ','
          << format_double(t.fit.se[i]) << ',' << format_double(t.fit.z[i]) << ','
          << format_double(t.fit.p_value[i]) << '\n';
}

struct AnovaEntry {
  std::string metric;
  std::string stratum;  // "all" or a proficiency level
  std::string factor;
  stats::AnovaResult result;
  stats::PosthocTable posthoc;
};

inline void write_anova_csv(std::ostream& out, const std::vector<AnovaEntry>& rows) {
  out << "metric,factor,stratum,F,df_between,df_within,p,eta_squared\n";
  for (const auto& e : rows)
    out << e.metric << ',' << e.factor << ',' << e.stratum << ',' << format_double(e.result.f_value)
        << ',' << e.result.df_between << ',' << e.result.df_within << ','
        << format_double(e.result.p_value) << ',' << format_double(e.result.eta_squared) << '\n';
}

inline void write_posthoc_csv(std::ostream& out, const std::vector<AnovaEntry>& rows) {
  out << "metric,factor,stratum,row,col,diff,p_adj,significant\n";
  for (const auto& e : rows) {
    const auto& t = e.posthoc;
    for (std::size_t i = 0; i < t.levels.size(); ++i)
      for (std::size_t j = 0; j < t.levels.size(); ++j) {
        if (i == j) continue;
        out << e.metric << ',' << e.factor << ',' << e.stratum << ',' << t.levels[i] << ','
            << t.levels[j] << ',' << format_double(t.diff[i][j]) << ','
            << format_double(t.p_adj[i][j]) << ',' << (t.significant[i][j] ? "true" : "false")
            << '\n';
      }
  }
}

}  // namespace uidprof
