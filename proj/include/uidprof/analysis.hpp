#pragma once

// End-to-end analysis: essay metrics, position profiles, ANOVA with post-hoc
// tables (overall and per proficiency stratum), mixed models per token metric,
// boxplot summaries and the native reference band, bundled for output.

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uidprof/core_types.hpp"
#include "uidprof/error.hpp"
#include "uidprof/ingestion.hpp"
#include "uidprof/metrics.hpp"
#include "uidprof/position_profile.hpp"
#include "uidprof/report.hpp"
#include "uidprof/stats/anova.hpp"
#include "uidprof/stats/lmm.hpp"
#include "uidprof/util.hpp"

namespace uidprof {

enum class MetricSelection { surprisal, entropy, uid, all };

inline std::optional<MetricSelection> parse_metric_selection(std::string_view s) {
  if (s == "surprisal") return MetricSelection::surprisal;
  if (s == "entropy") return MetricSelection::entropy;
  if (s == "uid") return MetricSelection::uid;
  if (s == "all") return MetricSelection::all;
  return std::nullopt;
}

inline std::string_view to_string(MetricSelection m) {
  switch (m) {
    case MetricSelection::surprisal: return "surprisal";
    case MetricSelection::entropy: return "entropy";
    case MetricSelection::uid: return "uid";
    case MetricSelection::all: return "all";
  }
  return "?";
}

struct AnalysisConfig {
  Factor group_by = Factor::l1;
  MetricSelection metrics = MetricSelection::all;
  std::size_t max_tokens = 300;
  std::size_t window = 1;
  double alpha = 0.05;
};

inline std::vector<Metric> token_metrics(MetricSelection s) {
  switch (s) {
    case MetricSelection::surprisal: return {Metric::surprisal};
    case MetricSelection::entropy: return {Metric::entropy};
    case MetricSelection::uid: return {};
    case MetricSelection::all: return {Metric::surprisal, Metric::entropy};
  }
  return {};
}

inline std::vector<EssayMetric> essay_level_metrics(MetricSelection s) {
  switch (s) {
    case MetricSelection::surprisal: return {EssayMetric::mean_surprisal};
    case MetricSelection::entropy: return {EssayMetric::mean_entropy};
    case MetricSelection::uid: return {EssayMetric::uid};
    case MetricSelection::all:
      return {EssayMetric::mean_surprisal, EssayMetric::mean_entropy, EssayMetric::uid};
  }
  return {};
}

struct AnalysisBundle {
  AnalysisConfig config;
  std::vector<EssayMetrics> essay_metrics;
  std::vector<PositionProfile> profiles;
  std::vector<AnovaEntry> anova;
  std::vector<LmmTable> lmm;
  std::vector<BoxplotSummary> boxplots;
  std::vector<ReferenceBand> reference_bands;
  std::vector<std::string> notes;
};

inline constexpr const char* kProficiencyTermPrefix = "proficiency_";

/// Position + proficiency dummies (native is the reference level) over the
/// truncated token sequences, essays as the random-intercept grouping.
inline stats::LmmAccumulator build_lmm_design(const std::vector<EssayRecord>& records,
                                              Metric response, std::size_t max_tokens) {
  bool present[4] = {false, false, false, false};
  for (const auto& r : records) present[static_cast<int>(r.label.proficiency)] = true;
  if (!present[static_cast<int>(Proficiency::native)])
    throw InputError("LMM needs native essays as the reference level");

  std::vector<std::string> cols{"(Intercept)", "position"};
  std::vector<Proficiency> dummies;
  for (auto p : {Proficiency::low, Proficiency::medium, Proficiency::high})
    if (present[static_cast<int>(p)]) {
      dummies.push_back(p);
      cols.push_back(std::string(kProficiencyTermPrefix) + std::string(to_string(p)));
    }

  stats::LmmAccumulator acc(cols);
  std::vector<double> row(cols.size(), 0.0);
  for (const auto& r : records) {
    const std::size_t upto = std::min(r.scores.size(), max_tokens);
    for (std::size_t d = 0; d < dummies.size(); ++d)
      row[2 + d] = r.label.proficiency == dummies[d] ? 1.0 : 0.0;
    row[0] = 1.0;
    for (std::size_t i = 0; i < upto; ++i) {
      row[1] = static_cast<double>(r.scores[i].position);
      acc.add_row(r.essay_id, row, metric_value(r.scores[i], response));
    }
  }
  return acc;
}

inline stats::LmmFit fit_proficiency_lmm(const std::vector<EssayRecord>& records, Metric response,
                                         std::size_t max_tokens = 300) {
  auto acc = build_lmm_design(records, response, max_tokens);
  return stats::RandomInterceptReml(acc).fit();
}

namespace detail {

inline stats::GroupedValues group_values(const std::vector<EssayMetrics>& ms, Factor f,
                                         EssayMetric metric,
                                         const std::function<bool(const EssayMetrics&)>& keep) {
  stats::GroupedValues g;
  for (const auto& m : ms)
    if (keep(m)) g[group_key(m.label, f)].push_back(value_of(m, metric));
  return g;
}

}  // namespace detail

inline AnalysisBundle run_analysis(const std::vector<EssayRecord>& records,
                                   const AnalysisConfig& config) {
  if (config.max_tokens == 0) throw InputError("max_tokens must be >= 1");
  if (config.window == 0 || config.window % 2 == 0)
    throw InputError("smoothing window must be a positive odd integer");
  if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw InputError("alpha must lie in (0, 1)");
  if (records.empty()) throw InputError("no essays to analyze");
  if (auto report = validate_corpus(records); !report.empty())
    throw DataError(report.front().message);

  AnalysisBundle b;
  b.config = config;
  b.notes.push_back("units: surprisal and entropy in bits (log base 2); UID in bits^2");
  b.notes.push_back("essay-level metrics use all tokens; profiles and mixed models use the first " +
                    std::to_string(config.max_tokens) + " tokens");
  b.notes.push_back("mixed-model p-values: two-sided normal approximation to beta/SE");
  b.notes.push_back("post-hoc: Tukey HSD (Tukey-Kramer), family-wise alpha " +
                    format_double(config.alpha));
  b.notes.push_back("reference band: 2.5th-97.5th percentile of native essays (linear interpolation)");

  for (const auto& r : records) b.essay_metrics.push_back(essay_metrics(r));

  for (auto m : token_metrics(config.metrics)) {
    auto ps = build_profiles(records, config.group_by, m, config.max_tokens, config.window);
    b.profiles.insert(b.profiles.end(), ps.begin(), ps.end());
  }

  // ANOVA strata.
  auto add_anova = [&](EssayMetric metric, const std::string& stratum,
                       const stats::GroupedValues& groups) {
    AnovaEntry e;
    e.metric = std::string(to_string(metric));
    e.stratum = stratum;
    e.factor = std::string(to_string(config.group_by));
    e.result = stats::one_way_anova(groups);
    e.posthoc = stats::posthoc_pairwise(groups, config.alpha);
    b.anova.push_back(std::move(e));
  };

  const auto essay_ms = essay_level_metrics(config.metrics);
  if (config.group_by == Factor::proficiency) {
    for (auto metric : essay_ms) {
      auto groups = detail::group_values(b.essay_metrics, Factor::proficiency, metric,
                                         [](const EssayMetrics&) { return true; });
      if (groups.size() < 2)
        throw InputError("need ≥ 2 groups for grouping=proficiency, found " +
                         std::to_string(groups.size()));
      add_anova(metric, "all", groups);
    }
  } else {
    for (auto metric : essay_ms) {
      auto groups = detail::group_values(b.essay_metrics, Factor::l1, metric,
                                         [](const EssayMetrics& m) {
                                           return m.label.proficiency != Proficiency::native;
                                         });
      if (groups.size() < 2)
        throw InputError("need ≥ 2 groups for grouping=l1 among non-native essays, found " +
                         std::to_string(groups.size()));
      add_anova(metric, "all", groups);
      for (auto stratum : {Proficiency::low, Proficiency::medium, Proficiency::high}) {
        auto sg = detail::group_values(b.essay_metrics, Factor::l1, metric,
                                       [stratum](const EssayMetrics& m) {
                                         return m.label.proficiency == stratum;
                                       });
        const std::string name(to_string(stratum));
        if (sg.empty()) continue;
        try {
          add_anova(metric, name, sg);
        } catch (const std::exception& ex) {
          b.notes.push_back("anova " + std::string(to_string(metric)) + " stratum " + name +
                            " skipped: " + ex.what());
        }
      }
    }
  }

  // Mixed models.
  const bool has_native = std::any_of(records.begin(), records.end(), [](const EssayRecord& r) {
    return r.label.proficiency == Proficiency::native;
  });
  for (auto m : token_metrics(config.metrics)) {
    if (!has_native) {
      b.notes.push_back("mixed model for " + std::string(to_string(m)) +
                        " skipped: no native reference essays");
      continue;
    }
    b.lmm.push_back({std::string(to_string(m)), fit_proficiency_lmm(records, m, config.max_tokens)});
  }

  // Boxplots over non-native essays, native band as reference.
  std::vector<EssayMetrics> l2;
  for (const auto& m : b.essay_metrics)
    if (m.label.proficiency != Proficiency::native) l2.push_back(m);
  for (auto metric : essay_ms) {
    if (!l2.empty()) {
      auto box = boxplot_summary(l2, config.group_by, metric);
      b.boxplots.insert(b.boxplots.end(), box.begin(), box.end());
    }
    if (has_native) {
      auto band = native_reference_band(b.essay_metrics, metric);
      if (band.small_sample)
        b.notes.push_back("reference band for " + std::string(to_string(metric)) + " uses only " +
                          std::to_string(band.n) + " native essays (< 20)");
      b.reference_bands.push_back(band);
    }
  }
  if (!has_native) b.notes.push_back("reference band skipped: no native essays");
  return b;
}

// ---------------------------------------------------------------------------
// Output

struct BundleFiles {
  static constexpr const char* essay_metrics = "essay_metrics.csv";
  static constexpr const char* profiles = "profiles.csv";
  static constexpr const char* anova = "anova.csv";
  static constexpr const char* posthoc = "posthoc.csv";
  static constexpr const char* lmm = "lmm.csv";
  static constexpr const char* boxplot = "boxplot.csv";
  static constexpr const char* reference_band = "reference_band.csv";
  static constexpr const char* bundle = "bundle.json";
};

inline nlohmann::json bundle_json(const AnalysisBundle& b) {
  using nlohmann::json;
  json j;
  j["format"] = "uidprof-analysis";
  j["version"] = 1;
  j["config"] = {{"group_by", to_string(b.config.group_by)},
                 {"metrics", to_string(b.config.metrics)},
                 {"max_tokens", b.config.max_tokens},
                 {"window", b.config.window},
                 {"alpha", b.config.alpha}};
  j["units"] = {{"surprisal", "bits"}, {"entropy", "bits"}, {"uid", "bits^2"}};
  j["files"] = {{"essay_metrics", BundleFiles::essay_metrics}, {"profiles", BundleFiles::profiles},
                {"anova", BundleFiles::anova},                 {"posthoc", BundleFiles::posthoc},
                {"lmm", BundleFiles::lmm},                     {"boxplot", BundleFiles::boxplot},
                {"reference_band", BundleFiles::reference_band}};
  j["n_essays"] = b.essay_metrics.size();
  j["notes"] = b.notes;

  json anova = json::array();
  for (const auto& e : b.anova) {
    json pairs = json::array();
    const auto& t = e.posthoc;
    for (std::size_t r = 0; r < t.levels.size(); ++r)
      for (std::size_t c = r + 1; c < t.levels.size(); ++c)
        pairs.push_back({{"row", t.levels[r]},
                         {"col", t.levels[c]},
                         {"diff", t.diff[r][c]},
                         {"p_adj", t.p_adj[r][c]},
                         {"significant", static_cast<bool>(t.significant[r][c])}});
    anova.push_back({{"metric", e.metric},
                     {"factor", e.factor},
                     {"stratum", e.stratum},
                     {"F", e.result.f_value},
                     {"df_between", e.result.df_between},
                     {"df_within", e.result.df_within},
                     {"p", e.result.p_value},
                     {"eta_squared", e.result.eta_squared},
                     {"posthoc", {{"method", "tukey_hsd"}, {"alpha", t.alpha}, {"pairs", pairs}}}});
  }
  j["anova"] = std::move(anova);

  json lmm = json::array();
  for (const auto& t : b.lmm) {
    json terms = json::array();
    for (std::size_t i = 0; i < t.fit.terms.size(); ++i)
      terms.push_back({{"term", t.fit.terms[i]},
                       {"beta", t.fit.beta[i]},
                       {"se", t.fit.se[i]},
                       {"p", t.fit.p_value[i]}});
    lmm.push_back({{"response", t.response},
                   {"terms", terms},
                   {"intercept_variance", t.fit.intercept_variance},
                   {"residual_variance", t.fit.residual_variance},
                   {"log_reml", t.fit.log_reml},
                   {"converged", t.fit.converged},
                   {"iterations", t.fit.iterations},
                   {"n_obs", t.fit.n_obs},
                   {"n_essays", t.fit.n_groups}});
  }
  j["lmm"] = std::move(lmm);

  json box = json::array();
  for (const auto& s : b.boxplots)
    box.push_back({{"group", s.group},
                   {"metric", to_string(s.metric)},
                   {"n", s.n},
                   {"min", s.min},
                   {"q1", s.q1},
                   {"median", s.median},
                   {"q3", s.q3},
                   {"max", s.max},
                   {"mean", s.mean}});
  j["boxplots"] = std::move(box);

  json bands = json::array();
  for (const auto& r : b.reference_bands)
    bands.push_back({{"metric", to_string(r.metric)},
                     {"n", r.n},
                     {"mean", r.mean},
                     {"lower", r.lower},
                     {"upper", r.upper}});
  j["reference_bands"] = std::move(bands);

  json prof = json::array();
  for (const auto& p : b.profiles)
    prof.push_back({{"group", p.group},
                    {"metric", to_string(p.metric)},
                    {"positions", p.rows.size()},
                    {"window", p.window}});
  j["profiles"] = std::move(prof);
  return j;
}

/// Renders every output into memory first, then moves each file into place.
inline void write_bundle(const AnalysisBundle& b, const std::filesystem::path& out_dir) {
  std::map<std::string, std::string> files;
  auto render = [&](const char* name, auto&& fn) {
    std::ostringstream os;
    fn(os);
    files[name] = os.str();
  };
  render(BundleFiles::essay_metrics, [&](std::ostream& os) { write_essay_metrics_csv(os, b.essay_metrics); });
  render(BundleFiles::profiles, [&](std::ostream& os) { write_profiles_csv(os, b.profiles); });
  render(BundleFiles::anova, [&](std::ostream& os) { write_anova_csv(os, b.anova); });
  render(BundleFiles::posthoc, [&](std::ostream& os) { write_posthoc_csv(os, b.anova); });
  render(BundleFiles::lmm, [&](std::ostream& os) { write_lmm_csv(os, b.lmm); });
  render(BundleFiles::boxplot, [&](std::ostream& os) { write_boxplot_csv(os, b.boxplots); });
  render(BundleFiles::reference_band, [&](std::ostream& os) { write_reference_band_csv(os, b.reference_bands); });
  files[BundleFiles::bundle] = bundle_json(b).dump(2) + "\n";

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw InputError("cannot create output directory: " + out_dir.string());
  for (const auto& [name, content] : files) write_file_atomic(out_dir / name, content);
}

}  // namespace uidprof
