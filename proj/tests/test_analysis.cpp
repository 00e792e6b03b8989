#include <gtest/gtest.h>

#include "test_support.hpp"
#include "uidprof/analysis.hpp"
#include "uidprof/synth.hpp"

namespace uidprof {
namespace {

std::vector<EssayRecord> small_synth(std::uint64_t seed = 3, std::size_t per_group = 22) {
  SynthConfig c;
  c.seed = seed;
  c.essays_per_group = per_group;
  c.min_tokens = 40;
  c.max_tokens = 120;
  return synthesize_scores(c).records;
}

const LmmTable& lmm_for(const AnalysisBundle& b, const std::string& response) {
  for (const auto& t : b.lmm)
    if (t.response == response) return t;
  throw std::runtime_error("no lmm for " + response);
}

double coef(const stats::LmmFit& f, const std::string& term) {
  for (std::size_t i = 0; i < f.terms.size(); ++i)
    if (f.terms[i] == term) return f.beta[i];
  throw std::runtime_error("no term " + term);
}

TEST(Analysis, L1GroupingHasOverallAndStrata) {
  AnalysisConfig cfg;
  cfg.metrics = MetricSelection::all;
  const auto b = run_analysis(small_synth(), cfg);
  // Three essay-level metrics, each with "all" plus the low/medium/high strata.
  EXPECT_EQ(b.anova.size(), 12u);
  for (const auto& e : b.anova) {
    EXPECT_EQ(e.factor, "l1");
    if (e.stratum == "all") {
      // Natives are excluded from the L1 comparison.
      EXPECT_EQ(std::count(e.posthoc.levels.begin(), e.posthoc.levels.end(), kNativeL1), 0);
    }
  }
  EXPECT_EQ(b.lmm.size(), 2u);
  EXPECT_EQ(b.reference_bands.size(), 3u);
  for (const auto& box : b.boxplots) EXPECT_NE(box.group, kNativeL1);
  EXPECT_EQ(b.essay_metrics.size(), 88u);
}

TEST(Analysis, ProficiencyGroupingSingleAnovaPerMetric) {
  AnalysisConfig cfg;
  cfg.group_by = Factor::proficiency;
  cfg.metrics = MetricSelection::surprisal;
  const auto b = run_analysis(small_synth(), cfg);
  ASSERT_EQ(b.anova.size(), 1u);
  EXPECT_EQ(b.anova[0].posthoc.levels.size(), 4u);
  ASSERT_EQ(b.lmm.size(), 1u);
  const auto& f = lmm_for(b, "surprisal").fit;
  EXPECT_EQ(f.terms, (std::vector<std::string>{"(Intercept)", "position", "proficiency_low",
                                               "proficiency_medium", "proficiency_high"}));
  EXPECT_LT(coef(f, "proficiency_low"), coef(f, "proficiency_high"));
}

TEST(Analysis, NoNativesSkipsMixedModelAndBand) {
  auto recs = small_synth();
  std::erase_if(recs, [](const EssayRecord& r) { return r.label.proficiency == Proficiency::native; });
  const auto b = run_analysis(recs, {});
  EXPECT_TRUE(b.lmm.empty());
  EXPECT_TRUE(b.reference_bands.empty());
  const bool noted = std::any_of(b.notes.begin(), b.notes.end(), [](const std::string& n) {
    return n.find("skipped: no native") != std::string::npos;
  });
  EXPECT_TRUE(noted);
}

TEST(Analysis, SingleProficiencyGroupRejected) {
  auto recs = small_synth();
  std::erase_if(recs, [](const EssayRecord& r) { return r.label.proficiency != Proficiency::low; });
  AnalysisConfig cfg;
  cfg.group_by = Factor::proficiency;
  try {
    run_analysis(recs, cfg);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("need ≥ 2 groups"), std::string::npos) << e.what();
  }
}

TEST(Analysis, InvalidRecordIsDataError) {
  auto recs = small_synth();
  recs[5].scores[3].entropy_bits = -0.5;
  EXPECT_THROW(run_analysis(recs, {}), DataError);
  EXPECT_THROW(run_analysis({}, {}), InputError);
  AnalysisConfig even;
  even.window = 4;
  EXPECT_THROW(run_analysis(small_synth(), even), InputError);
}

TEST(Analysis, ProfilesTruncatedButEssayMetricsUseAllTokens) {
  SynthConfig c;
  c.essays_per_group = 4;
  c.min_tokens = 350;
  c.max_tokens = 360;
  const auto recs = synthesize_scores(c).records;
  const auto b = run_analysis(recs, {});
  for (const auto& p : b.profiles) EXPECT_LE(p.rows.size(), 300u);
  for (const auto& m : b.essay_metrics) EXPECT_GE(m.token_count, 350u);
}

TEST(Analysis, BundleIsDeterministic) {
  testing::TempDir dir;
  const auto recs = small_synth(9);
  write_bundle(run_analysis(recs, {}), dir / "a");
  write_bundle(run_analysis(recs, {}), dir / "b");
  for (const char* f : {BundleFiles::essay_metrics, BundleFiles::profiles, BundleFiles::anova,
                        BundleFiles::posthoc, BundleFiles::lmm, BundleFiles::boxplot,
                        BundleFiles::reference_band, BundleFiles::bundle}) {
    EXPECT_EQ(read_file(dir / "a" / f), read_file(dir / "b" / f)) << f;
  }
  const auto j = nlohmann::json::parse(read_file(dir / "a" / BundleFiles::bundle));
  EXPECT_TRUE(j.contains("anova"));
  EXPECT_TRUE(j.contains("lmm"));
}

TEST(Analysis, LmmDesignRequiresNatives) {
  auto recs = small_synth();
  std::erase_if(recs, [](const EssayRecord& r) { return r.label.proficiency == Proficiency::native; });
  EXPECT_THROW(build_lmm_design(recs, Metric::surprisal, 300), InputError);
}

}  // namespace
}  // namespace uidprof
