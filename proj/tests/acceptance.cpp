// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <Eigen/Dense>

#include "ngram_oracle.hpp"
#include "test_support.hpp"
#include "uidprof/cli.hpp"
#include "uidprof/metrics.hpp"
#include "uidprof/ngram.hpp"
#include "uidprof/stats/anova.hpp"
#include "uidprof/stats/lmm.hpp"
#include "uidprof/synth.hpp"

using namespace uidprof;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

// Collects failure details; an empty list means the criterion passed.
struct Check {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (!(std::abs(got - want) <= tol)) {
      std::ostringstream os;
      os.precision(17);
      os << what << ": got " << got << ", want " << want << " (tol " << tol << ")";
      failures.push_back(os.str());
    }
  }
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<std::vector<std::string>> toy20() {
  std::vector<std::vector<std::string>> c;
  for (const auto& line : split_lines(read_file(std::string(UIDPROF_TEST_DATA) + "/toy20.txt")))
    c.push_back(split_whitespace(line));
  return c;
}

void metric_exactness(Check& c) {
  c.near(surprisal_bits(0.5), 1.0, 1e-12, "surprisal_bits(0.5)");
  c.near(entropy_bits(std::vector<double>{0.25, 0.25, 0.25, 0.25}), 2.0, 1e-12, "entropy_bits(uniform-4)");
  c.near(uid_score(std::vector<double>{3.7, 3.7, 3.7, 3.7}), 0.0, 1e-12, "uid_score(constant)");
}

void entropy_consistency(Check& c) {
  const auto t0 = Clock::now();
  const auto corpus = toy20();
  const auto model = NgramModel::train(corpus, 3, 0.1, uniform_weights(3));
  std::size_t positions = 0;
  for (const auto& sent : corpus) {
    const auto scores = model.score_sequence(sent);
    for (std::size_t i = 0; i < sent.size(); ++i, ++positions) {
      // Exhaustive summation over the vocabulary, probabilities from raw counts.
      std::vector<std::string> hist(sent.begin(), sent.begin() + static_cast<std::ptrdiff_t>(i));
      long double expected = 0;
      for (const auto& w : model.vocabulary()) {
        const long double p = testing::oracle_probability(model, hist, w);
        expected += p * -std::log2(p);
      }
      c.near(static_cast<double>(expected), scores[i].entropy_bits, 1e-9,
             "position " + std::to_string(i) + " of a toy sentence");
      // The emitted distribution itself gives the same expectation.
      const auto d = model.next_distribution(hist);
      long double own = 0;
      for (double p : d) own += p * surprisal_bits(p);
      c.near(static_cast<double>(own), scores[i].entropy_bits, 1e-9, "emitted distribution");
    }
  }
  c.expect(positions > 100, "too few positions checked");
  const double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + std::to_string(secs) + " s");
}

void chain_rule(Check& c) {
  SynthTextGenerator gen(123);
  std::vector<std::vector<std::string>> train;
  for (int i = 0; i < 400; ++i) train.push_back(gen.sentence(0.5, gen.uniform(6, 20)));
  const auto model = NgramModel::train(train, 3, 0.1, uniform_weights(3));
  for (int e = 0; e < 50; ++e) {
    std::vector<std::string> essay;
    const std::size_t len = gen.uniform(120, 400);
    while (essay.size() < len) {
      auto s = gen.sentence(0.3 + 0.01 * e, gen.uniform(6, 20));
      essay.insert(essay.end(), s.begin(), s.end());
    }
    // Occasional out-of-vocabulary tokens.
    essay[essay.size() / 2] = "never-seen-" + std::to_string(e);
    const auto scores = model.score_sequence(essay);
    const auto ids = model.to_ids(essay);
    long double seq_prob = 1;
    CompensatedSum total;
    for (std::size_t i = 0; i < essay.size(); ++i) {
      seq_prob *= model.next_distribution_ids(std::span(ids).first(i))[ids[i]];
      total.add(scores[i].surprisal_bits);
    }
    c.near(total.value(), static_cast<double>(-std::log2(seq_prob)), 1e-7,
           "essay " + std::to_string(e));
  }
}

void anova_oracle(Check& c) {
  const auto r = stats::one_way_anova({{"a", {1, 2, 3}}, {"b", {2, 3, 4}}});
  c.near(r.f_value, 1.5, 1e-9, "F");
  c.expect(r.df_between == 1 && r.df_within == 4, "df (1,4)");
  c.near(r.eta_squared, 1.5 / 5.5, 1e-9, "eta^2");

  std::mt19937_64 rng(11);
  std::normal_distribution<double> z(0.0, 1.0);
  stats::GroupedValues g;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 1000; ++j) g["L1_" + std::to_string(i)].push_back(z(rng) + 0.05 * i);
  const auto big = stats::one_way_anova(g);
  c.expect(big.df_between == 10 && big.df_within == 10989,
           "df (" + std::to_string(big.df_between) + "," + std::to_string(big.df_within) + ")");
}

double pooled_t_p(const std::vector<double>& a, const std::vector<double>& b) {
  auto mean = [](const std::vector<double>& v) {
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / v.size());
  };
  const double ma = mean(a), mb = mean(b);
  long double ss = 0;
  for (double x : a) ss += (x - ma) * (x - ma);
  for (double x : b) ss += (x - mb) * (x - mb);
  const double df = static_cast<double>(a.size() + b.size() - 2);
  const double t = (ma - mb) / std::sqrt(static_cast<double>(ss) / df * (1.0 / a.size() + 1.0 / b.size()));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

void posthoc_oracle(Check& c) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int t = 0; t < 10; ++t) {
    stats::GroupedValues g;
    for (int j = 0; j < 5 + 3 * t; ++j) g["a"].push_back(z(rng));
    for (int j = 0; j < 8 + t; ++j) g["b"].push_back(z(rng) + 0.4);
    const auto tab = stats::posthoc_pairwise(g);
    c.near(tab.p_adj[0][1], pooled_t_p(g["a"], g["b"]), 1e-9, "two-group trial " + std::to_string(t));
  }
  const stats::GroupedValues three{{"a", {-0.1, 0.0, 0.1, 0.05}},
                                   {"b", {-0.05, 0.0, 0.1, -0.1}},
                                   {"c", {9.9, 10.0, 10.1, 10.05}}};
  const auto tab = stats::posthoc_pairwise(three, 0.05);
  c.expect(!tab.significant[0][1], "a-b flagged");
  c.expect(tab.significant[0][2], "a-c not flagged");
  c.expect(tab.significant[1][2], "b-c not flagged");
}

void lmm_recovery(Check& c) {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> b(0.0, 1.0), e(0.0, 0.5), xdist(0.0, 1.0);
  const std::vector<std::string> names{"(Intercept)", "group", "x"};
  stats::LmmAccumulator acc(names);
  for (int i = 0; i < 200; ++i) {
    const double grp = i % 2;
    const double bi = b(rng);
    for (int t = 0; t < 50; ++t) {
      const double x = xdist(rng);
      const double row[] = {1.0, grp, x};
      acc.add_row("essay" + std::to_string(i), row, 10.0 - 2.0 * grp + 1.5 * x + bi + e(rng));
    }
  }
  const stats::RandomInterceptReml reml(acc);
  const auto fit = reml.fit();
  c.expect(fit.converged, "not converged");
  const double truth[] = {10.0, -2.0, 1.5};
  for (int j = 0; j < 3; ++j)
    c.expect(std::abs(fit.beta[j] - truth[j]) < 3.0 * fit.se[j],
             "beta " + names[j] + " = " + std::to_string(fit.beta[j]) + " (se " +
                 std::to_string(fit.se[j]) + ")");
  c.expect(std::abs(fit.intercept_variance - 1.0) < 0.2,
           "intercept variance " + std::to_string(fit.intercept_variance));
  c.expect(std::abs(fit.residual_variance - 0.25) < 0.2 * 0.25,
           "residual variance " + std::to_string(fit.residual_variance));

  std::uniform_real_distribution<double> log_gamma(std::log(0.05), std::log(50.0));
  for (int i = 0; i < 5; ++i) {
    const double g = std::exp(log_gamma(rng));
    const double h = 1e-5 * g;
    const double fd = (reml.objective(g + h) - reml.objective(g - h)) / (2.0 * h);
    const double an = reml.gradient(g);
    const double rel = std::abs(an - fd) / std::max(std::abs(fd), 1e-3);
    c.expect(rel < 1e-5, "gradient at gamma=" + std::to_string(g) + " rel err " + std::to_string(rel));
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 30.0, "runtime " + std::to_string(secs) + " s");
}

const stats::LmmFit* find_lmm(const AnalysisBundle& b, const std::string& response) {
  for (const auto& t : b.lmm)
    if (t.response == response) return &t.fit;
  return nullptr;
}

void directional_pipeline(Check& c, const fs::path& work) {
  cli::RunConfig synth;
  synth.out = work / "synth";
  synth.seed = 2024;
  cli::cmd_synth(synth);

  cli::RunConfig an;
  an.backend = "external";
  an.scores = synth.out / "scores.jsonl";
  an.group_by = "proficiency";
  an.out = work / "report";
  const auto bundle = cli::cmd_analyze(an);

  const auto* s = find_lmm(bundle, "surprisal");
  const auto* h = find_lmm(bundle, "entropy");
  c.expect(s && h, "mixed models missing");
  if (!s || !h) return;
  auto coef = [](const stats::LmmFit& f, const std::string& level, double& beta, double& p) {
    for (std::size_t i = 0; i < f.terms.size(); ++i)
      if (f.terms[i] == "proficiency_" + level) {
        beta = f.beta[i];
        p = f.p_value[i];
        return true;
      }
    return false;
  };
  double sb[3], sp[3], hb[3], hp[3];
  const char* levels[] = {"low", "medium", "high"};
  for (int i = 0; i < 3; ++i) {
    c.expect(coef(*s, levels[i], sb[i], sp[i]) && coef(*h, levels[i], hb[i], hp[i]),
             std::string("missing term for ") + levels[i]);
    c.expect(sb[i] < 0.0, std::string("surprisal beta ") + levels[i] + " not negative");
    c.expect(hb[i] > 0.0, std::string("entropy beta ") + levels[i] + " not positive");
    c.expect(sp[i] < 0.01, std::string("surprisal p ") + levels[i] + " = " + std::to_string(sp[i]));
    c.expect(hp[i] < 0.01, std::string("entropy p ") + levels[i] + " = " + std::to_string(hp[i]));
  }
  c.expect(std::abs(sb[0]) > std::abs(sb[1]) && std::abs(sb[1]) > std::abs(sb[2]),
           "surprisal betas do not shrink toward native");
  c.expect(hb[0] > hb[1] && hb[1] > hb[2], "entropy betas do not shrink toward native");
}

void determinism(Check& c, const fs::path& work) {
  cli::RunConfig synth;
  synth.out = work / "det_synth";
  synth.seed = 77;
  synth.essays_per_group = 30;
  synth.with_text = true;
  cli::cmd_synth(synth);

  cli::RunConfig train;
  train.corpus = {synth.out / "train.txt"};
  train.model = work / "det_lm.json";
  cli::cmd_train(train);

  for (const char* run : {"run1", "run2"}) {
    cli::RunConfig an;
    an.backend = "ngram";
    an.manifest = synth.out / "manifest.tsv";
    an.model = train.model;
    an.workers = std::string(run) == "run1" ? 1 : 3;
    an.out = work / run;
    cli::cmd_analyze(an);
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(work / "run1")) {
    const auto name = e.path().filename();
    ++files;
    c.expect(fs::exists(work / "run2" / name) && read_file(e.path()) == read_file(work / "run2" / name),
             "bundle file differs: " + name.string());
  }
  c.expect(files == 8, "expected 8 bundle files, found " + std::to_string(files));
}

}  // namespace

int main() {
  testing::TempDir work;
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"metric exactness", metric_exactness},
      {"entropy/surprisal consistency oracle (trigram, toy20)", entropy_consistency},
      {"chain rule on 50 synthetic essays", chain_rule},
      {"ANOVA oracle", anova_oracle},
      {"post-hoc oracle", posthoc_oracle},
      {"LMM recovery and REML gradient", lmm_recovery},
      {"directional pipeline (synth -> analyze)", [&](Check& c) { directional_pipeline(c, work.path()); }},
      {"determinism of analysis bundles", [&](Check& c) { determinism(c, work.path()); }},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Check c;
    const auto t0 = Clock::now();
    try {
      fn(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const double secs = seconds_since(t0);
    std::cout << (c.failures.empty() ? "PASS" : "FAIL") << "  " << name << "  (" << secs << " s)\n";
    for (std::size_t i = 0; i < c.failures.size() && i < 10; ++i)
      std::cout << "      " << c.failures[i] << '\n';
    if (!c.failures.empty()) ++failed;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
