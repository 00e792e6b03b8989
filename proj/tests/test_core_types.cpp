#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "uidprof/core_types.hpp"

namespace uidprof {
namespace {

using testing::make_record;

bool has_code(const ValidationReport& r, ViolationCode c) {
  for (const auto& v : r)
    if (v.code == c) return true;
  return false;
}

TEST(ValidateRecord, EmptyScoreSequence) {
  EssayRecord r{"e1", {"ARA", Proficiency::low}, {}};
  auto report = validate_record(r);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].code, ViolationCode::empty_score_sequence);
  EXPECT_NE(report[0].message.find("empty score sequence"), std::string::npos);
}

TEST(ValidateRecord, WellFormed) {
  EXPECT_TRUE(validate_record(make_record("e1", {1.0, 2.0, 0.0}, {3.0, 0.0, 1.0})).empty());
}

TEST(ValidateRecord, NegativeSurprisalNamesPosition) {
  auto r = make_record("e1", {1.0, -0.5, 2.0});
  auto report = validate_record(r);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].code, ViolationCode::negative_surprisal);
  ASSERT_TRUE(report[0].position.has_value());
  EXPECT_EQ(*report[0].position, 1u);
  EXPECT_NE(report[0].message.find("position 1"), std::string::npos);
  EXPECT_NE(report[0].message.find("negative surprisal"), std::string::npos);
}

TEST(ValidateRecord, NonFiniteAndGaps) {
  auto r = make_record("e1", {1.0, std::numeric_limits<double>::infinity(), 2.0},
                       {1.0, 1.0, std::nan("")});
  r.scores[2].position = 5;
  auto report = validate_record(r);
  EXPECT_TRUE(has_code(report, ViolationCode::nonfinite_surprisal));
  EXPECT_TRUE(has_code(report, ViolationCode::nonfinite_entropy));
  EXPECT_TRUE(has_code(report, ViolationCode::position_gap));
  EXPECT_EQ(report.size(), 3u);
}

TEST(ValidateCorpus, DuplicateIds) {
  std::vector<EssayRecord> rs{make_record("a", {1.0}), make_record("b", {1.0}),
                              make_record("a", {2.0})};
  auto report = validate_corpus(rs);
  ASSERT_EQ(report.size(), 1u);
  EXPECT_EQ(report[0].code, ViolationCode::duplicate_essay_id);
}

// Validation is total and each planted fault yields exactly one violation of its code.
TEST(ValidateRecord, PropertyOneViolationPerPlantedFault) {
  std::mt19937_64 rng(42);
  const ViolationCode codes[] = {ViolationCode::position_gap, ViolationCode::negative_surprisal,
                                 ViolationCode::nonfinite_surprisal,
                                 ViolationCode::negative_entropy, ViolationCode::nonfinite_entropy};
  std::uniform_int_distribution<int> pick(0, 4);
  for (int trial = 0; trial < 500; ++trial) {
    auto r = testing::random_record(rng, "e" + std::to_string(trial), 1, 40);
    ASSERT_TRUE(validate_record(r).empty());
    std::uniform_int_distribution<std::size_t> at(0, r.scores.size() - 1);
    const std::size_t pos = at(rng);
    const auto code = codes[pick(rng)];
    auto& t = r.scores[pos];
    switch (code) {
      case ViolationCode::position_gap: t.position += 1000; break;
      case ViolationCode::negative_surprisal: t.surprisal_bits = -1e-3 - t.surprisal_bits; break;
      case ViolationCode::nonfinite_surprisal: t.surprisal_bits = std::nan(""); break;
      case ViolationCode::negative_entropy: t.entropy_bits = -2.0; break;
      case ViolationCode::nonfinite_entropy: t.entropy_bits = -std::numeric_limits<double>::infinity(); break;
      default: break;
    }
    auto report = validate_record(r);
    ASSERT_EQ(report.size(), 1u) << "trial " << trial;
    EXPECT_EQ(report[0].code, code);
    EXPECT_EQ(report[0].position, pos);
  }
}

TEST(Proficiency, ParseRoundTrip) {
  for (auto p : kAllProficiencies) EXPECT_EQ(parse_proficiency(to_string(p)), p);
  EXPECT_FALSE(parse_proficiency("expert").has_value());
}

}  // namespace
}  // namespace uidprof
