#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "uidprof/core_types.hpp"

namespace uidprof::testing {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "uidprof") {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline EssayRecord make_record(std::string id, std::vector<double> surprisals,
                               std::vector<double> entropies = {},
                               GroupLabel label = {"ARA", Proficiency::low}) {
  EssayRecord r{std::move(id), std::move(label), {}};
  for (std::size_t i = 0; i < surprisals.size(); ++i)
    r.scores.push_back({i, surprisals[i], entropies.empty() ? 1.0 : entropies[i], std::nullopt});
  return r;
}

inline EssayRecord random_record(std::mt19937_64& rng, const std::string& id, std::size_t min_len = 1,
                                 std::size_t max_len = 60) {
  std::uniform_int_distribution<std::size_t> len(min_len, max_len);
  std::uniform_real_distribution<double> val(0.0, 20.0);
  std::uniform_int_distribution<int> prof(0, 3);
  std::bernoulli_distribution with_text(0.3);
  EssayRecord r;
  r.essay_id = id;
  r.label.proficiency = static_cast<Proficiency>(prof(rng));
  r.label.l1 = r.label.proficiency == Proficiency::native ? "ENG_NATIVE" : "KOR";
  const std::size_t n = len(rng);
  for (std::size_t i = 0; i < n; ++i) {
    TokenScore t{i, val(rng), val(rng), std::nullopt};
    if (with_text(rng)) t.token_text = "tok\"" + std::to_string(i) + "\t\xc3\xa9";
    r.scores.push_back(std::move(t));
  }
  return r;
}

}  // namespace uidprof::testing
