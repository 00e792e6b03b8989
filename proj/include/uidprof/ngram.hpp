#pragma once

// Interpolated add-k n-gram language model with exact next-token distributions.
//
//   p(w | h) = sum_{j=0}^{order-1} weight[j] * (c(h_j, w) + k) / (c(h_j) + k |V|)
//
// where h_j is the last j tokens of the BOS-padded history (j = 0 is the unigram
// term). Every probability is strictly positive over the full vocabulary.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "uidprof/core_types.hpp"
#include "uidprof/error.hpp"
#include "uidprof/metrics.hpp"
#include "uidprof/util.hpp"

namespace uidprof {

using TokenId = std::uint32_t;

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";
inline constexpr std::string_view kUnk = "<unk>";

class NgramModel {
 public:
  static constexpr TokenId bos_id = 0;
  static constexpr TokenId eos_id = 1;
  static constexpr TokenId unk_id = 2;
  static constexpr int kFormatVersion = 1;

  struct ContextCounts {
    std::uint64_t total = 0;
    std::map<TokenId, std::uint64_t> next;

    friend bool operator==(const ContextCounts&, const ContextCounts&) = default;
  };
  using Context = std::vector<TokenId>;
  using CountTable = std::map<Context, ContextCounts>;

  /// `weights[j]` weighs the estimate conditioned on the last j tokens; size must equal `order`.
  static NgramModel train(const std::vector<std::vector<std::string>>& corpus, int order,
                          double smoothing_k, std::vector<double> weights) {
    if (order < 1) throw InputError("order must be ≥ 1");
    if (!(smoothing_k > 0.0) || !std::isfinite(smoothing_k))
      throw InputError("smoothing_k must be a positive finite number");
    check_weights(weights, order);
    if (corpus.empty()) throw InputError("empty corpus");

    NgramModel m;
    m.order_ = order;
    m.k_ = smoothing_k;
    m.weights_ = std::move(weights);

    std::vector<std::string> words;
    for (const auto& seq : corpus)
      for (const auto& w : seq) words.push_back(w);
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    m.vocab_ = {std::string(kBos), std::string(kEos), std::string(kUnk)};
    for (auto& w : words)
      if (w != kBos && w != kEos && w != kUnk) m.vocab_.push_back(std::move(w));
    m.rebuild_index();

    m.counts_.assign(static_cast<std::size_t>(order), {});
    const std::size_t pad = static_cast<std::size_t>(order - 1);
    for (const auto& seq : corpus) {
      std::vector<TokenId> ids(pad, bos_id);
      for (const auto& w : seq) ids.push_back(m.id_of(w));
      ids.push_back(eos_id);
      for (std::size_t t = pad; t < ids.size(); ++t) {
        for (std::size_t j = 0; j < m.counts_.size(); ++j) {
          Context ctx(ids.begin() + static_cast<std::ptrdiff_t>(t - j),
                      ids.begin() + static_cast<std::ptrdiff_t>(t));
          auto& cc = m.counts_[j][ctx];
          ++cc.total;
          ++cc.next[ids[t]];
        }
      }
    }
    return m;
  }

  int order() const { return order_; }
  double smoothing_k() const { return k_; }
  const std::vector<double>& interpolation_weights() const { return weights_; }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  std::size_t vocabulary_size() const { return vocab_.size(); }
  const std::vector<CountTable>& count_tables() const { return counts_; }

  TokenId id_of(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? unk_id : it->second;
  }

  /// Raw count of `next` following exactly `context` (length < order).
  std::uint64_t count(std::span<const std::string> context, std::string_view next) const {
    if (context.size() >= counts_.size()) return 0;
    Context ctx;
    for (const auto& w : context) ctx.push_back(id_of(w));
    const auto& table = counts_[context.size()];
    auto it = table.find(ctx);
    if (it == table.end()) return 0;
    auto jt = it->second.next.find(id_of(next));
    return jt == it->second.next.end() ? 0 : jt->second;
  }

  /// Distribution over the whole vocabulary (indexed by TokenId) after `history`.
  /// Only the last order-1 ids matter; shorter histories are BOS-padded.
  std::vector<double> next_distribution_ids(std::span<const TokenId> history) const {
    const std::size_t n_ctx = static_cast<std::size_t>(order_ - 1);
    Context padded(n_ctx, bos_id);
    const std::size_t take = std::min(history.size(), n_ctx);
    std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
              padded.end() - static_cast<std::ptrdiff_t>(take));

    const double v = static_cast<double>(vocab_.size());
    std::vector<double> dist(vocab_.size(), 0.0);
    double base = 0.0;
    for (std::size_t j = 0; j < counts_.size(); ++j) {
      const double w = weights_[j];
      if (w == 0.0) continue;
      Context ctx(padded.end() - static_cast<std::ptrdiff_t>(j), padded.end());
      const auto it = counts_[j].find(ctx);
      const double total = it == counts_[j].end() ? 0.0 : static_cast<double>(it->second.total);
      const double denom = total + k_ * v;
      base += w * k_ / denom;
      if (it != counts_[j].end())
        for (const auto& [id, c] : it->second.next) dist[id] += w * static_cast<double>(c) / denom;
    }
    for (auto& p : dist) p += base;
    return dist;
  }

  std::vector<double> next_distribution(std::span<const std::string> context) const {
    return next_distribution_ids(to_ids(context));
  }

  /// Per-token surprisal of the realized token and entropy of the full next-token
  /// distribution at that position, both in bits.
  std::vector<TokenScore> score_sequence(std::span<const std::string> tokens,
                                         bool keep_text = false) const {
    if (tokens.empty()) throw InputError("score_sequence: empty token sequence");
    const auto ids = to_ids(tokens);
    std::vector<TokenScore> out;
    out.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto dist = next_distribution_ids(std::span(ids).first(i));
      TokenScore ts;
      ts.position = i;
      ts.surprisal_bits = surprisal_bits(dist[ids[i]]);
      ts.entropy_bits = entropy_bits(dist);
      if (keep_text) ts.token_text = tokens[i];
      out.push_back(std::move(ts));
    }
    return out;
  }

  std::vector<TokenId> to_ids(std::span<const std::string> tokens) const {
    std::vector<TokenId> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id_of(t));
    return ids;
  }

  // -- persistence ---------------------------------------------------------

  nlohmann::json to_json() const {
    using nlohmann::json;
    json j;
    j["format"] = "uidprof-ngram";
    j["version"] = kFormatVersion;
    j["order"] = order_;
    j["smoothing_k"] = k_;
    j["interpolation_weights"] = weights_;
    j["vocabulary"] = vocab_;
    json tables = json::array();
    for (const auto& table : counts_) {
      json rows = json::array();
      for (const auto& [ctx, cc] : table) {
        json next = json::array();
        for (const auto& [id, c] : cc.next) next.push_back({id, c});
        rows.push_back({{"context", ctx}, {"next", next}});
      }
      tables.push_back(std::move(rows));
    }
    j["counts"] = std::move(tables);
    return j;
  }

  static NgramModel from_json(const nlohmann::json& j) {
    NgramModel m;
    try {
      if (j.at("format").get<std::string>() != "uidprof-ngram")
        throw InputError("not an n-gram model file");
      if (j.at("version").get<int>() != kFormatVersion)
        throw InputError("unsupported model version " + j.at("version").dump());
      m.order_ = j.at("order").get<int>();
      m.k_ = j.at("smoothing_k").get<double>();
      m.weights_ = j.at("interpolation_weights").get<std::vector<double>>();
      m.vocab_ = j.at("vocabulary").get<std::vector<std::string>>();
      if (m.order_ < 1) throw InputError("order must be ≥ 1");
      check_weights(m.weights_, m.order_);
      if (m.vocab_.size() < 3 || m.vocab_[bos_id] != kBos || m.vocab_[eos_id] != kEos ||
          m.vocab_[unk_id] != kUnk)
        throw InputError("model vocabulary lacks reserved tokens");
      const auto& tables = j.at("counts");
      if (tables.size() != static_cast<std::size_t>(m.order_))
        throw InputError("model count tables do not match order");
      m.counts_.assign(tables.size(), {});
      for (std::size_t o = 0; o < tables.size(); ++o) {
        for (const auto& row : tables[o]) {
          auto ctx = row.at("context").get<Context>();
          if (ctx.size() != o) throw InputError("model context length mismatch");
          ContextCounts cc;
          for (const auto& pair : row.at("next")) {
            const auto id = pair.at(0).get<TokenId>();
            const auto c = pair.at(1).get<std::uint64_t>();
            if (id >= m.vocab_.size()) throw InputError("model token id out of range");
            cc.next[id] = c;
            cc.total += c;
          }
          m.counts_[o].emplace(std::move(ctx), std::move(cc));
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw InputError(std::string("malformed model file: ") + e.what());
    }
    m.rebuild_index();
    return m;
  }

  void save(const std::filesystem::path& path) const {
    write_file_atomic(path, to_json().dump() + "\n");
  }

  static NgramModel load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
      throw InputError("malformed model file " + path.string() + ": " + e.what());
    }
    return from_json(j);
  }

  friend bool operator==(const NgramModel& a, const NgramModel& b) {
    return a.order_ == b.order_ && a.k_ == b.k_ && a.weights_ == b.weights_ &&
           a.vocab_ == b.vocab_ && a.counts_ == b.counts_;
  }

 private:
  static void check_weights(const std::vector<double>& weights, int order) {
    if (weights.size() != static_cast<std::size_t>(order))
      throw InputError("expected " + std::to_string(order) + " interpolation weights, got " +
                       std::to_string(weights.size()));
    double sum = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w))
        throw InputError("interpolation weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw InputError("interpolation weights sum to " + format_double(sum) + ", not 1");
  }

  void rebuild_index() {
    index_.clear();
    for (TokenId i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], i);
  }

  int order_ = 1;
  double k_ = 1.0;
  std::vector<double> weights_{1.0};
  std::vector<std::string> vocab_;
  std::vector<CountTable> counts_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Equal interpolation weights across all orders.
inline std::vector<double> uniform_weights(int order) {
  if (order < 1) throw InputError("order must be ≥ 1");
  return std::vector<double>(static_cast<std::size_t>(order), 1.0 / order);
}

}  // namespace uidprof
