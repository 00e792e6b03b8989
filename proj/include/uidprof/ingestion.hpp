#pragma once

// Corpus manifests, preprocessing rules, and the per-essay score exchange format (JSONL).
//
// Exchange line layout:
//   {"essay_id": str, "l1": str, "proficiency": "low"|"medium"|"high"|"native",
//    "tokens": [{"i": int, "s": float, "h": float, "t": optional str}, ...]}

#include <algorithm>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "uidprof/core_types.hpp"
#include "uidprof/error.hpp"
#include "uidprof/util.hpp"

namespace uidprof {

struct ManifestEntry {
  std::string essay_id;
  std::filesystem::path text_path;  // resolved against the manifest's directory
  std::string l1;
  Proficiency proficiency = Proficiency::low;
  std::size_t line = 0;

  GroupLabel label() const { return {l1, proficiency}; }
};

struct CorpusManifest {
  std::vector<ManifestEntry> entries;
};

/// TSV with header `essay_id  path  l1  proficiency`. Blank lines are ignored.
inline CorpusManifest parse_manifest_text(std::string_view text,
                                          const std::filesystem::path& base_dir = {}) {
  auto lines = split_lines(text);
  if (lines.empty()) throw InputError("manifest is empty (missing header)");

  auto split_tabs = [](const std::string& line) {
    std::vector<std::string> cols;
    std::size_t start = 0;
    for (;;) {
      auto end = line.find('\t', start);
      cols.push_back(line.substr(start, end == std::string::npos ? end : end - start));
      if (end == std::string::npos) break;
      start = end + 1;
    }
    return cols;
  };

  const std::vector<std::string> expected{"essay_id", "path", "l1", "proficiency"};
  if (split_tabs(lines[0]) != expected)
    throw InputError("manifest line 1: header must be 'essay_id<TAB>path<TAB>l1<TAB>proficiency'");

  CorpusManifest manifest;
  std::map<std::string, std::size_t> first_line;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    if (lines[i].empty()) continue;
    auto cols = split_tabs(lines[i]);
    if (cols.size() != 4 || cols[0].empty() || cols[1].empty() || cols[2].empty())
      throw InputError("manifest line " + std::to_string(line_no) +
                       ": malformed row (expected 4 non-empty tab-separated fields)");
    auto prof = parse_proficiency(cols[3]);
    if (!prof)
      throw InputError("manifest line " + std::to_string(line_no) +
                       ": unknown proficiency: " + cols[3]);
    auto [it, inserted] = first_line.emplace(cols[0], line_no);
    if (!inserted)
      throw InputError("manifest: duplicate essay_id '" + cols[0] + "' on lines " +
                       std::to_string(it->second) + " and " + std::to_string(line_no));
    std::filesystem::path p = cols[1];
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    manifest.entries.push_back({cols[0], p, cols[2], *prof, line_no});
  }
  return manifest;
}

inline CorpusManifest parse_manifest(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("manifest not found: " + path.string());
  return parse_manifest_text(read_file(path), path.parent_path());
}

/// Leading `max_tokens` tokens; shorter essays pass through whole.
inline EssayRecord truncate_for_position_analysis(const EssayRecord& record,
                                                  std::size_t max_tokens = 300) {
  if (max_tokens == 0) throw InputError("max_tokens must be >= 1");
  EssayRecord out = record;
  if (out.scores.size() > max_tokens) out.scores.resize(max_tokens);
  return out;
}

// ---------------------------------------------------------------------------
// Exchange format

inline std::string to_exchange_line(const EssayRecord& r) {
  using nlohmann::json;
  std::string line;
  line.reserve(64 + r.scores.size() * 48);
  line += "{\"essay_id\":";
  line += json(r.essay_id).dump();
  line += ",\"l1\":";
  line += json(r.label.l1).dump();
  line += ",\"proficiency\":\"";
  line += to_string(r.label.proficiency);
  line += "\",\"tokens\":[";
  for (std::size_t i = 0; i < r.scores.size(); ++i) {
    const auto& t = r.scores[i];
    if (i) line += ',';
    line += "{\"i\":" + std::to_string(t.position);
    line += ",\"s\":" + format_double(t.surprisal_bits);
    line += ",\"h\":" + format_double(t.entropy_bits);
    if (t.token_text) line += ",\"t\":" + json(*t.token_text).dump();
    line += '}';
  }
  line += "]}";
  return line;
}

inline void write_scores(std::ostream& out, const std::vector<EssayRecord>& records) {
  auto report = validate_corpus(records);
  if (!report.empty()) throw DataError(report.front().message);
  for (const auto& r : records) out << to_exchange_line(r) << '\n';
}

inline void write_scores(const std::vector<EssayRecord>& records,
                         const std::filesystem::path& path) {
  auto report = validate_corpus(records);
  if (!report.empty()) throw DataError(report.front().message);
  write_file_atomic(path, [&](std::ostream& out) {
    for (const auto& r : records) out << to_exchange_line(r) << '\n';
  });
}

inline EssayRecord parse_exchange_line(const std::string& line, std::size_t line_no) {
  using nlohmann::json;
  const std::string where = "scores line " + std::to_string(line_no);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw InputError(where + ": malformed JSON (" + e.what() + ")");
  }
  EssayRecord r;
  try {
    r.essay_id = j.at("essay_id").get<std::string>();
    r.label.l1 = j.at("l1").get<std::string>();
    const auto prof_str = j.at("proficiency").get<std::string>();
    auto prof = parse_proficiency(prof_str);
    if (!prof) throw InputError(where + ": unknown proficiency: " + prof_str);
    r.label.proficiency = *prof;
    const auto& toks = j.at("tokens");
    if (!toks.is_array()) throw InputError(where + ": 'tokens' must be an array");
    r.scores.reserve(toks.size());
    for (const auto& t : toks) {
      TokenScore ts;
      const auto i = t.at("i").get<long long>();
      if (i < 0) throw InputError(where + ": negative token index");
      ts.position = static_cast<std::size_t>(i);
      ts.surprisal_bits = t.at("s").get<double>();
      ts.entropy_bits = t.at("h").get<double>();
      if (auto it = t.find("t"); it != t.end() && !it->is_null())
        ts.token_text = it->get<std::string>();
      r.scores.push_back(std::move(ts));
    }
  } catch (const json::exception& e) {
    throw InputError(where + ": missing or mistyped field (" + e.what() + ")");
  }
  auto report = validate_record(r);
  if (!report.empty()) throw DataError(where + ": " + report.front().message);
  return r;
}

inline std::vector<EssayRecord> read_scores_text(std::string_view text) {
  std::vector<EssayRecord> records;
  std::map<std::string, std::size_t> seen;
  auto lines = split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t") == std::string::npos) continue;
    auto r = parse_exchange_line(lines[i], i + 1);
    auto [it, inserted] = seen.emplace(r.essay_id, i + 1);
    if (!inserted)
      throw DataError("scores line " + std::to_string(i + 1) + ": essay '" + r.essay_id +
                      "': duplicate essay id (first on line " + std::to_string(it->second) + ")");
    records.push_back(std::move(r));
  }
  return records;
}

inline std::vector<EssayRecord> read_scores(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw InputError("scores file not found: " + path.string());
  return read_scores_text(read_file(path));
}

}  // namespace uidprof
