// include/werfair/dataset.hpp

// Copyright 2026  The werfair Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef WERFAIR_DATASET_HPP_
#define WERFAIR_DATASET_HPP_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "werfair/alignment.hpp"
#include "werfair/errors.hpp"
#include "werfair/random.hpp"

namespace werfair {

/// Factor of interest (e.g. gender): an ordered list of level labels and the
/// level that other levels are contrasted against.
struct GroupFactor {
  std::string name = "group";
  std::vector<std::string> levels;
  std::size_t reference_level = 0;

  std::size_t size() const { return levels.size(); }

  std::optional<std::size_t> find(const std::string &label) const {
    auto it = std::find(levels.begin(), levels.end(), label);
    if (it == levels.end()) return std::nullopt;
    return static_cast<std::size_t>(it - levels.begin());
  }

  std::size_t index_of(const std::string &label) const {
    auto idx = find(label);
    if (!idx)
      throw UnknownGroupError("unknown level '" + label + "' of factor '" +
                              name + "'");
    return *idx;
  }
};

struct Utterance {
  std::string id;
  std::string speaker;
  std::size_t level = 0;
  std::int64_t errors = 0;
  std::int64_t ref_words = 0;
  std::vector<double> covariates;
  // Present when the record was scored from text.
  std::optional<ErrorCounts> detail;
};

/// A record dropped at load time, kept so the exclusion is auditable.
struct Exclusion {
  std::string id;
  std::size_t line = 0;
  ErrorCounts counts;
  std::string reason;
};

struct Corpus {
  GroupFactor factor;
  std::vector<std::string> covariate_names;
  std::vector<Utterance> utterances;
  std::vector<Exclusion> exclusions;

  std::size_t covariate_dim() const { return covariate_names.size(); }

  /// True when every speaker's utterances share a single level.
  bool speaker_level_factor() const {
    std::unordered_map<std::string, std::size_t> level_of;
    for (const auto &u : utterances) {
      auto [it, inserted] = level_of.emplace(u.speaker, u.level);
      if (!inserted && it->second != u.level) return false;
    }
    return true;
  }

  std::size_t speaker_count() const {
    std::set<std::string> s;
    for (const auto &u : utterances) s.insert(u.speaker);
    return s.size();
  }

  /// Checks the structural invariants; throws InputError on violation.
  void validate(bool require_speaker_level_factor = true) const {
    if (factor.levels.size() < 2)
      throw InputError("factor '" + factor.name + "' needs at least 2 levels");
    if (factor.reference_level >= factor.levels.size())
      throw InputError("reference level out of range");
    std::set<std::string> distinct(factor.levels.begin(), factor.levels.end());
    if (distinct.size() != factor.levels.size())
      throw InputError("factor levels are not distinct");
    std::vector<std::size_t> per_level(factor.levels.size(), 0);
    std::unordered_map<std::string, std::size_t> level_of;
    for (const auto &u : utterances) {
      if (u.level >= factor.levels.size())
        throw UnknownGroupError("utterance '" + u.id + "' has level index " +
                                std::to_string(u.level) + " out of range");
      if (u.ref_words < 1)
        throw InputError("utterance '" + u.id + "' has no reference words");
      if (u.errors < 0)
        throw InputError("utterance '" + u.id + "' has negative errors");
      if (u.covariates.size() != covariate_dim())
        throw CovariateDimensionError(
            "utterance '" + u.id + "' has " +
            std::to_string(u.covariates.size()) + " covariates, expected " +
            std::to_string(covariate_dim()));
      auto [it, inserted] = level_of.emplace(u.speaker, u.level);
      if (require_speaker_level_factor && !inserted && it->second != u.level)
        throw SpeakerGroupConflictError(
            "speaker '" + u.speaker + "' appears under levels '" +
            factor.levels[it->second] + "' and '" + factor.levels[u.level] +
            "'");
      ++per_level[u.level];
    }
    for (std::size_t l = 0; l < per_level.size(); ++l)
      if (per_level[l] == 0)
        throw InputError("level '" + factor.levels[l] + "' has no utterances");
  }

  /// Order-sensitive content hash, used to check that two fits saw the same
  /// data.
  std::uint64_t fingerprint() const {
    std::uint64_t h = mix64(utterances.size());
    auto feed = [&h](std::uint64_t v) { h = mix64(h ^ v) + 0x9e3779b97f4a7c15ULL; };
    auto feed_str = [&feed](const std::string &s) {
      feed(s.size());
      for (unsigned char c : s) feed(c);
    };
    for (const auto &u : utterances) {
      feed_str(u.id);
      feed_str(u.speaker);
      feed(u.level);
      feed(static_cast<std::uint64_t>(u.errors));
      feed(static_cast<std::uint64_t>(u.ref_words));
      for (double x : u.covariates) feed(std::bit_cast<std::uint64_t>(x));
    }
    return h;
  }
};

enum class InputFormat { Auto, JsonLines, Csv };

struct LoadOptions {
  InputFormat format = InputFormat::Auto;
  std::string factor_field = "group";
  // Declared level order; empty means order of first appearance.
  std::vector<std::string> levels;
  // Label of the reference level; empty means the first level.
  std::string reference_level;
  bool normalize = true;
  bool require_speaker_level_factor = true;
};

namespace detail {

enum class RecordSchema { Unknown, Text, Counts };

struct RawRecord {
  std::size_t line = 0;
  std::string id;
  std::string speaker;
  std::string group;
  RecordSchema schema = RecordSchema::Unknown;
  std::string ref, hyp;
  std::int64_t errors = 0, words = 0;
  std::optional<std::vector<double>> cov;
};

inline std::string where(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

inline std::string json_scalar_to_string(const nlohmann::json &v,
                                         std::size_t line,
                                         const std::string &field) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  throw ParseError(where(line) + "field '" + field +
                   "' must be a string or integer");
}

inline std::int64_t json_count(const nlohmann::json &v, std::size_t line,
                               const std::string &field) {
  if (v.is_number_integer() || v.is_number_unsigned()) {
    const auto x = v.get<std::int64_t>();
    if (x < 0)
      throw ParseError(where(line) + "field '" + field + "' is negative");
    return x;
  }
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0 && std::floor(x) == x && x < 9e15)
      return static_cast<std::int64_t>(x);
  }
  throw ParseError(where(line) + "field '" + field +
                   "' must be a non-negative integer");
}

inline RawRecord parse_json_record(const nlohmann::json &obj, std::size_t line,
                                   const std::string &factor_field) {
  if (!obj.is_object())
    throw ParseError(where(line) + "record is not a JSON object");
  RawRecord rec;
  rec.line = line;
  rec.id = obj.contains("id") ? json_scalar_to_string(obj["id"], line, "id")
                              : "line" + std::to_string(line);
  if (!obj.contains("speaker"))
    throw ParseError(where(line) + "missing field 'speaker'");
  rec.speaker = json_scalar_to_string(obj["speaker"], line, "speaker");
  if (!obj.contains(factor_field))
    throw ParseError(where(line) + "missing factor field '" + factor_field +
                     "'");
  rec.group = json_scalar_to_string(obj[factor_field], line, factor_field);

  const bool has_text = obj.contains("ref") || obj.contains("hyp");
  const bool has_counts = obj.contains("errors") || obj.contains("words");
  if (has_text && has_counts)
    throw MixedSchemaError(where(line) +
                           "record mixes ref/hyp text with errors/words counts");
  if (has_text) {
    if (!obj.contains("ref") || !obj.contains("hyp"))
      throw ParseError(where(line) + "text records need both 'ref' and 'hyp'");
    if (!obj["ref"].is_string() || !obj["hyp"].is_string())
      throw ParseError(where(line) + "'ref' and 'hyp' must be strings");
    rec.schema = RecordSchema::Text;
    rec.ref = obj["ref"].get<std::string>();
    rec.hyp = obj["hyp"].get<std::string>();
  } else if (has_counts) {
    if (!obj.contains("errors") || !obj.contains("words"))
      throw ParseError(where(line) +
                       "count records need both 'errors' and 'words'");
    rec.schema = RecordSchema::Counts;
    rec.errors = json_count(obj["errors"], line, "errors");
    rec.words = json_count(obj["words"], line, "words");
  } else {
    throw ParseError(where(line) +
                     "record has neither ref/hyp nor errors/words");
  }

  if (obj.contains("cov")) {
    const auto &cov = obj["cov"];
    if (!cov.is_array())
      throw NonNumericCovariateError(where(line) + "'cov' must be an array");
    std::vector<double> values;
    values.reserve(cov.size());
    for (std::size_t k = 0; k < cov.size(); ++k) {
      if (!cov[k].is_number())
        throw NonNumericCovariateError(where(line) + "covariate " +
                                       std::to_string(k) + " is not numeric");
      values.push_back(cov[k].get<double>());
    }
    rec.cov = std::move(values);
  }
  return rec;
}

/// Splits one CSV line into fields (RFC 4180 quoting, no embedded newlines).
inline std::vector<std::string> split_csv_line(const std::string &line,
                                               std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw ParseError(where(line_no) + "unterminated quote");
  fields.push_back(std::move(field));
  return fields;
}

inline std::int64_t parse_count(const std::string &s, std::size_t line,
                                const std::string &field) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception &) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || v < 0)
    throw ParseError(where(line) + "field '" + field +
                     "' must be a non-negative integer, got '" + s + "'");
  return v;
}

inline double parse_covariate(const std::string &s, std::size_t line,
                              const std::string &column) {
  std::size_t pos = 0;
  double v = 0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception &) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size() || !std::isfinite(v))
    throw NonNumericCovariateError(where(line) + "covariate '" + column +
                                   "' is not numeric: '" + s + "'");
  return v;
}

inline std::vector<RawRecord> read_jsonl(std::istream &in,
                                         const std::string &factor_field) {
  std::vector<RawRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &e) {
      throw ParseError(where(line_no) + "invalid JSON: " + e.what());
    }
    records.push_back(parse_json_record(obj, line_no, factor_field));
  }
  return records;
}

inline std::vector<RawRecord> read_csv(std::istream &in,
                                       const std::string &factor_field) {
  std::string line;
  if (!std::getline(in, line)) return {};
  const auto header = split_csv_line(line, 1);
  std::map<std::string, std::size_t> column;
  for (std::size_t c = 0; c < header.size(); ++c) column[header[c]] = c;
  auto col = [&](const std::string &name) -> std::optional<std::size_t> {
    auto it = column.find(name);
    if (it == column.end()) return std::nullopt;
    return it->second;
  };
  for (const char *required : {"speaker"})
    if (!col(required))
      throw ParseError(std::string("CSV header lacks column '") + required +
                       "'");
  if (!col(factor_field))
    throw ParseError("CSV header lacks factor column '" + factor_field + "'");
  const bool text_cols = col("ref") && col("hyp");
  const bool count_cols = col("errors") && col("words");
  if (!text_cols && !count_cols)
    throw ParseError("CSV header needs ref,hyp or errors,words columns");
  std::size_t dim = 0;
  while (col("cov_" + std::to_string(dim))) ++dim;

  std::vector<RawRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r\n,") == std::string::npos) continue;
    auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size())
      throw ParseError(where(line_no) + "expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    RawRecord rec;
    rec.line = line_no;
    rec.id = col("id") ? fields[*col("id")] : "line" + std::to_string(line_no);
    rec.speaker = fields[*col("speaker")];
    rec.group = fields[*col(factor_field)];
    const bool has_text =
        text_cols && (!fields[*col("ref")].empty() || !fields[*col("hyp")].empty());
    const bool has_counts = count_cols && (!fields[*col("errors")].empty() ||
                                           !fields[*col("words")].empty());
    if (has_text && has_counts)
      throw MixedSchemaError(where(line_no) +
                             "row fills both ref/hyp and errors/words");
    if (has_counts) {
      rec.schema = RecordSchema::Counts;
      rec.errors = parse_count(fields[*col("errors")], line_no, "errors");
      rec.words = parse_count(fields[*col("words")], line_no, "words");
    } else if (text_cols) {
      // Both text cells empty is a legitimate empty-reference record.
      rec.schema = RecordSchema::Text;
      rec.ref = fields[*col("ref")];
      rec.hyp = fields[*col("hyp")];
    } else {
      throw ParseError(where(line_no) + "row has no errors/words values");
    }
    if (dim > 0) {
      std::vector<double> cov(dim);
      for (std::size_t k = 0; k < dim; ++k) {
        const std::string name = "cov_" + std::to_string(k);
        cov[k] = parse_covariate(fields[*col(name)], line_no, name);
      }
      rec.cov = std::move(cov);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline Corpus build_corpus(std::vector<RawRecord> records,
                           const LoadOptions &options) {
  Corpus corpus;
  corpus.factor.name = options.factor_field;
  corpus.factor.levels = options.levels;
  const bool declared = !options.levels.empty();

  RecordSchema schema = RecordSchema::Unknown;
  std::optional<std::size_t> dim;
  std::unordered_map<std::string, std::size_t> level_of_speaker;

  for (auto &rec : records) {
    if (schema == RecordSchema::Unknown) {
      schema = rec.schema;
    } else if (schema != rec.schema) {
      throw MixedSchemaError(where(rec.line) +
                             "file mixes text records and count records");
    }

    const std::size_t rec_dim = rec.cov ? rec.cov->size() : 0;
    if (!dim) {
      dim = rec_dim;
    } else if (*dim != rec_dim) {
      throw CovariateDimensionError(
          where(rec.line) + "expected " + std::to_string(*dim) +
          " covariates, got " + std::to_string(rec_dim));
    }

    Utterance u;
    u.id = rec.id;
    u.speaker = rec.speaker;
    if (rec.cov) u.covariates = std::move(*rec.cov);
    if (rec.schema == RecordSchema::Text) {
      const auto ref = tokenize(rec.ref, options.normalize);
      const auto hyp = tokenize(rec.hyp, options.normalize);
      const ErrorCounts counts = align(ref, hyp);
      u.errors = counts.total();
      u.ref_words = counts.ref_words;
      u.detail = counts;
    } else {
      u.errors = rec.errors;
      u.ref_words = rec.words;
    }
    if (u.ref_words == 0) {
      ErrorCounts counts = u.detail.value_or(
          ErrorCounts{u.errors, 0, 0, 0});
      corpus.exclusions.push_back(
          {u.id, rec.line, counts, "empty reference"});
      continue;
    }

    auto level = corpus.factor.find(rec.group);
    if (!level) {
      if (declared)
        throw UnknownGroupError(where(rec.line) + "unknown level '" +
                                rec.group + "' of factor '" +
                                options.factor_field + "'");
      corpus.factor.levels.push_back(rec.group);
      level = corpus.factor.levels.size() - 1;
    }
    u.level = *level;

    auto [it, inserted] = level_of_speaker.emplace(u.speaker, u.level);
    if (options.require_speaker_level_factor && !inserted &&
        it->second != u.level)
      throw SpeakerGroupConflictError(
          where(rec.line) + "speaker '" + u.speaker + "' appears under '" +
          corpus.factor.levels[it->second] + "' and '" + rec.group + "'");
    corpus.utterances.push_back(std::move(u));
  }

  for (std::size_t k = 0; k < dim.value_or(0); ++k)
    corpus.covariate_names.push_back("cov_" + std::to_string(k));
  if (!options.reference_level.empty())
    corpus.factor.reference_level =
        corpus.factor.index_of(options.reference_level);
  return corpus;
}

}  // namespace detail

/// Reads a corpus from JSON Lines or CSV. Records with an empty reference are
/// scored but moved to Corpus::exclusions instead of utterances.
inline Corpus load_corpus(std::istream &in, const LoadOptions &options) {
  if (options.format == InputFormat::Csv)
    return detail::build_corpus(detail::read_csv(in, options.factor_field),
                                options);
  return detail::build_corpus(detail::read_jsonl(in, options.factor_field),
                              options);
}

inline Corpus load_corpus(const std::filesystem::path &path,
                          LoadOptions options = {}) {
  if (!std::filesystem::exists(path)) throw FileNotFoundError(path.string());
  std::ifstream in(path);
  if (!in) throw FileNotFoundError(path.string());
  if (options.format == InputFormat::Auto) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    options.format = ext == ".csv" ? InputFormat::Csv : InputFormat::JsonLines;
  }
  return load_corpus(in, options);
}

struct LevelSummary {
  std::string label;
  std::size_t utterances = 0;
  std::size_t speakers = 0;
  std::int64_t words = 0;
  std::int64_t errors = 0;
  double wer = 0.0;
};

struct CorpusSummary {
  std::vector<LevelSummary> levels;
  LevelSummary total;
  std::size_t excluded = 0;
  // Summed over utterances scored from text; zero for count records.
  ErrorCounts edit_breakdown;
};

/// Per-level utterance, speaker, word and error counts with empirical WER.
inline CorpusSummary summarize(const Corpus &corpus) {
  CorpusSummary summary;
  summary.levels.resize(corpus.factor.size());
  std::vector<std::set<std::string>> speakers(corpus.factor.size());
  std::set<std::string> all_speakers;
  for (std::size_t l = 0; l < corpus.factor.size(); ++l)
    summary.levels[l].label = corpus.factor.levels[l];
  summary.total.label = "all";
  for (const auto &u : corpus.utterances) {
    auto &row = summary.levels.at(u.level);
    ++row.utterances;
    row.words += u.ref_words;
    row.errors += u.errors;
    speakers[u.level].insert(u.speaker);
    all_speakers.insert(u.speaker);
    if (u.detail) summary.edit_breakdown += *u.detail;
  }
  auto finish = [](LevelSummary &row) {
    row.wer = row.words > 0 ? static_cast<double>(row.errors) /
                                  static_cast<double>(row.words)
                            : 0.0;
  };
  for (std::size_t l = 0; l < summary.levels.size(); ++l) {
    auto &row = summary.levels[l];
    row.speakers = speakers[l].size();
    finish(row);
    summary.total.utterances += row.utterances;
    summary.total.words += row.words;
    summary.total.errors += row.errors;
  }
  summary.total.speakers = all_speakers.size();
  finish(summary.total);
  summary.excluded = corpus.exclusions.size();
  return summary;
}

}  // namespace werfair

#endif  // WERFAIR_DATASET_HPP_
