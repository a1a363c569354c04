#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <ctime>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fairsel/error.hpp"
#include "fairsel/util.hpp"

namespace fairsel {

inline constexpr std::string_view kUnknownCategory = "unknown";

// One person-level prediction. Group values are aligned with Cohort::attributes.
struct ScoredExample {
  std::string entity_id;
  double score = 0.0;
  int label = 0;
  std::vector<std::string> group_values;
  std::optional<Date> as_of_date;
  std::optional<std::string> model_id;

  friend bool operator==(const ScoredExample&, const ScoredExample&) = default;
};

struct Provenance {
  std::string source;
  std::string ingested_at;
};

struct ValidationSummary {
  std::size_t row_count = 0;
  // attribute -> category -> rows
  std::map<std::string, std::map<std::string, std::size_t>> category_counts;
};

struct Cohort {
  std::vector<ScoredExample> examples;
  std::vector<std::string> attributes;
  Provenance provenance;
  ValidationSummary summary;

  std::size_t size() const { return examples.size(); }

  std::size_t attribute_index(std::string_view attribute) const {
    auto it = std::find(attributes.begin(), attributes.end(), attribute);
    if (it == attributes.end()) {
      throw ValidationError("unknown attribute '" + std::string(attribute) + "'");
    }
    return static_cast<std::size_t>(it - attributes.begin());
  }

  const std::string& group_of(const ScoredExample& example, std::size_t attribute) const {
    return example.group_values[attribute];
  }

  bool has_dates() const {
    return std::any_of(examples.begin(), examples.end(),
                       [](const ScoredExample& e) { return e.as_of_date.has_value(); });
  }
  bool has_model_ids() const {
    return std::any_of(examples.begin(), examples.end(),
                       [](const ScoredExample& e) { return e.model_id.has_value(); });
  }
};

// Column mapping for score files. Unset date/model columns fall back to
// "as_of_date"/"model_id" when the header has them; unset attribute_cols
// means "every column not otherwise claimed".
struct IngestConfig {
  std::string id_col = "entity_id";
  std::string score_col = "score";
  std::string label_col = "label";
  std::optional<std::vector<std::string>> attribute_cols;
  std::optional<std::string> date_col;
  std::optional<std::string> model_col;

  static IngestConfig from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("ingest config must be a JSON object");
    IngestConfig cfg;
    auto str = [&](const char* key, std::string& out) {
      if (j.contains(key) && !j[key].is_null()) {
        if (!j[key].is_string()) throw ValidationError(std::string("ingest config: ") + key + " must be a string");
        out = j[key].get<std::string>();
      }
    };
    str("id_col", cfg.id_col);
    str("score_col", cfg.score_col);
    str("label_col", cfg.label_col);
    if (j.contains("attribute_cols") && !j["attribute_cols"].is_null()) {
      if (!j["attribute_cols"].is_array()) throw ValidationError("ingest config: attribute_cols must be an array");
      cfg.attribute_cols = j["attribute_cols"].get<std::vector<std::string>>();
    }
    if (j.contains("date_col") && !j["date_col"].is_null()) cfg.date_col = j["date_col"].get<std::string>();
    if (j.contains("model_col") && !j["model_col"].is_null()) cfg.model_col = j["model_col"].get<std::string>();
    return cfg;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["id_col"] = id_col;
    j["score_col"] = score_col;
    j["label_col"] = label_col;
    j["attribute_cols"] = attribute_cols ? nlohmann::json(*attribute_cols) : nlohmann::json(nullptr);
    j["date_col"] = date_col ? nlohmann::json(*date_col) : nlohmann::json(nullptr);
    j["model_col"] = model_col ? nlohmann::json(*model_col) : nlohmann::json(nullptr);
    return j;
  }
};

namespace csv {

struct Record {
  std::size_t line = 0;  // 1-based line where the record starts
  std::vector<std::string> fields;
};

// RFC 4180-style reader: quoted fields may hold commas, doubled quotes and newlines.
class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  bool next(Record& record) {
    record.fields.clear();
    int c = in_.get();
    if (c == EOF) return false;
    record.line = line_;
    std::string field;
    bool quoted = false;
    bool field_started_quoted = false;
    for (;; c = in_.get()) {
      if (c == EOF) {
        if (quoted) throw DataError("line " + std::to_string(record.line) + ": unterminated quoted field");
        record.fields.push_back(std::move(field));
        return true;
      }
      char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          if (in_.peek() == '"') {
            in_.get();
            field.push_back('"');
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
        continue;
      }
      if (ch == '"' && field.empty() && !field_started_quoted) {
        quoted = true;
        field_started_quoted = true;
      } else if (ch == ',') {
        record.fields.push_back(std::move(field));
        field.clear();
        field_started_quoted = false;
      } else if (ch == '\n') {
        ++line_;
        if (!field.empty() && field.back() == '\r' && !field_started_quoted) field.pop_back();
        record.fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(ch);
      }
    }
  }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
};

inline std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    out << escape(fields[i]);
  }
  out << '\n';
}

}  // namespace csv

namespace detail {

inline std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

inline std::string now_iso8601() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

inline void summarize(Cohort& cohort) {
  cohort.summary = ValidationSummary{};
  cohort.summary.row_count = cohort.examples.size();
  for (std::size_t a = 0; a < cohort.attributes.size(); ++a) {
    auto& counts = cohort.summary.category_counts[cohort.attributes[a]];
    for (const auto& e : cohort.examples) ++counts[e.group_values[a]];
  }
}

// Parses a delimited score file. Row-level problems raise DataError naming the line.
inline Cohort parse_score_file(std::istream& source, const IngestConfig& schema,
                               std::string source_name = "<stream>") {
  csv::Reader reader(source);
  csv::Record header;
  if (!reader.next(header) || (header.fields.size() == 1 && detail::trim(header.fields[0]).empty())) {
    throw DataError(source_name + ": empty file");
  }
  if (!header.fields.empty() && header.fields[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    header.fields[0].erase(0, 3);
  }
  for (auto& h : header.fields) h = detail::trim(h);

  auto find_col = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = std::find(header.fields.begin(), header.fields.end(), name);
    if (it == header.fields.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.fields.begin());
  };
  auto require_col = [&](const std::string& name) {
    auto idx = find_col(name);
    if (!idx) throw DataError(source_name + ": missing required column '" + name + "'");
    return *idx;
  };

  const std::size_t id_idx = require_col(schema.id_col);
  const std::size_t score_idx = require_col(schema.score_col);
  const std::size_t label_idx = require_col(schema.label_col);
  std::optional<std::size_t> date_idx =
      schema.date_col ? std::optional{require_col(*schema.date_col)} : find_col("as_of_date");
  std::optional<std::size_t> model_idx =
      schema.model_col ? std::optional{require_col(*schema.model_col)} : find_col("model_id");

  Cohort cohort;
  std::vector<std::size_t> attr_idx;
  if (schema.attribute_cols) {
    for (const auto& name : *schema.attribute_cols) {
      if (std::find(cohort.attributes.begin(), cohort.attributes.end(), name) != cohort.attributes.end()) {
        throw ValidationError("attribute '" + name + "' declared twice");
      }
      cohort.attributes.push_back(name);
      attr_idx.push_back(require_col(name));
    }
  } else {
    for (std::size_t i = 0; i < header.fields.size(); ++i) {
      if (i == id_idx || i == score_idx || i == label_idx || (date_idx && i == *date_idx) ||
          (model_idx && i == *model_idx)) {
        continue;
      }
      cohort.attributes.push_back(header.fields[i]);
      attr_idx.push_back(i);
    }
  }

  std::unordered_map<std::string, std::size_t> seen;  // key -> line
  csv::Record row;
  while (reader.next(row)) {
    if (row.fields.size() == 1 && detail::trim(row.fields[0]).empty()) continue;  // blank line
    const std::string where = source_name + ": line " + std::to_string(row.line);
    if (row.fields.size() != header.fields.size()) {
      throw DataError(where + ": expected " + std::to_string(header.fields.size()) + " fields, found " +
                      std::to_string(row.fields.size()));
    }
    ScoredExample ex;
    ex.entity_id = detail::trim(row.fields[id_idx]);
    if (ex.entity_id.empty()) throw DataError(where + ": empty entity id");

    auto score = parse_double(row.fields[score_idx]);
    if (!score || !std::isfinite(*score)) {
      throw DataError(where + ": malformed score '" + row.fields[score_idx] + "'");
    }
    ex.score = *score;

    auto label = parse_double(row.fields[label_idx]);
    if (!label || (*label != 0.0 && *label != 1.0)) {
      throw DataError(where + ": label '" + row.fields[label_idx] + "' is not 0 or 1");
    }
    ex.label = *label == 1.0 ? 1 : 0;

    if (date_idx) {
      auto text = detail::trim(row.fields[*date_idx]);
      if (!text.empty()) {
        auto d = parse_date(text);
        if (!d) throw DataError(where + ": malformed date '" + text + "'");
        ex.as_of_date = *d;
      }
    }
    if (model_idx) {
      auto text = detail::trim(row.fields[*model_idx]);
      if (!text.empty()) ex.model_id = std::move(text);
    }
    ex.group_values.reserve(attr_idx.size());
    for (auto idx : attr_idx) {
      auto value = detail::trim(row.fields[idx]);
      ex.group_values.push_back(value.empty() ? std::string(kUnknownCategory) : std::move(value));
    }

    std::string key = ex.entity_id;
    key += '\x1f';
    key += ex.model_id.value_or("");
    key += '\x1f';
    key += ex.as_of_date ? format_date(*ex.as_of_date) : "";
    auto [it, inserted] = seen.emplace(std::move(key), row.line);
    if (!inserted) {
      throw DataError(source_name + ": duplicate key for entity '" + ex.entity_id + "' on lines " +
                      std::to_string(it->second) + " and " + std::to_string(row.line));
    }
    cohort.examples.push_back(std::move(ex));
  }
  if (cohort.examples.empty()) throw DataError(source_name + ": no data rows");

  cohort.provenance = {source_name, detail::now_iso8601()};
  summarize(cohort);
  return cohort;
}

inline Cohort load_score_file(const std::string& path, const IngestConfig& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return parse_score_file(in, schema, path);
}

// Writes the standard score-file layout; parse_score_file(ingest_config_for(c)) reads it back.
inline void write_score_file(const Cohort& cohort, std::ostream& out) {
  const bool dates = cohort.has_dates();
  const bool models = cohort.has_model_ids();
  std::vector<std::string> fields{"entity_id", "score", "label"};
  if (dates) fields.push_back("as_of_date");
  if (models) fields.push_back("model_id");
  fields.insert(fields.end(), cohort.attributes.begin(), cohort.attributes.end());
  csv::write_row(out, fields);
  for (const auto& e : cohort.examples) {
    fields.clear();
    fields.push_back(e.entity_id);
    fields.push_back(format_double(e.score));
    fields.push_back(e.label ? "1" : "0");
    if (dates) fields.push_back(e.as_of_date ? format_date(*e.as_of_date) : "");
    if (models) fields.push_back(e.model_id.value_or(""));
    fields.insert(fields.end(), e.group_values.begin(), e.group_values.end());
    csv::write_row(out, fields);
  }
}

inline IngestConfig ingest_config_for(const Cohort& cohort) {
  IngestConfig cfg;
  cfg.attribute_cols = cohort.attributes;
  if (cohort.has_dates()) cfg.date_col = "as_of_date";
  if (cohort.has_model_ids()) cfg.model_col = "model_id";
  return cfg;
}

// Indices into Cohort::examples, grouped by category (categories in name order).
using GroupPartition = std::map<std::string, std::vector<std::size_t>>;

inline GroupPartition partition_by_group(const Cohort& cohort, std::string_view attribute) {
  const std::size_t a = cohort.attribute_index(attribute);
  GroupPartition parts;
  for (std::size_t i = 0; i < cohort.examples.size(); ++i) {
    parts[cohort.examples[i].group_values[a]].push_back(i);
  }
  return parts;
}

}  // namespace fairsel
