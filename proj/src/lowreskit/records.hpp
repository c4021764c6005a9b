#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "lowreskit/common.hpp"

namespace lowreskit {

using json = nlohmann::json;

/// Newline-delimited JSON: one object per non-blank line.
std::vector<json> read_ndjson(const std::filesystem::path& path);
std::vector<json> parse_ndjson(std::string_view text);
void write_ndjson(const std::filesystem::path& path, const std::vector<json>& records);
std::string dump_ndjson(const std::vector<json>& records);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

/// Field access that turns missing/mistyped fields into ValidationError with
/// the field name, instead of nlohmann's generic type_error.
template <typename T>
T require(const json& record, const char* field) {
  auto it = record.find(field);
  if (it == record.end()) {
    throw ValidationError(std::string("missing field '") + field + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + field + "' has the wrong type");
  }
}

template <typename T>
T optional_field(const json& record, const char* field, T fallback) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("field '") + field + "' has the wrong type");
  }
}

}  // namespace lowreskit
