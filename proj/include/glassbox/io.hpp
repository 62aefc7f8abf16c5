#pragma once

#include "glassbox/core.hpp"

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace glassbox {

inline constexpr int kModelSchemaVersion = 1;

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

/// Versioned wrapper shared by every model file:
/// {"format": "glassbox-model", "schema_version": N, "kind": ..., "model": ...}.
nlohmann::json make_envelope(const std::string& kind, nlohmann::json body);

/// Validates format, schema version and kind, and returns the body.
const nlohmann::json& open_envelope(const nlohmann::json& envelope, const std::string& expected_kind);

/// Formats a double so that it parses back to the same value.
std::string format_number(double v);

/// Minimal CSV builder: fields containing separators or quotes are quoted.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& row(std::vector<std::string> cells);
  std::string str() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace glassbox
