#include "glassbox/io.hpp"


#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace glassbox {

using nlohmann::json;

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  try {
    return json::parse(buffer.str());
  } catch (const json::parse_error& e) {
    throw ValidationError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create '" + path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void write_json_file(const std::filesystem::path& path, const json& j) { write_text_file(path, j.dump(2) + "\n"); }

json make_envelope(const std::string& kind, json body) {
  return json{{"format", "glassbox-model"},
              {"schema_version", kModelSchemaVersion},
              {"kind", kind},
              {"tool_version", kToolVersion},
              {"model", std::move(body)}};
}

const json& open_envelope(const json& envelope, const std::string& expected_kind) {
  if (!envelope.is_object() || envelope.value("format", "") != "glassbox-model") {
    throw ValidationError("not a glassbox model file");
  }
  if (!envelope.contains("schema_version") || !envelope.at("schema_version").is_number_integer()) {
    throw ValidationError("model file has no schema_version");
  }
  const int version = envelope.at("schema_version").get<int>();
  if (version != kModelSchemaVersion) {
    throw ValidationError("incompatible model schema version " + std::to_string(version) + " (this build reads " +
                          std::to_string(kModelSchemaVersion) + ")");
  }
  const auto kind = envelope.value("kind", "");
  if (!expected_kind.empty() && kind != expected_kind) {
    throw ValidationError("model file holds a '" + kind + "' model, expected '" + expected_kind + "'");
  }
  if (!envelope.contains("model")) throw ValidationError("model file has no model body");
  return envelope.at("model");
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

CsvWriter& CsvWriter::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw ValidationError("csv row width does not match header");
  rows_.push_back(std::move(cells));
  return *this;
}

namespace {

std::string escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += escape(cells[i]);
  }
  out += '\n';
}

}  // namespace

std::string CsvWriter::str() const {
  std::string out;
  append_line(out, header_);
  for (const auto& r : rows_) append_line(out, r);
  return out;
}

void CsvWriter::save(const std::filesystem::path& path) const { write_text_file(path, str()); }

}  // namespace glassbox
