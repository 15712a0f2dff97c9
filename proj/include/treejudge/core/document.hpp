#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "treejudge/core/error.hpp"

namespace treejudge {

using Json = nlohmann::json;

// Canonical text form shared by every persisted document: sorted keys
// (nlohmann objects are ordered maps), two-space indent, trailing newline.
inline std::string to_canonical_text(const Json& doc) { return doc.dump(2) + "\n"; }

inline Json parse_document(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw DocumentError(std::string("malformed document: ") + e.what());
  }
}

// Checks the "schema" field and returns the document. Unknown versions
// are rejected rather than guessed at.
inline const Json& require_schema(const Json& doc, std::string_view expected) {
  if (!doc.is_object() || !doc.contains("schema") || !doc["schema"].is_string()) {
    throw DocumentError("document has no schema field");
  }
  const auto& got = doc["schema"].get_ref<const std::string&>();
  if (got != expected) {
    throw DocumentError("unsupported schema '" + got + "', expected '" + std::string(expected) + "'");
  }
  return doc;
}

inline const Json& require_field(const Json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw DocumentError(std::string("missing field '") + key + "'");
  }
  return obj[key];
}

inline std::string require_string(const Json& obj, const char* key) {
  const auto& v = require_field(obj, key);
  if (!v.is_string()) throw DocumentError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StorageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Writes via a temporary file and rename so readers never see a torn file.
inline void write_file_atomic(const std::string& path, std::string_view data) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StorageError("cannot write " + tmp);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw StorageError("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw StorageError("cannot rename " + tmp + " to " + path);
  }
}

}  // namespace treejudge
