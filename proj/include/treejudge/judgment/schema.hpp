#pragma once

#include <memory>
#include <string>
#include <vector>

#include "treejudge/core/document.hpp"
#include "treejudge/core/error.hpp"

namespace treejudge::judgment {

enum class FieldType { text, url, number, boolean, list, record };

// One field of an extraction record. Every field is nullable.
struct FieldSpec {
  std::string name;
  FieldType type = FieldType::text;
  std::string description;
  std::shared_ptr<FieldSpec> item;  // list element
  std::vector<FieldSpec> fields;    // record members

  static FieldSpec text(std::string name, std::string description = {}) {
    return {std::move(name), FieldType::text, std::move(description), nullptr, {}};
  }
  static FieldSpec url(std::string name, std::string description = {}) {
    return {std::move(name), FieldType::url, std::move(description), nullptr, {}};
  }
  static FieldSpec number(std::string name, std::string description = {}) {
    return {std::move(name), FieldType::number, std::move(description), nullptr, {}};
  }
  static FieldSpec boolean(std::string name, std::string description = {}) {
    return {std::move(name), FieldType::boolean, std::move(description), nullptr, {}};
  }
  static FieldSpec list(std::string name, FieldSpec item, std::string description = {}) {
    return {std::move(name), FieldType::list, std::move(description), std::make_shared<FieldSpec>(std::move(item)), {}};
  }
  static FieldSpec record(std::string name, std::vector<FieldSpec> fields, std::string description = {}) {
    return {std::move(name), FieldType::record, std::move(description), nullptr, std::move(fields)};
  }
};

namespace schema_detail {

inline Json field_schema(const FieldSpec& f);

inline Json record_schema(const std::vector<FieldSpec>& fields) {
  Json props = Json::object();
  Json required = Json::array();
  for (const auto& f : fields) {
    props[f.name] = field_schema(f);
    required.push_back(f.name);
  }
  return {{"type", "object"}, {"properties", props}, {"required", required}, {"additionalProperties", false}};
}

inline Json field_schema(const FieldSpec& f) {
  Json s;
  switch (f.type) {
    case FieldType::text:
    case FieldType::url:
      s = {{"type", {"string", "null"}}};
      break;
    case FieldType::number:
      s = {{"type", {"number", "null"}}};
      break;
    case FieldType::boolean:
      s = {{"type", {"boolean", "null"}}};
      break;
    case FieldType::list:
      s = {{"type", {"array", "null"}}, {"items", field_schema(*f.item)}};
      break;
    case FieldType::record:
      s = record_schema(f.fields);
      s["type"] = {"object", "null"};
      break;
  }
  if (!f.description.empty()) s["description"] = f.description;
  return s;
}

inline Json conform(const FieldSpec& f, const Json& v, const std::string& path) {
  if (v.is_null()) return nullptr;
  auto bad = [&](const char* want) {
    return ResponseFormatError("field '" + path + "' should be " + want + ", got " + v.dump());
  };
  switch (f.type) {
    case FieldType::text:
    case FieldType::url:
      if (!v.is_string()) throw bad("a string");
      return v;
    case FieldType::number:
      if (!v.is_number()) throw bad("a number");
      return v;
    case FieldType::boolean:
      if (!v.is_boolean()) throw bad("a boolean");
      return v;
    case FieldType::list: {
      if (!v.is_array()) throw bad("a list");
      Json out = Json::array();
      for (std::size_t i = 0; i < v.size(); ++i) out.push_back(conform(*f.item, v[i], path + "[" + std::to_string(i) + "]"));
      return out;
    }
    case FieldType::record: {
      if (!v.is_object()) throw bad("an object");
      Json out = Json::object();
      for (const auto& sub : f.fields) {
        out[sub.name] = v.contains(sub.name) ? conform(sub, v[sub.name], path + "." + sub.name) : Json(nullptr);
      }
      return out;
    }
  }
  return nullptr;
}

}  // namespace schema_detail

// Named set of fields the Extractor must fill.
class ExtractionSchema {
 public:
  ExtractionSchema(std::string name, std::vector<FieldSpec> fields) : name_(std::move(name)), fields_(std::move(fields)) {
    if (fields_.empty()) throw ConfigError("extraction schema '" + name_ + "' has no fields");
    check(fields_);
  }

  const std::string& name() const { return name_; }
  const std::vector<FieldSpec>& fields() const { return fields_; }

  Json to_json_schema() const { return schema_detail::record_schema(fields_); }

  // Checks types and fills absent fields with null; unknown keys are dropped.
  Json conform(const Json& reply) const {
    if (!reply.is_object()) throw ResponseFormatError("extraction reply is not a JSON object");
    Json out = Json::object();
    for (const auto& f : fields_) out[f.name] = reply.contains(f.name) ? schema_detail::conform(f, reply[f.name], f.name) : Json(nullptr);
    return out;
  }

 private:
  static void check(const std::vector<FieldSpec>& fields) {
    std::vector<std::string> seen;
    for (const auto& f : fields) {
      if (f.name.empty()) throw ConfigError("extraction field without a name");
      if (std::find(seen.begin(), seen.end(), f.name) != seen.end()) throw ConfigError("duplicate field '" + f.name + "'");
      seen.push_back(f.name);
      if (f.type == FieldType::list && !f.item) throw ConfigError("list field '" + f.name + "' has no item type");
      if (f.type == FieldType::record) {
        if (f.fields.empty()) throw ConfigError("record field '" + f.name + "' has no members");
        check(f.fields);
      }
      if (f.type == FieldType::list && f.item->type == FieldType::record) check(f.item->fields);
    }
  }

  std::string name_;
  std::vector<FieldSpec> fields_;
};

}  // namespace treejudge::judgment
