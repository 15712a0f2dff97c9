#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <spdlog/spdlog.h>

#include "treejudge/cache/url.hpp"
#include "treejudge/core/document.hpp"
#include "treejudge/judgment/schema.hpp"

namespace treejudge::judgment {

namespace sanitize_detail {

inline bool has_scheme(std::string_view s) {
  auto pos = s.find("://");
  if (pos == std::string_view::npos || pos == 0) return false;
  for (std::size_t i = 0; i < pos; ++i) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    if (!std::isalnum(c) && c != '+' && c != '-' && c != '.') return false;
  }
  return true;
}

// The answer-grounded form of one extracted URL, or nullopt.
inline std::optional<std::string> ground(std::string_view answer, const std::string& value) {
  std::string_view v = value;
  while (!v.empty() && std::isspace(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
  while (!v.empty() && std::isspace(static_cast<unsigned char>(v.back()))) v.remove_suffix(1);
  v = cache::detail::trim_candidate(v);
  if (v.empty()) return std::nullopt;

  std::string candidate;
  if (answer.find(v) != std::string_view::npos) {
    candidate = has_scheme(v) ? std::string(v) : "http://" + std::string(v);
  } else if (cache::detail::istarts_with(v, "http://") && v.size() > 7 && !has_scheme(v.substr(7)) &&
             answer.find(v.substr(7)) != std::string_view::npos) {
    // Already carries the prepended protocol from an earlier pass.
    candidate = std::string(v);
  } else {
    return std::nullopt;
  }
  auto scheme = cache::detail::lower(candidate.substr(0, candidate.find("://")));
  if (scheme != "http" && scheme != "https") return std::nullopt;
  try {
    cache::normalize_url(candidate);
  } catch (const UrlError&) {
    return std::nullopt;
  }
  return candidate;
}

inline Json walk(std::string_view answer, const FieldSpec& f, const Json& v, const std::string& path) {
  if (v.is_null()) return v;
  switch (f.type) {
    case FieldType::url: {
      if (!v.is_string()) return nullptr;
      auto g = ground(answer, v.get<std::string>());
      if (!g) {
        spdlog::warn("extracted url at '{}' not found in the answer, dropped: {}", path, v.get<std::string>());
        return nullptr;
      }
      return *g;
    }
    case FieldType::list: {
      Json out = Json::array();
      for (std::size_t i = 0; i < v.size(); ++i) {
        Json item = walk(answer, *f.item, v[i], path + "[" + std::to_string(i) + "]");
        // An ungrounded URL element is removed rather than left as a null hole.
        if (item.is_null() && f.item->type == FieldType::url) continue;
        out.push_back(std::move(item));
      }
      return out;
    }
    case FieldType::record: {
      Json out = v;
      for (const auto& sub : f.fields) {
        if (out.contains(sub.name)) out[sub.name] = walk(answer, sub, out[sub.name], path + "." + sub.name);
      }
      return out;
    }
    default:
      return v;
  }
}

}  // namespace sanitize_detail

// Anti-invention guard for URL fields. A URL survives only if it appears
// verbatim in the answer after trailing punctuation is trimmed; scheme-less
// URLs gain "http://". Ungrounded scalars become null and ungrounded list
// elements are removed. Idempotent.
inline Json sanitize_extracted_urls(std::string_view answer, const ExtractionSchema& schema, const Json& record) {
  Json out = record;
  for (const auto& f : schema.fields()) {
    if (out.contains(f.name)) out[f.name] = sanitize_detail::walk(answer, f, out[f.name], f.name);
  }
  return out;
}

}  // namespace treejudge::judgment
