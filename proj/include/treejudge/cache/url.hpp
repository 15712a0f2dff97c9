#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <spdlog/spdlog.h>

#include "treejudge/core/error.hpp"

namespace treejudge::cache {

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline bool istarts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && lower(s.substr(0, prefix.size())) == prefix;
}

inline bool valid_host(std::string_view host) {
  if (host.empty()) return false;
  if (host.front() == '[') return host.back() == ']' && host.size() > 2;
  return std::all_of(host.begin(), host.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '.' || c == '-' || c == '_';
  }) && host.front() != '.' && host.front() != '-';
}

}  // namespace detail

// Canonical cache key: lowercase scheme and host, default port dropped,
// fragment removed, trailing slash canonicalized (root path is "/", other
// paths lose trailing slashes), query kept verbatim. Scheme-less input gets
// "http://". Idempotent.
inline std::string normalize_url(std::string_view raw) {
  auto begin = raw.find_first_not_of(" \t\r\n");
  auto end = raw.find_last_not_of(" \t\r\n");
  if (begin == std::string_view::npos) throw UrlError("empty url");
  std::string_view s = raw.substr(begin, end - begin + 1);
  for (unsigned char c : s) {
    if (std::isspace(c) || c < 0x20) throw UrlError("url contains whitespace: '" + std::string(raw) + "'");
  }

  std::string scheme = "http";
  auto sep = s.find("://");
  auto scheme_char = [](unsigned char c) { return std::isalnum(c) || c == '+' || c == '-' || c == '.'; };
  if (sep != std::string_view::npos && sep > 0 && std::isalpha(static_cast<unsigned char>(s[0])) &&
      std::all_of(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(sep), scheme_char)) {
    scheme = detail::lower(s.substr(0, sep));
    s.remove_prefix(sep + 3);
  }
  if (scheme != "http" && scheme != "https") throw UrlError("unsupported scheme in '" + std::string(raw) + "'");

  auto authority_end = s.find_first_of("/?#");
  std::string_view authority = s.substr(0, authority_end);
  std::string_view rest = authority_end == std::string_view::npos ? std::string_view{} : s.substr(authority_end);

  std::string userinfo;
  if (auto at = authority.rfind('@'); at != std::string_view::npos) {
    userinfo = std::string(authority.substr(0, at + 1));
    authority.remove_prefix(at + 1);
  }
  std::string_view host = authority;
  std::string port;
  auto colon = authority.rfind(':');
  if (colon != std::string_view::npos && (authority.front() != '[' || colon > authority.find(']'))) {
    host = authority.substr(0, colon);
    port = std::string(authority.substr(colon + 1));
    if (!std::all_of(port.begin(), port.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw UrlError("bad port in '" + std::string(raw) + "'");
    }
    while (port.size() > 1 && port.front() == '0') port.erase(0, 1);
  }
  if (!detail::valid_host(host)) throw UrlError("bad host in '" + std::string(raw) + "'");
  if ((scheme == "http" && port == "80") || (scheme == "https" && port == "443")) port.clear();

  std::string_view path = rest.substr(0, rest.find_first_of("?#"));
  std::string query;
  if (auto q = rest.find('?'); q != std::string_view::npos) {
    auto frag = rest.find('#', q);
    query = std::string(rest.substr(q, frag == std::string_view::npos ? std::string_view::npos : frag - q));
  }
  std::string canonical_path(path);
  while (canonical_path.size() > 1 && canonical_path.back() == '/') canonical_path.pop_back();
  if (canonical_path.empty()) canonical_path = "/";

  std::string out = scheme + "://" + userinfo + detail::lower(host);
  if (!port.empty()) out += ":" + port;
  return out + canonical_path + query;
}

// Normalized key -> raw spellings that map to it, in first-seen order.
using UrlCollection = std::map<std::string, std::vector<std::string>>;

namespace detail {

inline bool url_char(unsigned char c) {
  if (c <= 0x20 || c == 0x7f) return false;
  switch (c) {
    case '<': case '>': case '"': case '\'': case '`': case '{': case '}': case '|': case '\\': case '^':
      return false;
    default:
      return true;
  }
}

// Drops trailing sentence punctuation and closing brackets that have no
// opening partner inside the candidate (markdown links, parentheses).
inline std::string_view trim_candidate(std::string_view c) {
  while (!c.empty()) {
    char last = c.back();
    if (std::string_view(".,;:!?*").find(last) != std::string_view::npos) {
      c.remove_suffix(1);
      continue;
    }
    if (last == ')' || last == ']') {
      char open = last == ')' ? '(' : '[';
      auto opens = std::count(c.begin(), c.end(), open);
      auto closes = std::count(c.begin(), c.end(), last);
      if (closes > opens) {
        c.remove_suffix(1);
        continue;
      }
    }
    break;
  }
  return c;
}

}  // namespace detail

// Finds every http(s) URL (and scheme-less "www." address) in the text,
// in order of appearance, trimmed of trailing punctuation.
inline std::vector<std::string> find_urls(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::string_view rest = text.substr(i);
    bool boundary = i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1]));
    bool hit = detail::istarts_with(rest, "http://") || detail::istarts_with(rest, "https://") ||
               (boundary && detail::istarts_with(rest, "www."));
    if (!hit) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && detail::url_char(static_cast<unsigned char>(text[j]))) ++j;
    auto candidate = detail::trim_candidate(text.substr(i, j - i));
    if (!candidate.empty()) out.emplace_back(candidate);
    i = j;
  }
  return out;
}

// Aggregates the unique URLs cited across answers. Malformed candidates
// are skipped with a warning.
inline UrlCollection collect_urls(const std::vector<std::string>& answers) {
  UrlCollection out;
  for (const auto& answer : answers) {
    for (auto& raw : find_urls(answer)) {
      std::string key;
      try {
        key = normalize_url(raw);
      } catch (const UrlError& e) {
        spdlog::warn("skipping url candidate: {}", e.what());
        continue;
      }
      auto& originals = out[key];
      if (std::find(originals.begin(), originals.end(), raw) == originals.end()) originals.push_back(raw);
    }
  }
  return out;
}

}  // namespace treejudge::cache
