#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treejudge/cache/html_text.hpp"
#include "treejudge/cache/store.hpp"
#include "treejudge/cache/url.hpp"

namespace treejudge::cache {

struct RenderPolicy {
  int viewport_width = 1280;
  int viewport_height = 720;
  int max_tiles = 8;
  std::chrono::milliseconds timeout{15000};
  std::chrono::milliseconds scroll_settle{2000};  // wait after the lazy-load scroll
  std::string user_agent = "treejudge-cache/0.1";
};

// What a renderer observed for one URL. `reachable` is false when the
// rendering boundary itself failed (connection refused, timeout, DNS).
struct RenderResult {
  bool reachable = false;
  std::string failure;
  int http_status = 0;
  std::string final_url;
  std::string content_type;
  ContentKind kind = ContentKind::unreachable;
  std::string title;
  std::string text;
  std::vector<std::string> screenshots;  // PNG tiles, top to bottom
  std::string body;                      // raw response body, for block fingerprints
};

class Renderer {
 public:
  virtual ~Renderer() = default;
  virtual RenderResult render(const std::string& url) = 0;
  virtual std::string name() const = 0;
};

// Markers specific to bot-challenge interstitials.
inline const std::vector<std::string>& challenge_fingerprints() {
  static const std::vector<std::string> kMarks = {"cf-chl", "challenge-platform", "px-captcha", "captcha-delivery",
                                                  "_incapsula_resource", "datadome"};
  return kMarks;
}

// Phrases that also occur on ordinary pages; only trusted on short ones.
inline const std::vector<std::string>& challenge_phrases() {
  static const std::vector<std::string> kPhrases = {
      "just a moment...",      "attention required!",   "checking your browser", "verify you are human",
      "are you a robot",       "unusual traffic",       "automated access",      "access denied",
      "request blocked",       "g-recaptcha",           "h-captcha"};
  return kPhrases;
}

// Returns why a rendered page counts as refusing automated visits, or
// nothing when it looks like real content.
inline std::optional<std::string> detect_block(const RenderResult& r) {
  if (r.http_status == 401 || r.http_status == 403 || r.http_status == 429) {
    return "HTTP " + std::to_string(r.http_status);
  }
  if (r.kind != ContentKind::html) return std::nullopt;
  std::string hay = html_detail::lower(r.body + "\n" + r.title + "\n" + r.text);
  for (const auto& mark : challenge_fingerprints()) {
    if (hay.find(mark) != std::string::npos) return "challenge fingerprint '" + mark + "'";
  }
  if (r.text.size() < 1500) {
    for (const auto& phrase : challenge_phrases()) {
      if (hay.find(phrase) != std::string::npos) return "challenge fingerprint '" + phrase + "'";
    }
  }
  if (r.text.find_first_not_of(" \t\r\n") == std::string::npos) return "empty rendered body";
  return std::nullopt;
}

// Resolves an href against the page it appeared on.
inline std::string resolve_url(const std::string& base, const std::string& ref) {
  if (ref.empty()) return base;
  auto colon = ref.find(':');
  auto slash = ref.find('/');
  if (colon != std::string::npos && (slash == std::string::npos || colon < slash)) return ref;
  auto scheme_end = base.find("://");
  if (scheme_end == std::string::npos) return ref;
  std::string scheme = base.substr(0, scheme_end);
  auto path_start = base.find('/', scheme_end + 3);
  std::string origin = path_start == std::string::npos ? base : base.substr(0, path_start);
  if (ref.rfind("//", 0) == 0) return scheme + ":" + ref;
  if (ref[0] == '/') return origin + ref;
  std::string path = path_start == std::string::npos ? "/" : base.substr(path_start);
  path = path.substr(0, path.find_first_of("?#"));
  if (ref[0] == '?') return origin + path + ref;
  if (ref[0] == '#') return origin + path;
  return origin + path.substr(0, path.rfind('/') + 1) + ref;
}

}  // namespace treejudge::cache
