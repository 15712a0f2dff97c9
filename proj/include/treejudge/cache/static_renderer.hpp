#pragma once

#include <httplib.h>

#include <spdlog/spdlog.h>

#include <string>
#include <utility>

#include "treejudge/cache/html_text.hpp"
#include "treejudge/cache/pdf_text.hpp"
#include "treejudge/cache/raster.hpp"
#include "treejudge/cache/renderer.hpp"

namespace treejudge::cache {

// Renderer for hosts without a browser: plain HTTP fetch, no script
// execution. <noscript> fallbacks and iframe documents stand in for
// script-inserted and lazily loaded content. Screenshots are text
// rasterizations, not pixel-faithful captures.
class StaticRenderer : public Renderer {
 public:
  explicit StaticRenderer(RenderPolicy policy = {}, int max_frames = 4)
      : policy_(std::move(policy)), max_frames_(max_frames) {}

  std::string name() const override { return "static"; }

  RenderResult render(const std::string& url) override {
    RenderResult r;
    std::string body;
    if (!fetch(url, r, body)) return r;
    r.reachable = true;
    r.body = body;

    bool pdf = r.content_type.find("application/pdf") != std::string::npos || looks_like_pdf(body);
    if (r.http_status >= 400 && r.http_status != 401 && r.http_status != 403 && r.http_status != 429) {
      r.kind = ContentKind::unreachable;
      r.failure = "HTTP " + std::to_string(r.http_status);
      return r;
    }
    if (pdf) {
      r.kind = ContentKind::pdf;
      PdfDocument doc;
      try {
        doc = extract_pdf(body);
      } catch (const std::exception& e) {
        spdlog::warn("pdf text extraction failed for {}: {}", url, e.what());
      }
      r.text = doc.text();
      r.body.clear();
      TileLayout layout = tile_layout();
      layout.max_tiles = 1;
      for (const auto& page : doc.pages) {
        if (static_cast<int>(r.screenshots.size()) >= policy_.max_tiles) break;
        r.screenshots.push_back(render_text_tiles(page, layout).front());
      }
      if (r.screenshots.empty()) r.screenshots = render_text_tiles(r.text, tile_layout());
      return r;
    }

    r.kind = ContentKind::html;
    auto doc = extract_html(body);
    r.title = doc.title;
    r.text = doc.text;
    int frames = 0;
    for (const auto& src : doc.frames) {
      if (frames >= max_frames_) break;
      std::string frame_url = resolve_url(r.final_url, src);
      if (frame_url.rfind("http://", 0) != 0 && frame_url.rfind("https://", 0) != 0) continue;
      RenderResult fr;
      std::string frame_body;
      if (!fetch(frame_url, fr, frame_body) || fr.http_status >= 400) continue;
      ++frames;
      auto inner = extract_html(frame_body).text;
      if (inner.empty()) continue;
      if (!r.text.empty()) r.text += "\n";
      r.text += inner;
    }
    std::string visible = r.title.empty() ? r.text : r.title + "\n\n" + r.text;
    r.screenshots = render_text_tiles(visible, tile_layout());
    return r;
  }

 private:
  TileLayout tile_layout() const {
    TileLayout l;
    l.width = policy_.viewport_width;
    l.height = policy_.viewport_height;
    l.max_tiles = policy_.max_tiles;
    return l;
  }

  static std::pair<std::string, std::string> split(const std::string& url) {
    auto scheme_end = url.find("://");
    auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
  }

  // Follows up to 10 redirects by hand so the final URL is known.
  bool fetch(const std::string& url, RenderResult& r, std::string& body) const {
    std::string current = url;
    for (int hop = 0; hop < 10; ++hop) {
      auto [origin, path] = split(current);
      httplib::Client client(origin);
      auto secs = std::chrono::duration_cast<std::chrono::seconds>(policy_.timeout);
      client.set_connection_timeout(secs);
      client.set_read_timeout(secs);
      client.set_follow_location(false);
      httplib::Headers headers = {{"User-Agent", policy_.user_agent}, {"Accept", "text/html,application/pdf,*/*"}};
      auto res = client.Get(path, headers);
      if (!res) {
        r.reachable = false;
        r.failure = "fetch failed: " + httplib::to_string(res.error());
        r.final_url = current;
        return false;
      }
      if (res->status >= 300 && res->status < 400 && res->has_header("Location")) {
        current = resolve_url(current, res->get_header_value("Location"));
        continue;
      }
      r.http_status = res->status;
      r.final_url = current;
      r.content_type = res->get_header_value("Content-Type");
      body = std::move(res->body);
      return true;
    }
    r.reachable = false;
    r.failure = "too many redirects";
    r.final_url = current;
    return false;
  }

  RenderPolicy policy_;
  int max_frames_;
};

}  // namespace treejudge::cache
