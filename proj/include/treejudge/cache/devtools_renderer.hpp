#pragma once

#include <httplib.h>

#include <boost/asio/connect.hpp>
#include <boost/asio/io_context.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <spdlog/spdlog.h>

#include <chrono>
#include <deque>
#include <memory>
#include <optional>
#include <string>

#include "treejudge/cache/renderer.hpp"
#include "treejudge/cache/static_renderer.hpp"
#include "treejudge/core/document.hpp"
#include "treejudge/core/hash.hpp"

namespace treejudge::cache {

namespace devtools_detail {

namespace beast = boost::beast;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;
using steady = std::chrono::steady_clock;

// One websocket connection to a page target.
class Session {
 public:
  Session(const std::string& host, const std::string& port, const std::string& path) : ws_(ioc_) {
    tcp::resolver resolver(ioc_);
    auto endpoints = resolver.resolve(host, port);
    beast::get_lowest_layer(ws_).connect(endpoints);
    ws_.handshake(host + ":" + port, path);
  }

  ~Session() {
    beast::error_code ec;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(ws_).socket().close(ec);
  }

  // Sends a command and waits for its reply; events seen meanwhile queue up.
  Json call(const std::string& method, Json params, steady::time_point deadline) {
    int id = ++next_id_;
    Json msg = {{"id", id}, {"method", method}, {"params", std::move(params)}};
    ws_.write(boost::asio::buffer(msg.dump()));
    for (;;) {
      auto m = read(deadline);
      if (!m) throw TransportError("devtools: timed out waiting for " + method);
      if (m->contains("id") && (*m)["id"] == id) {
        if (m->contains("error")) throw TransportError("devtools: " + method + " failed: " + (*m)["error"].dump());
        return m->value("result", Json::object());
      }
      if (m->contains("method")) events_.push_back(std::move(*m));
    }
  }

  // Next event, from the queue or the wire; nullopt at the deadline.
  std::optional<Json> next_event(steady::time_point deadline) {
    if (!events_.empty()) {
      Json e = std::move(events_.front());
      events_.pop_front();
      return e;
    }
    while (auto m = read(deadline)) {
      if (m->contains("method")) return m;
    }
    return std::nullopt;
  }

 private:
  // One read stays outstanding for the life of the session; a timed-out
  // wait leaves it pending rather than cancelling, which would poison the
  // websocket stream.
  void start_read() {
    reading_ = true;
    ws_.async_read(buffer_, [this](beast::error_code ec, std::size_t) {
      reading_ = false;
      if (ec) {
        error_ = ec;
        return;
      }
      inbox_.push_back(Json::parse(beast::buffers_to_string(buffer_.data()), nullptr, false));
      buffer_.consume(buffer_.size());
      start_read();
    });
  }

  std::optional<Json> read(steady::time_point deadline) {
    if (!reading_ && !error_ && inbox_.empty()) start_read();
    while (inbox_.empty()) {
      if (error_) throw TransportError("devtools: read failed: " + error_.message());
      auto now = steady::now();
      if (now >= deadline) return std::nullopt;
      ioc_.restart();
      ioc_.run_one_for(deadline - now);
    }
    Json m = std::move(inbox_.front());
    inbox_.pop_front();
    return m;
  }

  boost::asio::io_context ioc_;
  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  bool reading_ = false;
  beast::error_code error_;
  std::deque<Json> inbox_;
  int next_id_ = 0;
  std::deque<Json> events_;
};

inline constexpr const char* kSnapshotScript =
    "JSON.stringify({title: document.title, text: document.body ? document.body.innerText : '',"
    " html: document.documentElement ? document.documentElement.outerHTML : '', href: location.href})";

}  // namespace devtools_detail

// Drives a headless browser over the DevTools wire protocol: opens a target,
// navigates, waits for network idle (or the timeout), scrolls once to the
// bottom to trigger lazy content, then captures text and viewport tiles.
// PDF responses are re-fetched and handled by the static renderer.
class DevToolsRenderer : public Renderer {
 public:
  // `endpoint` is the browser's HTTP debugging address, e.g. http://127.0.0.1:9222.
  explicit DevToolsRenderer(std::string endpoint, RenderPolicy policy = {})
      : endpoint_(std::move(endpoint)), policy_(std::move(policy)), fallback_(policy_) {
    auto scheme = endpoint_.find("://");
    std::string hostport = scheme == std::string::npos ? endpoint_ : endpoint_.substr(scheme + 3);
    hostport = hostport.substr(0, hostport.find('/'));
    auto colon = hostport.rfind(':');
    host_ = colon == std::string::npos ? hostport : hostport.substr(0, colon);
    port_ = colon == std::string::npos ? "9222" : hostport.substr(colon + 1);
  }

  std::string name() const override { return "devtools"; }

  RenderResult render(const std::string& url) override {
    RenderResult r;
    r.final_url = url;
    httplib::Client http(host_, std::stoi(port_));
    http.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(policy_.timeout));
    auto created = http.Put("/json/new?about:blank", "", "text/plain");
    if (!created || created->status != 200) {
      r.failure = "rendering boundary unavailable at " + endpoint_;
      return r;
    }
    auto target = Json::parse(created->body, nullptr, false);
    if (!target.is_object() || !target.contains("id")) {
      r.failure = "rendering boundary returned no target";
      return r;
    }
    std::string target_id = target["id"].get<std::string>();
    try {
      r = drive(url, "/devtools/page/" + target_id);
    } catch (const std::exception& e) {
      r = RenderResult{};
      r.final_url = url;
      r.failure = std::string("rendering failed: ") + e.what();
    }
    http.Get("/json/close/" + target_id);
    return r;
  }

 private:
  RenderResult drive(const std::string& url, const std::string& ws_path) {
    using devtools_detail::steady;
    RenderResult r;
    r.final_url = url;
    devtools_detail::Session s(host_, port_, ws_path);
    auto deadline = steady::now() + policy_.timeout;
    s.call("Page.enable", Json::object(), deadline);
    s.call("Network.enable", Json::object(), deadline);
    s.call("Page.setLifecycleEventsEnabled", {{"enabled", true}}, deadline);
    s.call("Emulation.setDeviceMetricsOverride",
           {{"width", policy_.viewport_width}, {"height", policy_.viewport_height}, {"deviceScaleFactor", 1},
            {"mobile", false}},
           deadline);
    if (!policy_.user_agent.empty()) s.call("Network.setUserAgentOverride", {{"userAgent", policy_.user_agent}}, deadline);

    auto nav = s.call("Page.navigate", {{"url", url}}, deadline);
    if (nav.contains("errorText") && !nav["errorText"].get<std::string>().empty()) {
      r.failure = "navigation failed: " + nav["errorText"].get<std::string>();
      return r;
    }
    std::string frame = nav.value("frameId", "");
    std::string mime;
    // Network idle or the render timeout, whichever comes first.
    while (auto ev = s.next_event(deadline)) {
      const auto& method = (*ev)["method"];
      const auto& params = (*ev)["params"];
      if (method == "Network.responseReceived" && params.value("type", "") == "Document" &&
          params.value("frameId", "") == frame) {
        r.http_status = params["response"].value("status", 0);
        r.final_url = params["response"].value("url", url);
        mime = params["response"].value("mimeType", "");
        r.content_type = mime;
      } else if (method == "Page.lifecycleEvent" && params.value("name", "") == "networkIdle" &&
                 params.value("frameId", "") == frame) {
        break;
      }
    }
    r.reachable = true;
    if (mime == "application/pdf") {
      auto pdf = fallback_.render(r.final_url);
      if (pdf.reachable) return pdf;
    }

    auto eval = [&](const std::string& expr) {
      return s.call("Runtime.evaluate", {{"expression", expr}, {"returnByValue", true}, {"awaitPromise", true}},
                    steady::now() + policy_.timeout);
    };
    // One scroll pass; give lazy loaders a short settle window.
    eval("window.scrollTo(0, document.body ? document.body.scrollHeight : 0)");
    auto settle = steady::now() + std::min(policy_.timeout, policy_.scroll_settle);
    while (auto ev = s.next_event(settle)) {
      if ((*ev)["method"] == "Page.lifecycleEvent" && (*ev)["params"].value("name", "") == "networkIdle") break;
    }
    eval("window.scrollTo(0, 0)");

    auto snap = eval(devtools_detail::kSnapshotScript);
    auto page = Json::parse(snap["result"].value("value", std::string("{}")), nullptr, false);
    if (page.is_object()) {
      r.title = page.value("title", "");
      r.text = html_detail::tidy(page.value("text", ""));
      r.body = page.value("html", "");
      r.final_url = page.value("href", r.final_url);
    }
    if (r.http_status >= 400 && r.http_status != 401 && r.http_status != 403 && r.http_status != 429) {
      r.kind = ContentKind::unreachable;
      r.failure = "HTTP " + std::to_string(r.http_status);
      return r;
    }
    r.kind = ContentKind::html;

    auto metrics = s.call("Page.getLayoutMetrics", Json::object(), steady::now() + policy_.timeout);
    const Json& size = metrics.contains("cssContentSize") ? metrics["cssContentSize"] : metrics["contentSize"];
    double height = size.value("height", static_cast<double>(policy_.viewport_height));
    for (int i = 0; i < policy_.max_tiles; ++i) {
      double top = static_cast<double>(i) * policy_.viewport_height;
      if (i > 0 && top >= height) break;
      double h = std::min<double>(policy_.viewport_height, std::max(1.0, height - top));
      auto shot = s.call("Page.captureScreenshot",
                         {{"format", "png"},
                          {"captureBeyondViewport", true},
                          {"clip", {{"x", 0}, {"y", top}, {"width", policy_.viewport_width}, {"height", h}, {"scale", 1}}}},
                         steady::now() + policy_.timeout);
      r.screenshots.push_back(base64_decode(shot.value("data", "")));
    }
    return r;
  }

  std::string endpoint_;
  RenderPolicy policy_;
  StaticRenderer fallback_;
  std::string host_;
  std::string port_;
};

}  // namespace treejudge::cache
