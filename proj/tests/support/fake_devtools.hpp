#pragma once

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <atomic>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "treejudge/cache/raster.hpp"
#include "treejudge/core/document.hpp"
#include "treejudge/core/hash.hpp"

namespace treejudge::testing {

struct FakePage {
  int status = 200;
  std::string mime = "text/html";
  std::string title;
  std::string text;
  std::string html;
  double height = 720;
};

// Minimal browser stand-in speaking the DevTools HTTP + websocket protocol:
// enough of Page/Network/Runtime for the renderer's happy and sad paths.
class FakeDevTools {
 public:
  FakeDevTools() : acceptor_(ioc_, {boost::asio::ip::make_address("127.0.0.1"), 0}) {
    port_ = acceptor_.local_endpoint().port();
    thread_ = std::thread([this] { serve(); });
  }

  ~FakeDevTools() {
    stopping_ = true;
    // A blocked accept() does not wake on close(); poke it with a connection.
    boost::system::error_code ec;
    boost::asio::io_context poke_ctx;
    tcp::socket poke(poke_ctx);
    poke.connect({boost::asio::ip::make_address("127.0.0.1"), static_cast<unsigned short>(port_)}, ec);
    if (thread_.joinable()) thread_.join();
    for (auto& t : sessions_) t.join();
  }

  void add_page(const std::string& url, FakePage page) {
    std::lock_guard lock(mu_);
    pages_[url] = std::move(page);
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }

  std::vector<std::string> methods() const {
    std::lock_guard lock(mu_);
    return methods_;
  }

  int closed_targets() const { return closed_.load(); }

 private:
  using tcp = boost::asio::ip::tcp;

  void serve() {
    while (!stopping_) {
      tcp::socket socket(ioc_);
      boost::system::error_code ec;
      acceptor_.accept(socket, ec);
      if (ec || stopping_) return;
      sessions_.emplace_back([this, s = std::move(socket)]() mutable { handle(std::move(s)); });
    }
  }

  void handle(tcp::socket socket) {
    namespace beast = boost::beast;
    namespace http = beast::http;
    beast::flat_buffer buffer;
    http::request<http::string_body> req;
    boost::system::error_code ec;
    http::read(socket, buffer, req, ec);
    if (ec) return;
    if (beast::websocket::is_upgrade(req)) {
      beast::websocket::stream<tcp::socket> ws(std::move(socket));
      ws.accept(req, ec);
      if (!ec) websocket_loop(ws);
      return;
    }
    http::response<http::string_body> res{http::status::ok, req.version()};
    std::string target(req.target());
    if (target.rfind("/json/new", 0) == 0 && req.method() == http::verb::put) {
      int id = ++targets_;
      res.body() = Json{{"id", "T" + std::to_string(id)},
                        {"webSocketDebuggerUrl", "ws://127.0.0.1:" + std::to_string(port_) + "/devtools/page/T" +
                                                     std::to_string(id)}}
                       .dump();
    } else if (target.rfind("/json/close/", 0) == 0) {
      ++closed_;
      res.body() = "Target is closing";
    } else {
      res.result(http::status::not_found);
    }
    res.prepare_payload();
    http::write(socket, res, ec);
  }

  template <typename Ws>
  void websocket_loop(Ws& ws) {
    namespace beast = boost::beast;
    FakePage page;
    std::string url;
    for (;;) {
      beast::flat_buffer buffer;
      boost::system::error_code ec;
      ws.read(buffer, ec);
      if (ec) return;
      auto msg = Json::parse(beast::buffers_to_string(buffer.data()));
      std::string method = msg["method"];
      {
        std::lock_guard lock(mu_);
        methods_.push_back(method);
      }
      Json result = Json::object();
      std::vector<Json> events;
      if (method == "Page.navigate") {
        url = msg["params"]["url"];
        std::lock_guard lock(mu_);
        auto it = pages_.find(url);
        if (it == pages_.end()) {
          result = {{"frameId", "F1"}, {"errorText", "net::ERR_NAME_NOT_RESOLVED"}};
        } else {
          page = it->second;
          result = {{"frameId", "F1"}, {"loaderId", "L1"}};
          events.push_back({{"method", "Network.responseReceived"},
                            {"params",
                             {{"type", "Document"},
                              {"frameId", "F1"},
                              {"response", {{"status", page.status}, {"url", url}, {"mimeType", page.mime}}}}}});
          events.push_back(
              {{"method", "Page.lifecycleEvent"}, {"params", {{"frameId", "F1"}, {"name", "networkIdle"}}}});
        }
      } else if (method == "Runtime.evaluate") {
        std::string expr = msg["params"]["expression"];
        if (expr.find("JSON.stringify") != std::string::npos) {
          Json snap = {{"title", page.title}, {"text", page.text}, {"html", page.html}, {"href", url}};
          result = {{"result", {{"type", "string"}, {"value", snap.dump()}}}};
        } else {
          result = {{"result", {{"type", "undefined"}}}};
        }
      } else if (method == "Page.getLayoutMetrics") {
        result = {{"cssContentSize", {{"x", 0}, {"y", 0}, {"width", 1280}, {"height", page.height}}}};
      } else if (method == "Page.captureScreenshot") {
        double h = msg["params"]["clip"]["height"];
        cache::GrayImage img(1280, static_cast<int>(h), 200);
        result = {{"data", base64_encode(cache::encode_png(img))}};
      }
      Json reply = {{"id", msg["id"]}, {"result", result}};
      ws.write(boost::asio::buffer(reply.dump()), ec);
      for (auto& e : events) ws.write(boost::asio::buffer(e.dump()), ec);
      if (ec) return;
    }
  }

  boost::asio::io_context ioc_;
  boost::asio::ip::tcp::acceptor acceptor_;
  int port_ = 0;
  std::thread thread_;
  std::vector<std::thread> sessions_;
  std::atomic<bool> stopping_{false};
  std::atomic<int> targets_{0};
  std::atomic<int> closed_{0};
  mutable std::mutex mu_;
  std::map<std::string, FakePage> pages_;
  std::vector<std::string> methods_;
};

}  // namespace treejudge::testing
