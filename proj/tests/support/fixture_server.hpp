#pragma once

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "treejudge/core/document.hpp"

namespace treejudge::testing {

// Serves tests/fixtures/pages on a loopback port and counts hits per path.
class FixtureServer {
 public:
  explicit FixtureServer(std::filesystem::path root = std::filesystem::path(TREEJUDGE_FIXTURE_DIR) / "pages")
      : root_(std::move(root)) {
    server_.Get("/guarded.html", [this](const httplib::Request& req, httplib::Response& res) {
      count(req.path);
      res.status = 403;
      res.set_content(read_file((root_ / "guarded.html").string()), "text/html");
    });
    server_.Get("/rate-limited", [this](const httplib::Request& req, httplib::Response& res) {
      count(req.path);
      res.status = 429;
      res.set_content("slow down", "text/plain");
    });
    server_.Get("/missing", [this](const httplib::Request& req, httplib::Response& res) {
      count(req.path);
      res.status = 404;
      res.set_content("<html><body>not found</body></html>", "text/html");
    });
    server_.Get("/empty", [this](const httplib::Request& req, httplib::Response& res) {
      count(req.path);
      res.set_content("<html><body>   </body></html>", "text/html");
    });
    server_.Get("/moved", [this](const httplib::Request& req, httplib::Response& res) {
      count(req.path);
      res.set_redirect("/article.html");
    });
    server_.Get("/document", [this](const httplib::Request& req, httplib::Response& res) {
      // PDF served without a telling extension; detected by content type.
      count(req.path);
      res.set_content(read_file((root_ / "report.pdf").string()), "application/pdf");
    });
    server_.Get("/slow", [this](const httplib::Request& req, httplib::Response& res) {
      count(req.path);
      std::this_thread::sleep_for(std::chrono::milliseconds(200));
      res.set_content(read_file((root_ / "article.html").string()), "text/html");
    });
    server_.Get(R"(/([\w.-]+))", [this](const httplib::Request& req, httplib::Response& res) {
      count(req.path);
      auto file = root_ / req.matches[1].str();
      if (!std::filesystem::exists(file)) {
        res.status = 404;
        return;
      }
      auto ext = file.extension().string();
      res.set_content(read_file(file.string()), ext == ".pdf" ? "application/pdf" : "text/html; charset=utf-8");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~FixtureServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url(const std::string& path) const { return "http://127.0.0.1:" + std::to_string(port_) + path; }
  int port() const { return port_; }

  int hits(const std::string& path) const {
    std::lock_guard lock(mu_);
    auto it = hits_.find(path);
    return it == hits_.end() ? 0 : it->second;
  }

 private:
  void count(const std::string& path) {
    std::lock_guard lock(mu_);
    ++hits_[path];
  }

  std::filesystem::path root_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::map<std::string, int> hits_;
};

}  // namespace treejudge::testing
