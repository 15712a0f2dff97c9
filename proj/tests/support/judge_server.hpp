#pragma once

#include <httplib.h>

#include <atomic>
#include <string>
#include <thread>

#include "support/fake_judge.hpp"
#include "treejudge/core/hash.hpp"

namespace treejudge::testing {

// Chat-completions endpoint on loopback that answers with fake_judge, so the
// CLI can be exercised end to end through its real HTTP client.
class JudgeServer {
 public:
  JudgeServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (failing_) {
        res.status = 503;
        res.set_content(R"({"error":"unavailable"})", "application/json");
        return;
      }
      auto body = Json::parse(req.body);
      judgment::ModelRequest r;
      r.model = body.value("model", "");
      for (const auto& m : body["messages"]) {
        if (m["role"] == "system") r.system = m["content"];
        if (m["role"] != "user") continue;
        if (m["content"].is_string()) {
          r.prompt = m["content"];
        } else {
          for (const auto& part : m["content"]) {
            if (part["type"] == "text") r.prompt = part["text"];
          }
        }
      }
      r.schema_name = body["response_format"]["json_schema"]["name"];
      Json reply = {{"model", r.model + "-fake"},
                    {"choices", {{{"message", {{"role", "assistant"}, {"content", fake_judge(r)}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~JudgeServer() {
    server_.stop();
    thread_.join();
  }

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
  void set_failing(bool f) { failing_ = f; }
  std::size_t requests() const { return requests_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<bool> failing_{false};
  std::atomic<std::size_t> requests_{0};
};

}  // namespace treejudge::testing
