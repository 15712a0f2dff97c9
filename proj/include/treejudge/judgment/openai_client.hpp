#pragma once

#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <string>

#include "treejudge/core/document.hpp"
#include "treejudge/core/error.hpp"
#include "treejudge/core/hash.hpp"
#include "treejudge/judgment/model.hpp"

namespace treejudge::judgment {

struct OpenAiSettings {
  std::string endpoint;  // base URL up to and including the version path, e.g. https://api.openai.com/v1
  std::string api_key;
  std::string model = kDefaultModel;
  std::chrono::seconds timeout{300};

  // TREEJUDGE_MODEL_ENDPOINT, TREEJUDGE_API_KEY and TREEJUDGE_MODEL.
  static OpenAiSettings from_env() {
    OpenAiSettings s;
    auto get = [](const char* name) {
      const char* v = std::getenv(name);
      return v ? std::string(v) : std::string();
    };
    s.endpoint = get("TREEJUDGE_MODEL_ENDPOINT");
    if (s.endpoint.empty()) s.endpoint = "https://api.openai.com/v1";
    s.api_key = get("TREEJUDGE_API_KEY");
    if (auto m = get("TREEJUDGE_MODEL"); !m.empty()) s.model = m;
    return s;
  }
};

// Chat-completions client with strict JSON-schema response format.
class OpenAiClient : public ModelClient {
 public:
  explicit OpenAiClient(OpenAiSettings settings) : settings_(std::move(settings)) {
    auto scheme = settings_.endpoint.find("://");
    if (scheme == std::string::npos) throw ConfigError("model endpoint needs a scheme: " + settings_.endpoint);
    auto slash = settings_.endpoint.find('/', scheme + 3);
    origin_ = settings_.endpoint.substr(0, slash);
    base_path_ = slash == std::string::npos ? "" : settings_.endpoint.substr(slash);
    while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
  }

  bool constrained_decoding() const override { return true; }

  static Json build_body(const ModelRequest& req) {
    Json messages = Json::array();
    if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
    Json user;
    if (req.images.empty()) {
      user = {{"role", "user"}, {"content", req.prompt}};
    } else {
      Json parts = Json::array();
      parts.push_back({{"type", "text"}, {"text", req.prompt}});
      for (const auto& img : req.images) {
        parts.push_back({{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(img)}}}});
      }
      user = {{"role", "user"}, {"content", parts}};
    }
    messages.push_back(user);
    Json body = {{"model", req.model}, {"messages", messages}};
    if (!req.response_schema.is_null()) {
      body["response_format"] = {
          {"type", "json_schema"},
          {"json_schema", {{"name", req.schema_name.empty() ? "reply" : req.schema_name}, {"strict", true}, {"schema", req.response_schema}}}};
    }
    return body;
  }

  ModelReply complete(const ModelRequest& request) override {
    ModelRequest req = request;
    if (req.model.empty()) req.model = settings_.model;
    httplib::Client http(origin_);
    http.set_connection_timeout(30);
    http.set_read_timeout(static_cast<time_t>(settings_.timeout.count()));
    httplib::Headers headers;
    if (!settings_.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings_.api_key);
    auto res = http.Post(base_path_ + "/chat/completions", headers, build_body(req).dump(), "application/json");
    if (!res) throw TransportError("model endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500) {
      throw TransportError("model endpoint returned HTTP " + std::to_string(res->status));
    }
    if (res->status != 200) {
      // Client errors are configuration problems, not transient.
      throw EvaluationError("model endpoint returned HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 500));
    }
    auto doc = Json::parse(res->body, nullptr, false);
    if (!doc.is_object() || !doc.contains("choices") || !doc["choices"].is_array() || doc["choices"].empty()) {
      throw TransportError("model endpoint returned a malformed body");
    }
    const auto& msg = doc["choices"][0]["message"];
    if (msg.contains("refusal") && msg["refusal"].is_string()) {
      throw ResponseFormatError("model refused: " + msg["refusal"].get<std::string>());
    }
    if (!msg.contains("content") || !msg["content"].is_string()) throw TransportError("model reply has no content");
    return {msg["content"].get<std::string>(), doc.value("model", req.model)};
  }

 private:
  OpenAiSettings settings_;
  std::string origin_;
  std::string base_path_;
};

}  // namespace treejudge::judgment
