#pragma once

#include <functional>
#include <mutex>
#include <string>
#include <vector>

#include "treejudge/core/document.hpp"
#include "treejudge/core/error.hpp"

namespace treejudge::judgment {

inline constexpr const char* kDefaultModel = "o4-mini";

// One completion: a user prompt with optional images, and the JSON Schema
// the reply must satisfy. `system` carries the format instruction for
// clients that cannot constrain decoding.
struct ModelRequest {
  std::string model;
  std::string system;
  std::string prompt;
  std::vector<std::string> images;  // PNG bytes
  std::string schema_name;
  Json response_schema;
};

struct ModelReply {
  std::string content;
  std::string model;
};

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  // Throws TransportError for failures worth retrying.
  virtual ModelReply complete(const ModelRequest& request) = 0;
  // Whether the client enforces `response_schema` during decoding.
  virtual bool constrained_decoding() const { return false; }
};

// Deterministic in-process model driven by a callback; records every call.
class ScriptedModel : public ModelClient {
 public:
  using Handler = std::function<std::string(const ModelRequest&)>;

  explicit ScriptedModel(Handler handler, bool constrained = true)
      : handler_(std::move(handler)), constrained_(constrained) {}

  ModelReply complete(const ModelRequest& request) override {
    {
      std::lock_guard lock(mu_);
      calls_.push_back(request);
    }
    return {handler_(request), request.model};
  }

  bool constrained_decoding() const override { return constrained_; }

  std::vector<ModelRequest> calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

  std::size_t call_count() const {
    std::lock_guard lock(mu_);
    return calls_.size();
  }

 private:
  Handler handler_;
  bool constrained_;
  mutable std::mutex mu_;
  std::vector<ModelRequest> calls_;
};

}  // namespace treejudge::judgment
