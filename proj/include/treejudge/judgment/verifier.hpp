#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "treejudge/cache/page_cache.hpp"
#include "treejudge/core/concurrency.hpp"
#include "treejudge/core/document.hpp"
#include "treejudge/core/hash.hpp"
#include "treejudge/core/retry.hpp"
#include "treejudge/judgment/model.hpp"
#include "treejudge/judgment/prompts.hpp"
#include "treejudge/judgment/sanitize.hpp"
#include "treejudge/judgment/schema.hpp"
#include "treejudge/judgment/transcripts.hpp"

namespace treejudge::judgment {

struct JudgeContext {
  std::string task_id;
  std::string task_description;
  std::string answer;

  void validate() const {
    if (answer.find_first_not_of(" \t\r\n") == std::string::npos) {
      throw ConfigError("answer for task '" + task_id + "' is empty");
    }
  }
};

struct VerificationOutcome {
  bool passed = false;
  std::string reasoning;
  std::optional<std::string> supporting_source;
  std::string model_id;
  std::vector<std::string> transcripts;  // labels of the audit records
  std::vector<std::string> warnings;
};

struct JudgmentConfig {
  std::string model = kDefaultModel;
  RetryPolicy retry{};
  std::size_t max_text_chars = 80'000;
  ConcurrencyLimiter* limiter = nullptr;
};

inline Json simple_verdict_schema() {
  return {{"type", "object"},
          {"properties",
           {{"reasoning", {{"type", "string"}}}, {"judgment", {{"type", "string"}, {"enum", {"Correct", "Incorrect"}}}}}},
          {"required", {"reasoning", "judgment"}},
          {"additionalProperties", false}};
}

inline Json url_verdict_schema() {
  return {{"type", "object"},
          {"properties",
           {{"reasoning", {{"type", "string"}}},
            {"judgment", {{"type", "string"}, {"enum", {"supported", "not supported"}}}}}},
          {"required", {"reasoning", "judgment"}},
          {"additionalProperties", false}};
}

namespace verifier_detail {

// Model replies sometimes arrive wrapped in a markdown code fence.
inline std::string strip_fence(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  std::string_view v(s.data() + b, e - b + 1);
  if (v.substr(0, 3) == "```" && v.size() >= 6 && v.substr(v.size() - 3) == "```") {
    v.remove_suffix(3);
    auto nl = v.find('\n');
    v = nl == std::string_view::npos ? v.substr(3) : v.substr(nl + 1);
  }
  return std::string(v);
}

inline std::string lower_trim(std::string s) {
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

struct Verdict {
  bool passed;
  std::string reasoning;
};

inline Verdict parse_verdict(const Json& reply, const char* yes, const char* no) {
  if (!reply.is_object() || !reply.contains("judgment") || !reply["judgment"].is_string()) {
    throw ResponseFormatError("verdict reply has no string 'judgment'");
  }
  auto j = lower_trim(reply["judgment"].get<std::string>());
  std::string reasoning = reply.contains("reasoning") && reply["reasoning"].is_string() ? reply["reasoning"].get<std::string>() : "";
  if (j == yes) return {true, reasoning};
  if (j == no) return {false, reasoning};
  throw ResponseFormatError("unexpected judgment '" + reply["judgment"].get<std::string>() + "'");
}

}  // namespace verifier_detail

// Extractor and Verifier services. Stateless apart from the shared sink;
// calls may run concurrently.
class JudgmentService {
 public:
  JudgmentService(ModelClient& client, JudgmentConfig config = {}, TranscriptSink* sink = nullptr)
      : client_(client), config_(std::move(config)), sink_(sink) {}

  const JudgmentConfig& config() const { return config_; }

  // Record conforming to `schema`, URL fields grounded in the answer.
  Json extract(const JudgeContext& ctx, const std::string& instruction, const ExtractionSchema& schema,
               const std::string& additional, const std::string& label) {
    ctx.validate();
    auto prompt = render_extractor_prompt(instruction, ctx.task_description, ctx.answer, additional);
    auto record = call(label, prompt, {}, schema.name(), schema.to_json_schema(),
                       [&](const Json& reply) { return schema.conform(reply); });
    return sanitize_extracted_urls(ctx.answer, schema, record);
  }

  VerificationOutcome verify_simple(const JudgeContext& ctx, const std::string& claim, const std::string& additional,
                                    const std::string& label) {
    ctx.validate();
    if (claim.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError("empty claim at " + label);
    auto prompt = render_simple_verifier_prompt(ctx.task_description, ctx.answer, additional, claim);
    auto v = call(label, prompt, {}, "simple_verdict", simple_verdict_schema(), [](const Json& reply) {
      auto p = verifier_detail::parse_verdict(reply, "correct", "incorrect");
      return Json{{"passed", p.passed}, {"reasoning", p.reasoning}};
    });
    VerificationOutcome out;
    out.passed = v["passed"].get<bool>();
    out.reasoning = v["reasoning"].get<std::string>();
    out.model_id = config_.model;
    out.transcripts.push_back(label);
    return out;
  }

  // Checks sources in the given order; the first supporting one wins.
  // Missing, blocked or unreachable evidence counts as not supported and
  // costs no model call.
  VerificationOutcome verify_by_url(const JudgeContext& ctx, const std::string& claim,
                                    const std::vector<std::string>& sources, cache::EvidenceProvider& evidence,
                                    const std::string& additional, const std::string& label) {
    ctx.validate();
    if (claim.find_first_not_of(" \t\r\n") == std::string::npos) throw ConfigError("empty claim at " + label);
    VerificationOutcome out;
    out.model_id = config_.model;
    if (sources.empty()) {
      out.reasoning = "no sources";
      return out;
    }
    std::vector<std::string> rejected_accessible;
    std::string notes;
    for (std::size_t i = 0; i < sources.size(); ++i) {
      const auto& url = sources[i];
      std::string tag = "source " + std::to_string(i + 1) + " (" + url + ")";
      std::optional<cache::CacheEntry> entry;
      try {
        entry = evidence.evidence(url);
      } catch (const StorageError& e) {
        spdlog::warn("{}: evidence lookup failed: {}", label, e.what());
      }
      if (!entry || !entry->usable()) {
        std::string why = !entry ? "no cached evidence" : entry->blocked ? "page blocked automated access" : "page unreachable";
        if (entry && !entry->failure.empty()) why += ": " + entry->failure;
        notes += tag + ": not supported, " + why + "\n";
        continue;
      }
      std::string sub = label + ".source_" + std::to_string(i + 1);
      auto text = truncate_text(entry->text, config_.max_text_chars);
      auto prompt = render_url_verifier_prompt(ctx.task_description, ctx.answer, claim, additional, url, text,
                                               entry->screenshots.size());
      auto v = call(sub, prompt, entry->screenshots, "url_verdict", url_verdict_schema(), [](const Json& reply) {
        auto p = verifier_detail::parse_verdict(reply, "supported", "not supported");
        return Json{{"passed", p.passed}, {"reasoning", p.reasoning}};
      });
      out.transcripts.push_back(sub);
      if (v["passed"].get<bool>()) {
        out.passed = true;
        out.supporting_source = url;
        out.reasoning = v["reasoning"].get<std::string>();
        if (!rejected_accessible.empty()) {
          std::string w = "sources disagree: " + url + " supports the claim but earlier accessible source(s) did not:";
          for (const auto& r : rejected_accessible) w += " " + r;
          out.warnings.push_back(w);
          spdlog::warn("{}: {}", label, w);
        }
        return out;
      }
      rejected_accessible.push_back(url);
      notes += tag + ": not supported, " + v["reasoning"].get<std::string>() + "\n";
    }
    if (!notes.empty()) notes.pop_back();
    out.reasoning = notes;
    return out;
  }

 private:
  // One schema-bound exchange with retries. Transport failures back off
  // and retry; an unusable reply gets one repair attempt with the error
  // fed back through the system message, so the user prompt stays fixed.
  template <typename Interpret>
  Json call(const std::string& label, const std::string& prompt, const std::vector<std::string>& images,
            const std::string& schema_name, const Json& schema, Interpret&& interpret) {
    ModelRequest req;
    req.model = config_.model;
    req.prompt = prompt;
    req.images = images;
    req.schema_name = schema_name;
    req.response_schema = schema;
    std::string format_note;
    if (!client_.constrained_decoding()) {
      format_note = "Respond with a single JSON object that conforms to this JSON Schema, and nothing else:\n" +
                    schema.dump();
    }
    req.system = format_note;

    Json attempts = Json::array();
    auto backoff = config_.retry.initial_backoff;
    int format_failures = 0;
    std::string last_error;
    for (int attempt = 1; attempt <= config_.retry.attempts; ++attempt) {
      Json log = {{"attempt", attempt}, {"system", req.system}};
      std::string content;
      bool transport_failed = false;
      std::optional<std::string> refused;
      try {
        ConcurrencyLimiter::Slot slot(config_.limiter);
        content = client_.complete(req).content;
      } catch (const TransportError& e) {
        transport_failed = true;
        last_error = e.what();
        log["error"] = "transport: " + last_error;
      } catch (const ResponseFormatError& e) {
        refused = e.what();
      }
      if (!transport_failed) {
        log["reply"] = content;
        try {
          if (refused) throw ResponseFormatError(*refused);
          auto parsed = Json::parse(verifier_detail::strip_fence(content), nullptr, false);
          if (parsed.is_discarded()) throw ResponseFormatError("reply is not valid JSON");
          Json result = interpret(parsed);
          attempts.push_back(std::move(log));
          write_transcript(label, req, attempts, &result);
          return result;
        } catch (const ResponseFormatError& e) {
          last_error = e.what();
          log["error"] = "format: " + last_error;
          attempts.push_back(std::move(log));
          if (++format_failures > 1) break;
          req.system = (format_note.empty() ? std::string() : format_note + "\n\n") +
                       "Your previous reply could not be used (" + last_error +
                       "). Reply again with only the JSON object.";
          spdlog::warn("{}: unusable reply, retrying with repair note: {}", label, last_error);
          continue;
        }
      }
      attempts.push_back(std::move(log));
      spdlog::warn("{}: attempt {}/{} failed: {}", label, attempt, config_.retry.attempts, last_error);
      if (attempt < config_.retry.attempts && backoff.count() > 0) {
        std::this_thread::sleep_for(backoff);
        backoff = std::chrono::milliseconds(
            static_cast<long long>(static_cast<double>(backoff.count()) * config_.retry.multiplier));
      }
    }
    write_transcript(label, req, attempts, nullptr);
    throw EvaluationError(label + ": model call failed: " + last_error);
  }

  void write_transcript(const std::string& label, const ModelRequest& req, const Json& attempts, const Json* result) {
    if (!sink_) return;
    Json images = Json::array();
    for (const auto& img : req.images) images.push_back(sha256_hex(img));
    Json doc = {{"schema", "treejudge.transcript/1"},
                {"label", label},
                {"model", req.model},
                {"prompt", req.prompt},
                {"images_sha256", images},
                {"schema_name", req.schema_name},
                {"response_schema", req.response_schema},
                {"attempts", attempts},
                {"result", result ? *result : Json(nullptr)}};
    sink_->record(label, doc);
  }

  ModelClient& client_;
  JudgmentConfig config_;
  TranscriptSink* sink_;
};

}  // namespace treejudge::judgment
