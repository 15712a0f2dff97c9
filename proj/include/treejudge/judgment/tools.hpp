#pragma once

#include <httplib.h>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cstdlib>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include "treejudge/core/concurrency.hpp"
#include "treejudge/core/document.hpp"
#include "treejudge/core/error.hpp"
#include "treejudge/core/retry.hpp"

namespace treejudge::judgment {

enum class ToolKind { travel_time, travel_distance, geocode_locality, scholarly_lookup };

inline std::string_view to_string(ToolKind k) {
  switch (k) {
    case ToolKind::travel_time: return "travel_time";
    case ToolKind::travel_distance: return "travel_distance";
    case ToolKind::geocode_locality: return "geocode_locality";
    case ToolKind::scholarly_lookup: return "scholarly_lookup";
  }
  return "?";
}

inline ToolKind parse_tool_kind(const std::string& s) {
  for (auto k : {ToolKind::travel_time, ToolKind::travel_distance, ToolKind::geocode_locality, ToolKind::scholarly_lookup}) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError("unknown tool kind '" + s + "'");
}

// One external service. Throws TransportError for transient failures.
class ToolBackend {
 public:
  virtual ~ToolBackend() = default;
  virtual Json call(ToolKind kind, const Json& params) = 0;
};

namespace tools_detail {

inline std::string fold(const std::string& s) {
  std::string out;
  bool space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

inline std::string require_text(const Json& params, const char* key) {
  if (!params.contains(key) || !params[key].is_string() || fold(params[key].get<std::string>()).empty()) {
    throw ConfigError(std::string("tool parameter '") + key + "' must be a non-empty string");
  }
  return params[key].get<std::string>();
}

// Throws TransportError for connection failures, 429 and 5xx.
inline std::string get(const std::string& origin, const std::string& path, const httplib::Params& query) {
  httplib::Client http(origin);
  http.set_connection_timeout(15);
  http.set_read_timeout(30);
  auto res = http.Get(path, query, httplib::Headers{});
  if (!res) throw TransportError(origin + " unreachable: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) throw TransportError(origin + " returned HTTP " + std::to_string(res->status));
  if (res->status != 200) throw EvaluationError(origin + path + " returned HTTP " + std::to_string(res->status));
  return res->body;
}

}  // namespace tools_detail

// Distance Matrix and Geocoding web services (or a compatible emulator).
class MapsBackend : public ToolBackend {
 public:
  explicit MapsBackend(std::string api_key, std::string origin = "https://maps.googleapis.com")
      : key_(std::move(api_key)), origin_(std::move(origin)) {
    if (key_.empty()) throw ConfigError("maps backend needs an api key");
  }

  Json call(ToolKind kind, const Json& params) override {
    if (kind == ToolKind::geocode_locality) return geocode(params);
    if (kind == ToolKind::travel_time || kind == ToolKind::travel_distance) return matrix(kind, params);
    throw ConfigError("maps backend cannot serve " + std::string(to_string(kind)));
  }

 private:
  static void check_status(const std::string& status) {
    if (status == "OVER_QUERY_LIMIT" || status == "UNKNOWN_ERROR") throw TransportError("maps service status " + status);
    if (status == "REQUEST_DENIED" || status == "INVALID_REQUEST" || status == "OVER_DAILY_LIMIT") {
      throw EvaluationError("maps service status " + status);
    }
  }

  Json matrix(ToolKind kind, const Json& params) {
    auto body = tools_detail::get(origin_, "/maps/api/distancematrix/json",
                                  {{"origins", params["origin"].get<std::string>()},
                                   {"destinations", params["destination"].get<std::string>()},
                                   {"mode", params["mode"].get<std::string>()},
                                   {"units", "metric"},
                                   {"key", key_}});
    auto doc = Json::parse(body, nullptr, false);
    if (!doc.is_object()) throw TransportError("maps service returned a malformed body");
    auto status = doc.value("status", "");
    check_status(status);
    if (status != "OK") return {{"status", status}};
    const auto& el = doc["rows"].at(0)["elements"].at(0);
    auto el_status = el.value("status", "");
    if (el_status != "OK") return {{"status", el_status}};
    if (kind == ToolKind::travel_distance) {
      return {{"status", "OK"}, {"meters", el["distance"]["value"]}, {"text", el["distance"]["text"]}};
    }
    return {{"status", "OK"}, {"seconds", el["duration"]["value"]}, {"text", el["duration"]["text"]}};
  }

  Json geocode(const Json& params) {
    auto body = tools_detail::get(origin_, "/maps/api/geocode/json",
                                  {{"address", params["address"].get<std::string>()}, {"key", key_}});
    auto doc = Json::parse(body, nullptr, false);
    if (!doc.is_object()) throw TransportError("maps service returned a malformed body");
    auto status = doc.value("status", "");
    check_status(status);
    if (status != "OK" || doc["results"].empty()) return {{"status", status.empty() ? "ZERO_RESULTS" : status}};
    const auto& first = doc["results"][0];
    // Cities first; boroughs and postal towns stand in where no locality exists.
    for (const char* type : {"locality", "postal_town", "sublocality", "administrative_area_level_3"}) {
      for (const auto& comp : first.value("address_components", Json::array())) {
        const auto& types = comp.value("types", Json::array());
        if (std::find(types.begin(), types.end(), type) != types.end()) {
          return {{"status", "OK"},
                  {"locality", comp.value("long_name", "")},
                  {"formatted_address", first.value("formatted_address", "")}};
        }
      }
    }
    return {{"status", "NO_LOCALITY"}, {"formatted_address", first.value("formatted_address", "")}};
  }

  std::string key_;
  std::string origin_;
};

// Title search against the arXiv Atom API.
class ArxivBackend : public ToolBackend {
 public:
  explicit ArxivBackend(std::string origin = "http://export.arxiv.org") : origin_(std::move(origin)) {}

  Json call(ToolKind kind, const Json& params) override {
    if (kind != ToolKind::scholarly_lookup) throw ConfigError("arxiv backend cannot serve " + std::string(to_string(kind)));
    std::string title = params["title"].get<std::string>();
    auto body = tools_detail::get(origin_, "/api/query",
                                  {{"search_query", "ti:\"" + title + "\""}, {"start", "0"}, {"max_results", "10"}});
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(body);
    try {
      pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
      throw TransportError(std::string("arxiv returned malformed xml: ") + e.what());
    }
    auto feed = tree.get_child_optional("feed");
    if (!feed) throw TransportError("arxiv response has no feed");
    std::optional<Json> first;
    for (const auto& [tag, entry] : *feed) {
      if (tag != "entry") continue;
      Json paper = describe(entry);
      bool exact = tools_detail::fold(paper["title"].get<std::string>()) == tools_detail::fold(title);
      paper["exact_title_match"] = exact;
      if (exact) return paper;
      if (!first) first = paper;
    }
    if (first) return *first;
    return {{"status", "ZERO_RESULTS"}};
  }

 private:
  static Json describe(const boost::property_tree::ptree& entry) {
    std::string id = entry.get<std::string>("id", "");
    std::string arxiv_id = id.substr(id.rfind("/abs/") == std::string::npos ? 0 : id.rfind("/abs/") + 5);
    std::string version;
    if (auto v = arxiv_id.rfind('v'); v != std::string::npos && v + 1 < arxiv_id.size() &&
                                      std::all_of(arxiv_id.begin() + static_cast<long>(v) + 1, arxiv_id.end(), ::isdigit)) {
      version = arxiv_id.substr(v);
      arxiv_id = arxiv_id.substr(0, v);
    }
    Json authors = Json::array();
    for (const auto& [tag, a] : entry) {
      if (tag == "author") authors.push_back(a.get<std::string>("name", ""));
    }
    std::string title;
    bool space = false;
    for (unsigned char c : entry.get<std::string>("title", "")) {
      if (std::isspace(c)) {
        space = !title.empty();
        continue;
      }
      if (space) title.push_back(' ');
      space = false;
      title.push_back(static_cast<char>(c));
    }
    return {{"status", "OK"},
            {"arxiv_id", arxiv_id},
            {"version", version},
            {"title", title},
            {"published", entry.get<std::string>("published", "")},
            {"authors", authors},
            {"url", "https://arxiv.org/abs/" + arxiv_id}};
  }

  std::string origin_;
};

// Replays recorded answers: a list of {kind, params, result} objects.
class FixtureBackend : public ToolBackend {
 public:
  explicit FixtureBackend(const Json& fixtures) {
    for (const auto& f : fixtures) records_[key(parse_tool_kind(f.at("kind").get<std::string>()), f.at("params"))] = f.at("result");
  }

  static std::string key(ToolKind kind, const Json& params) { return std::string(to_string(kind)) + "|" + params.dump(); }

  Json call(ToolKind kind, const Json& params) override {
    ++calls_;
    auto it = records_.find(key(kind, params));
    if (it == records_.end()) throw ConfigError("no fixture for " + key(kind, params));
    return it->second;
  }

  int calls() const { return calls_; }

 private:
  std::map<std::string, Json> records_;
  int calls_ = 0;
};

struct ToolBackends {
  std::shared_ptr<ToolBackend> maps;
  std::shared_ptr<ToolBackend> scholarly;

  // Maps needs TREEJUDGE_MAPS_API_KEY; the arXiv API is keyless.
  static ToolBackends from_env() {
    ToolBackends b;
    if (const char* k = std::getenv("TREEJUDGE_MAPS_API_KEY"); k && *k) b.maps = std::make_shared<MapsBackend>(k);
    b.scholarly = std::make_shared<ArxivBackend>();
    return b;
  }
};

// Deterministic helper tools, memoized per parameter tuple so repeated
// questions within a campaign get identical answers.
class ToolVerifier {
 public:
  explicit ToolVerifier(ToolBackends backends, ConcurrencyLimiter* limiter = nullptr, RetryPolicy retry = {})
      : backends_(std::move(backends)), limiter_(limiter), retry_(retry) {}

  Json tool_verify(ToolKind kind, const Json& raw_params) {
    Json params = canonical_params(kind, raw_params);
    if ((kind == ToolKind::travel_distance || kind == ToolKind::travel_time) &&
        tools_detail::fold(params["origin"].get<std::string>()) == tools_detail::fold(params["destination"].get<std::string>())) {
      return kind == ToolKind::travel_distance ? Json{{"status", "OK"}, {"meters", 0}, {"text", "0 m"}}
                                               : Json{{"status", "OK"}, {"seconds", 0}, {"text", "0 mins"}};
    }
    auto backend = kind == ToolKind::scholarly_lookup ? backends_.scholarly : backends_.maps;
    if (!backend) throw ConfigError(std::string(to_string(kind)) + ": no backend configured");
    std::string key = FixtureBackend::key(kind, params);
    {
      std::lock_guard lock(mu_);
      if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    Json result = flights_.run(key, [&] {
      return with_retries(retry_, std::string(to_string(kind)), [&] {
        ConcurrencyLimiter::Slot slot(limiter_);
        return backend->call(kind, params);
      });
    });
    std::lock_guard lock(mu_);
    return memo_.emplace(key, result).first->second;
  }

  static Json canonical_params(ToolKind kind, const Json& p) {
    if (!p.is_object()) throw ConfigError("tool parameters must be an object");
    switch (kind) {
      case ToolKind::travel_time:
      case ToolKind::travel_distance: {
        std::string mode = p.contains("mode") ? p["mode"].get<std::string>() : "driving";
        if (mode != "driving" && mode != "walking" && mode != "transit" && mode != "bicycling") {
          throw ConfigError("unknown travel mode '" + mode + "'");
        }
        return {{"origin", tools_detail::require_text(p, "origin")},
                {"destination", tools_detail::require_text(p, "destination")},
                {"mode", mode}};
      }
      case ToolKind::geocode_locality:
        return {{"address", tools_detail::require_text(p, "address")}};
      case ToolKind::scholarly_lookup:
        return {{"title", tools_detail::require_text(p, "title")}};
    }
    return p;
  }

 private:
  ToolBackends backends_;
  ConcurrencyLimiter* limiter_;
  RetryPolicy retry_;
  std::mutex mu_;
  std::map<std::string, Json> memo_;
  SingleFlight<Json> flights_;
};

}  // namespace treejudge::judgment
