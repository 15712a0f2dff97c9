#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <spdlog/spdlog.h>

#include "treejudge/cache/page_cache.hpp"
#include "treejudge/cache/url.hpp"
#include "treejudge/core/hash.hpp"
#include "treejudge/rubric/codec.hpp"
#include "treejudge/runner/run.hpp"

namespace treejudge::runner {

inline constexpr const char* kBundleSchema = "treejudge.review-bundle/1";
inline constexpr const char* kAnnotationsSchema = "treejudge.annotations/1";
inline constexpr const char* kDiscrepancySchema = "treejudge.discrepancy-report/1";
inline constexpr const char* kReplacementSchema = "treejudge.replacement-request/1";

namespace review_detail {

inline Json evidence_json(const std::string& key, const std::vector<std::string>& originals, const cache::CacheStore* store) {
  Json e = {{"key", key}, {"original_urls", originals}};
  std::optional<cache::CacheEntry> entry;
  if (store) entry = store->get(key);
  if (!entry) {
    e["present"] = false;
    return e;
  }
  e["present"] = true;
  e["kind"] = std::string(cache::to_string(entry->kind));
  e["blocked"] = entry->blocked;
  e["manual"] = entry->manual;
  e["usable"] = entry->usable();
  e["final_url"] = entry->final_url;
  e["http_status"] = entry->http_status;
  e["failure"] = entry->failure;
  e["version"] = entry->version;
  e["text"] = entry->text;
  e["text_path"] = store->text_path(*entry);
  e["screenshots"] = store->screenshot_paths(*entry);
  e["screenshot_sha256"] = Json::array();
  for (const auto& s : entry->screenshots) e["screenshot_sha256"].push_back(sha256_hex(s));
  e["provenance"] = entry->provenance ? Json{{"annotator", entry->provenance->annotator},
                                             {"replaced_at", entry->provenance->replaced_at},
                                             {"note", entry->provenance->note}}
                                      : Json(nullptr);
  return e;
}

inline Json read_optional(const fs::path& p) {
  return fs::exists(p) ? parse_document(read_file(p.string())) : Json(nullptr);
}

}  // namespace review_detail

// One self-contained document for the review UI: per (task, agent, run)
// the rubric, scores, answer and a manifest of cited evidence. Cache
// entries that cannot be found are flagged, not fatal. Contains no
// timestamps of its own, so re-exporting unchanged inputs is byte-identical.
inline Json export_review_bundle(const fs::path& results_root, const fs::path& campaign, const cache::CacheStore* store) {
  auto answers = load_answers(campaign);
  Json runs = Json::array();
  std::size_t dangling_total = 0;
  for (const auto& a : answers) {
    auto dir = result_dir(results_root, a.task_id, a.agent_name, a.run_index);
    if (!fs::exists(dir / "result.json")) continue;
    auto result = parse_document(read_file((dir / "result.json").string()));
    require_schema(result, kResultSchema);
    Json run = {{"task_id", a.task_id},
                {"agent_name", a.agent_name},
                {"run_index", a.run_index},
                {"answer", a.answer},
                {"result", result},
                {"rubric", review_detail::read_optional(dir / "rubric.json")},
                {"scored", review_detail::read_optional(dir / "scored.json")},
                {"verifications", review_detail::read_optional(dir / "verifications.json")}};
    // Evidence: every URL cited in the answer plus any source a verifier used.
    auto cited = cache::collect_urls({a.answer});
    const auto& ver = run["verifications"];
    if (ver.is_object()) {
      for (const auto& [_, leaf] : ver["leaves"].items()) {
        for (const auto& src : leaf["sources"]) {
          try {
            auto& originals = cited[cache::normalize_url(src.get<std::string>())];
            if (std::find(originals.begin(), originals.end(), src) == originals.end()) originals.push_back(src);
          } catch (const UrlError&) {
          }
        }
      }
    }
    Json evidence = Json::array();
    Json dangling = Json::array();
    for (const auto& [key, originals] : cited) {
      auto e = review_detail::evidence_json(key, originals, store);
      if (!e["present"].get<bool>()) dangling.push_back(key);
      evidence.push_back(std::move(e));
    }
    dangling_total += dangling.size();
    run["evidence"] = std::move(evidence);
    run["dangling_evidence"] = std::move(dangling);
    runs.push_back(std::move(run));
  }
  if (runs.empty()) throw ConfigError("no results to export under " + results_root.string());
  Json bundle = {{"schema", kBundleSchema}, {"runs", runs}, {"dangling_evidence_count", dangling_total}};
  bundle["bundle_id"] = sha256_hex(to_canonical_text(bundle)).substr(0, 16);
  if (dangling_total) spdlog::warn("review bundle references {} uncached page(s)", dangling_total);
  return bundle;
}

struct AnnotationRecord {
  std::string bundle_id;
  std::string task_id;
  std::string agent_name;
  int run_index = 0;
  std::string node_id;
  int human_score = 0;
  std::string note;
  std::string annotator;
  std::string annotated_at;
};

inline std::vector<AnnotationRecord> parse_annotations(const Json& doc) {
  require_schema(doc, kAnnotationsSchema);
  auto bundle_id = require_string(doc, "bundle_id");
  const auto& list = require_field(doc, "annotations");
  if (!list.is_array() || list.empty()) throw DocumentError("annotation file has no annotations");
  std::vector<AnnotationRecord> out;
  for (const auto& j : list) {
    AnnotationRecord r;
    r.bundle_id = bundle_id;
    r.task_id = require_string(j, "task_id");
    r.agent_name = require_string(j, "agent_name");
    const auto& run = require_field(j, "run_index");
    const auto& score = require_field(j, "human_score");
    if (!run.is_number_integer()) throw DocumentError("run_index must be an integer");
    if (!score.is_number_integer() || (score != 0 && score != 1)) throw DocumentError("human_score must be 0 or 1");
    r.run_index = run.get<int>();
    r.human_score = score.get<int>();
    r.node_id = require_string(j, "node_id");
    r.note = j.value("note", "");
    r.annotator = j.value("annotator", "");
    r.annotated_at = j.value("annotated_at", "");
    out.push_back(std::move(r));
  }
  return out;
}

inline Json annotations_to_json(const std::string& bundle_id, const std::vector<AnnotationRecord>& records) {
  if (records.empty()) throw ConfigError("refusing to write an empty annotation set");
  Json list = Json::array();
  for (const auto& r : records) {
    list.push_back({{"task_id", r.task_id},
                    {"agent_name", r.agent_name},
                    {"run_index", r.run_index},
                    {"node_id", r.node_id},
                    {"human_score", r.human_score},
                    {"note", r.note},
                    {"annotator", r.annotator},
                    {"annotated_at", r.annotated_at}});
  }
  return {{"schema", kAnnotationsSchema}, {"bundle_id", bundle_id}, {"annotations", list}};
}

// Compares human leaf judgments with the automated ones. Only leaves the
// engine actually evaluated have an automated score; annotations on
// skipped leaves are counted separately. Mismatches are listed in bundle
// order.
inline Json compute_discrepancies(const Json& bundle, const std::vector<AnnotationRecord>& annotations) {
  require_schema(bundle, kBundleSchema);
  if (annotations.empty()) throw ConfigError("no annotations to compare");
  auto bundle_id = require_string(bundle, "bundle_id");
  using Key = std::tuple<std::string, std::string, int, std::string>;
  std::map<Key, const AnnotationRecord*> human;
  for (const auto& a : annotations) {
    if (a.bundle_id != bundle_id) throw ConfigError("annotations belong to bundle " + a.bundle_id + ", not " + bundle_id);
    if (!human.emplace(Key{a.task_id, a.agent_name, a.run_index, a.node_id}, &a).second) {
      throw ConfigError("duplicate annotation for node '" + a.node_id + "'");
    }
  }
  Json mismatches = Json::array();
  std::size_t compared = 0, skipped = 0, matched_keys = 0;
  for (const auto& run : bundle["runs"]) {
    if (!run["rubric"].is_object() || !run["scored"].is_object()) continue;
    auto tree = rubric::decode_tree(run["rubric"]);
    auto scored = rubric::decode_scored(run["scored"]);
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const auto& node = tree.node(i);
      Key k{run["task_id"], run["agent_name"], run["run_index"].get<int>(), node.id};
      auto it = human.find(k);
      if (it == human.end()) continue;
      ++matched_keys;
      if (!node.is_leaf()) throw ConfigError("annotation targets internal node '" + node.id + "'");
      const auto& r = scored.at(node.id);
      if (r.status != rubric::NodeStatus::evaluated) {
        ++skipped;
        continue;
      }
      ++compared;
      int automated = r.score == 1 ? 1 : 0;
      if (automated != it->second->human_score) {
        mismatches.push_back({{"task_id", std::get<0>(k)},
                              {"agent_name", std::get<1>(k)},
                              {"run_index", std::get<2>(k)},
                              {"node_id", node.id},
                              {"automated_score", automated},
                              {"human_score", it->second->human_score},
                              {"note", it->second->note}});
      }
    }
  }
  if (matched_keys != human.size()) throw ConfigError("some annotations name nodes or runs missing from the bundle");
  return {{"schema", kDiscrepancySchema},
          {"bundle_id", bundle_id},
          {"mismatches", mismatches},
          {"totals", {{"nodes_compared", compared}, {"mismatches", mismatches.size()}, {"annotated_skipped", skipped}}}};
}

struct ReplacementRequest {
  std::string url;
  cache::ReplacementPayload payload;
  std::string requested_at;
};

inline Json replacement_request_to_json(const ReplacementRequest& r) {
  Json shots = Json::array();
  for (const auto& s : r.payload.screenshots) shots.push_back(base64_encode(s));
  return {{"schema", kReplacementSchema},
          {"url", r.url},
          {"text", r.payload.text},
          {"screenshots_base64", shots},
          {"note", r.payload.note},
          {"annotator", r.payload.annotator},
          {"requested_at", r.requested_at}};
}

inline ReplacementRequest parse_replacement_request(const Json& doc) {
  require_schema(doc, kReplacementSchema);
  ReplacementRequest r;
  r.url = require_string(doc, "url");
  r.payload.text = doc.value("text", "");
  for (const auto& s : doc.value("screenshots_base64", Json::array())) r.payload.screenshots.push_back(base64_decode(s.get<std::string>()));
  r.payload.note = doc.value("note", "");
  r.payload.annotator = require_string(doc, "annotator");
  r.requested_at = doc.value("requested_at", "");
  return r;
}

struct ReplacementOutcome {
  cache::CacheEntry entry;
  std::optional<std::string> warning;
};

// Feeds a replacement request into the cache. Replacing a page that was
// not blocked is allowed but flagged.
inline ReplacementOutcome apply_replacement(cache::PageCache& cache, const ReplacementRequest& req) {
  auto before = cache.lookup(req.url);
  ReplacementOutcome out;
  if (before && !before->blocked) {
    out.warning = "replaced a page that was not blocked: " + before->key;
    spdlog::warn("{}", *out.warning);
  }
  out.entry = cache.replace_entry(req.url, req.payload);
  return out;
}

}  // namespace treejudge::runner
