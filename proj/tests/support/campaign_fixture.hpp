#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "treejudge/cache/page_cache.hpp"
#include "treejudge/runner/judges/llava_commit.hpp"
#include "treejudge/runner/registry.hpp"

namespace treejudge::testing {

namespace fs = std::filesystem;

// A second, tiny judge so campaigns span more than one task.
namespace capital {

inline constexpr const char* kTaskId = "capital_of_france";

inline runner::JudgeDefinition definition() {
  return {kTaskId, "What is the capital of France? Cite a source.", [](runner::JudgeSession& s) {
            using judgment::FieldSpec;
            auto root = s.initialize(rubric::Ordering::parallel);
            auto info = s.extract("Extract the capital city named in the answer and the URL cited for it.",
                                  {"CapitalInfo", {FieldSpec::text("city"), FieldSpec::url("source_url")}}, "capital");
            std::string city = info["city"].is_string() ? info["city"].get<std::string>() : "N/A";
            s.add_custom_node(info["city"].is_string(), "city_named", "A city is named", root, true);
            auto correct = s.add_leaf("city_correct", "The named city is Paris", root, true);
            s.verify(correct, "'" + city + "' equals 'Paris'");
            auto cited = s.add_leaf("city_cited", "The cited page names the city as the capital", root);
            s.verify_with_url(cited, "'" + city + "' is named as the capital of France on this page", info["source_url"]);
          }};
}

}  // namespace capital

inline runner::JudgeRegistry fixture_registry() {
  runner::JudgeRegistry r;
  runner::judges::register_builtin(r);
  r.add(capital::definition());
  return r;
}

inline const std::string kCommitUrl = "https://github.com/huggingface/transformers/commit/44b5506";

inline std::string llava_answer(const std::string& commit, const std::string& date, std::size_t authors, bool profiles) {
  static const std::vector<std::pair<std::string, std::string>> people = {
      {"Younes B", "https://github.com/younesbelkada"},
      {"Arthur Zucker", "https://github.com/ArthurZucker"},
      {"Shauray Singh", "https://github.com/shauray8"},
      {"Lysandre Debut", "https://github.com/LysandreJik"},
      {"Haotian Liu", "https://github.com/haotian-liu"}};
  std::string a = "The first commit adding LLaVA support is " + commit + ", merged on " + date + " (" + kCommitUrl +
                  ").\n\nAuthors:";
  for (std::size_t i = 0; i < authors; ++i) {
    a += "\n" + std::to_string(i + 1) + ". " + people[i].first;
    if (profiles) a += " - " + people[i].second;
  }
  return a + "\n";
}

// Named answers used across the runner, CLI and acceptance tests.
inline const std::map<std::string, std::string>& fixture_answers() {
  static const std::map<std::string, std::string> answers = {
      {"llava_good", llava_answer("44b5506", "Dec 7, 2023", 5, true)},
      {"llava_wrong_id", llava_answer("5e1c1a3", "Dec 7, 2023", 5, true)},
      {"llava_partial", llava_answer("44b5506", "Dec 7, 2023", 3, true)},
      {"llava_no_profiles", llava_answer("44b5506", "Dec 7, 2023", 5, false)},
      {"llava_bad_date", llava_answer("44b5506", "Dec 8, 2023", 5, true)},
      {"capital_good", "The capital is Paris, see http://www.example.org/france for details.\n"},
      {"capital_uncited", "The capital is Paris.\n"},
      {"capital_wrong", "The capital is Lyon, see http://www.example.org/france for details.\n"},
      {"capital_blocked", "The capital is Paris, per https://www.example.org/paywalled today.\n"},
  };
  return answers;
}

// answers/<task>/<agent>/run_<n>.txt for two agents and three runs.
inline const std::map<std::string, std::map<std::string, std::vector<std::string>>>& fixture_plan() {
  static const std::map<std::string, std::map<std::string, std::vector<std::string>>> plan = {
      {runner::judges::llava::kTaskId,
       {{"agent_a", {"llava_good", "llava_wrong_id", "llava_partial"}},
        {"agent_b", {"llava_no_profiles", "llava_bad_date", "llava_good"}}}},
      {capital::kTaskId,
       {{"agent_a", {"capital_good", "capital_uncited", "capital_wrong"}},
        {"agent_b", {"capital_blocked", "capital_good", "capital_good"}}}},
  };
  return plan;
}

inline void write_campaign(const fs::path& dir, const std::vector<std::string>& agents = {"agent_a", "agent_b"},
                           std::size_t runs = 3) {
  for (const auto& [task, by_agent] : fixture_plan()) {
    for (const auto& agent : agents) {
      const auto& names = by_agent.at(agent);
      for (std::size_t r = 0; r < runs; ++r) {
        auto p = dir / "answers" / task / agent / ("run_" + std::to_string(r + 1) + ".txt");
        fs::create_directories(p.parent_path());
        write_file_atomic(p.string(), fixture_answers().at(names[r]));
      }
    }
  }
}

inline cache::CacheEntry page_entry(const std::string& url, const std::string& text, bool blocked = false) {
  cache::CacheEntry e;
  e.key = cache::normalize_url(url);
  e.original_urls = {url};
  e.final_url = url;
  e.fetched_at = "2025-01-01T00:00:00Z";
  e.http_status = blocked ? 403 : 200;
  e.kind = cache::ContentKind::html;
  e.content_type = "text/html";
  e.text = text;
  e.blocked = blocked;
  if (blocked) e.failure = "access challenge";
  return e;
}

// Archived copies of every page the fixture answers cite.
inline void seed_cache(cache::CacheStore& store) {
  store.put(page_entry(kCommitUrl,
                       "Adding LLaVA to transformers. younesbelkada committed on Dec 7, 2023. Commit 44b5506 "
                       "co-authored by ArthurZucker, shauray8, LysandreJik and haotian-liu."));
  store.put(page_entry("https://github.com/younesbelkada", "Younes B younesbelkada. ML engineer."));
  store.put(page_entry("https://github.com/ArthurZucker", "Arthur Zucker ArthurZucker. Open source."));
  store.put(page_entry("https://github.com/shauray8", "Shauray Singh shauray8."));
  store.put(page_entry("https://github.com/LysandreJik", "Lysandre Debut LysandreJik."));
  store.put(page_entry("https://github.com/haotian-liu", "Haotian Liu haotian-liu."));
  store.put(page_entry("http://www.example.org/france", "Paris is the capital and largest city of France."));
  store.put(page_entry("https://www.example.org/paywalled", "Please verify you are a human. Paris is the capital.",
                       true));
}

// Evidence served straight from a store; a miss stays a miss.
class StoreEvidence : public cache::EvidenceProvider {
 public:
  explicit StoreEvidence(std::shared_ptr<cache::CacheStore> store) : store_(std::move(store)) {}
  std::optional<cache::CacheEntry> evidence(const std::string& url) override {
    try {
      return store_->get(cache::normalize_url(url));
    } catch (const UrlError&) {
      return std::nullopt;
    }
  }

 private:
  std::shared_ptr<cache::CacheStore> store_;
};

}  // namespace treejudge::testing
