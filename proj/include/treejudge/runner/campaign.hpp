#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <spdlog/spdlog.h>

#include "treejudge/core/document.hpp"
#include "treejudge/core/error.hpp"

namespace treejudge::runner {

namespace fs = std::filesystem;

struct AnswerRecord {
  std::string task_id;
  std::string agent_name;
  int run_index = 1;
  std::string answer;
  std::string collected_at;

  auto key() const { return std::tie(task_id, agent_name, run_index); }
};

struct RunConfig {
  std::string model = "o4-mini";
  std::size_t concurrency = 4;
  bool short_circuit = true;
  fs::path cache_root;
  fs::path results_root;
  int pass_k = 3;

  void validate() const {
    if (concurrency == 0) throw ConfigError("concurrency cap must be >= 1");
    if (pass_k <= 0) throw ConfigError("pass_k must be >= 1");
    if (results_root.empty()) throw ConfigError("results root is not set");
  }
};

// Narrows a campaign to some tasks, agents or run indices; empty means all.
struct Selector {
  std::vector<std::string> tasks;
  std::vector<std::string> agents;
  std::vector<int> runs;

  bool matches(const AnswerRecord& a) const {
    auto in = [](const auto& v, const auto& x) { return v.empty() || std::find(v.begin(), v.end(), x) != v.end(); };
    return in(tasks, a.task_id) && in(agents, a.agent_name) && in(runs, a.run_index);
  }
};

inline std::optional<int> parse_run_file(const std::string& name) {
  if (name.rfind("run_", 0) != 0 || name.size() <= 8 || name.substr(name.size() - 4) != ".txt") return std::nullopt;
  auto digits = name.substr(4, name.size() - 8);
  int n = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc() || p != digits.data() + digits.size() || n < 1) return std::nullopt;
  return n;
}

inline std::string file_time_utc(const fs::path& p) {
  auto ft = fs::last_write_time(p);
  auto sys = std::chrono::time_point_cast<std::chrono::seconds>(ft - fs::file_time_type::clock::now() +
                                                                std::chrono::system_clock::now());
  std::time_t t = std::chrono::system_clock::to_time_t(sys);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Reads answers/<task>/<agent>/run_<n>.txt under the campaign directory,
// sorted by (task, agent, run). Stray files are skipped with a warning.
inline std::vector<AnswerRecord> load_answers(const fs::path& campaign, const Selector& selector = {}) {
  auto root = campaign / "answers";
  if (!fs::is_directory(root)) throw ConfigError("no answers/ directory under " + campaign.string());
  std::vector<AnswerRecord> out;
  for (const auto& task : fs::directory_iterator(root)) {
    if (!task.is_directory()) continue;
    for (const auto& agent : fs::directory_iterator(task.path())) {
      if (!agent.is_directory()) continue;
      for (const auto& file : fs::directory_iterator(agent.path())) {
        auto n = parse_run_file(file.path().filename().string());
        if (!n || !file.is_regular_file()) {
          spdlog::warn("ignoring {}: expected run_<n>.txt", file.path().string());
          continue;
        }
        AnswerRecord a{task.path().filename().string(), agent.path().filename().string(), *n,
                       read_file(file.path().string()), file_time_utc(file.path())};
        if (selector.matches(a)) out.push_back(std::move(a));
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
  return out;
}

inline fs::path result_dir(const fs::path& results_root, const std::string& task, const std::string& agent, int run) {
  return results_root / task / agent / ("run_" + std::to_string(run));
}

}  // namespace treejudge::runner
