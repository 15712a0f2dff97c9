#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "treejudge/core/error.hpp"
#include "treejudge/runner/session.hpp"

namespace treejudge::runner {

// A per-task judge: the task text plus code that extracts from the answer
// and declares the rubric on a session.
struct JudgeDefinition {
  std::string task_id;
  std::string task_description;
  std::function<void(JudgeSession&)> build;
};

class JudgeRegistry {
 public:
  void add(JudgeDefinition def) {
    if (def.task_id.empty() || !def.build) throw ConfigError("judge definition needs a task id and a build function");
    auto id = def.task_id;
    if (!judges_.emplace(id, std::move(def)).second) throw ConfigError("judge for '" + id + "' registered twice");
  }

  const JudgeDefinition& at(const std::string& task_id) const {
    auto it = judges_.find(task_id);
    if (it == judges_.end()) throw ConfigError("no judge registered for task '" + task_id + "'");
    return it->second;
  }

  bool contains(const std::string& task_id) const { return judges_.contains(task_id); }

  std::vector<std::string> task_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : judges_) out.push_back(id);
    return out;
  }

 private:
  std::map<std::string, JudgeDefinition> judges_;
};

}  // namespace treejudge::runner
