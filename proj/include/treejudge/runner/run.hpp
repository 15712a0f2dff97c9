#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "treejudge/core/hash.hpp"
#include "treejudge/judgment/model.hpp"
#include "treejudge/metrics/metrics.hpp"
#include "treejudge/rubric/codec.hpp"
#include "treejudge/rubric/scoring.hpp"
#include "treejudge/runner/campaign.hpp"
#include "treejudge/runner/registry.hpp"

namespace treejudge::runner {

inline constexpr const char* kResultSchema = "treejudge.result/1";
inline constexpr const char* kVerificationsSchema = "treejudge.verifications/1";
inline constexpr const char* kExtractionsSchema = "treejudge.extractions/1";

// Shared collaborators of a campaign. The limiter is the single in-flight
// cap for model calls and page fetches.
struct Services {
  judgment::ModelClient* model = nullptr;
  cache::EvidenceProvider* evidence = nullptr;
  judgment::ToolVerifier* tools = nullptr;
  ConcurrencyLimiter* limiter = nullptr;
  RetryPolicy retry{};
};

struct NodeCounts {
  std::size_t total = 0;
  std::size_t evaluated = 0;
  std::size_t skipped_sequential = 0;
  std::size_t skipped_critical_block = 0;
};

struct RunSummary {
  std::string task_id;
  std::string agent_name;
  int run_index = 0;
  bool scored = false;
  std::optional<Rational> root_score;
  NodeCounts counts;
  std::string error;
  fs::path dir;
  bool resumed = false;  // taken from an earlier completed run
};

namespace run_detail {

inline Json outcome_json(const LeafRecord& r) {
  const auto& o = r.outcome;
  return {{"verdict", o.passed ? "pass" : "fail"},
          {"reasoning", o.reasoning},
          {"supporting_source", o.supporting_source ? Json(*o.supporting_source) : Json(nullptr)},
          {"model", o.model_id},
          {"method", r.url_based ? "url" : "simple"},
          {"sources", r.sources},
          {"transcripts", o.transcripts},
          {"warnings", o.warnings}};
}

inline Json result_json(const RunSummary& s, const RunConfig& cfg, const std::string& answer_sha) {
  Json j = {{"schema", kResultSchema},
            {"task_id", s.task_id},
            {"agent", s.agent_name},
            {"run", s.run_index},
            {"status", s.scored ? "scored" : "evaluation-failed"},
            {"model", cfg.model},
            {"short_circuit", cfg.short_circuit},
            {"answer_sha256", answer_sha}};
  if (s.scored) {
    j["root_score"] = to_exact_string(*s.root_score);
    j["root_score_decimal"] = to_decimal(*s.root_score, 4);
    j["nodes"] = {{"total", s.counts.total},
                  {"evaluated", s.counts.evaluated},
                  {"skipped_sequential", s.counts.skipped_sequential},
                  {"skipped_critical_block", s.counts.skipped_critical_block}};
  } else {
    j["error"] = s.error;
  }
  return j;
}

inline void write_doc(const fs::path& p, const Json& doc) { write_file_atomic(p.string(), to_canonical_text(doc)); }

}  // namespace run_detail

// Evaluates one answer with its judge and persists everything under
// results/<task>/<agent>/run_<n>/. A persistent model failure yields an
// evaluation-failed summary (never a score); structural problems in the
// judge definition throw.
inline RunSummary run_judge(const JudgeDefinition& judge, const AnswerRecord& answer, const RunConfig& cfg,
                            const Services& services) {
  cfg.validate();
  if (!services.model || !services.evidence) throw ConfigError("run_judge needs a model client and an evidence provider");
  if (judge.task_id != answer.task_id) {
    throw ConfigError("judge '" + judge.task_id + "' cannot evaluate task '" + answer.task_id + "'");
  }
  RunSummary s{answer.task_id, answer.agent_name, answer.run_index};
  s.dir = result_dir(cfg.results_root, answer.task_id, answer.agent_name, answer.run_index);
  fs::remove_all(s.dir);
  fs::create_directories(s.dir);
  auto answer_sha = sha256_hex(answer.answer);

  judgment::DirectoryTranscripts sink(s.dir / "transcripts");
  judgment::JudgmentConfig jcfg;
  jcfg.model = cfg.model;
  jcfg.retry = services.retry;
  jcfg.limiter = services.limiter;
  judgment::JudgmentService service(*services.model, jcfg, &sink);
  JudgeSession session({answer.task_id, judge.task_description, answer.answer}, service, *services.evidence,
                       services.tools);
  try {
    judge.build(session);
    const auto& tree = session.finalize();
    auto outcomes = session.evaluate(cfg.short_circuit, cfg.concurrency);
    auto scored = rubric::aggregate_scores(tree, outcomes);
    scored.validate_against(tree);

    s.scored = true;
    s.root_score = scored.root_score();
    s.counts = {tree.size(), scored.count(rubric::NodeStatus::evaluated),
                scored.count(rubric::NodeStatus::skipped_sequential),
                scored.count(rubric::NodeStatus::skipped_critical_block)};

    Json verifications = Json::object();
    for (const auto& [id, rec] : session.leaf_records()) verifications[id] = run_detail::outcome_json(rec);
    run_detail::write_doc(s.dir / "rubric.json", rubric::encode_tree(tree));
    run_detail::write_doc(s.dir / "scored.json", rubric::encode_scored(scored));
    run_detail::write_doc(s.dir / "verifications.json", {{"schema", kVerificationsSchema}, {"leaves", verifications}});
  } catch (const EvaluationError& e) {
    s.scored = false;
    s.error = e.what();
    spdlog::error("{}/{}/run_{}: evaluation failed: {}", s.task_id, s.agent_name, s.run_index, s.error);
  }
  run_detail::write_doc(s.dir / "extractions.json", {{"schema", kExtractionsSchema},
                                                     {"extractions", session.extractions()},
                                                     {"ground_truth", session.ground_truth()}});
  // Written last: its presence marks the triple as complete.
  run_detail::write_doc(s.dir / "result.json", run_detail::result_json(s, cfg, answer_sha));
  return s;
}

// Summary of an earlier run if it completed with a score for this exact
// answer and configuration.
inline std::optional<RunSummary> completed_run(const AnswerRecord& a, const RunConfig& cfg) {
  auto dir = result_dir(cfg.results_root, a.task_id, a.agent_name, a.run_index);
  auto path = dir / "result.json";
  if (!fs::exists(path)) return std::nullopt;
  Json doc;
  try {
    doc = parse_document(read_file(path.string()));
    require_schema(doc, kResultSchema);
  } catch (const Error& e) {
    spdlog::warn("re-evaluating {}: unreadable result ({})", dir.string(), e.what());
    return std::nullopt;
  }
  if (doc.value("status", "") != "scored" || doc.value("answer_sha256", "") != sha256_hex(a.answer) ||
      doc.value("model", "") != cfg.model || doc.value("short_circuit", !cfg.short_circuit) != cfg.short_circuit) {
    return std::nullopt;
  }
  RunSummary s{a.task_id, a.agent_name, a.run_index, true, parse_rational(doc["root_score"].get<std::string>())};
  const auto& n = doc["nodes"];
  s.counts = {n["total"], n["evaluated"], n["skipped_sequential"], n["skipped_critical_block"]};
  s.dir = dir;
  s.resumed = true;
  return s;
}

struct SuiteResult {
  std::vector<RunSummary> runs;                    // sorted by (task, agent, run)
  std::map<std::string, metrics::ScoreMatrix> matrices;  // per agent
  std::size_t failed = 0;
  std::size_t resumed = 0;
};

// Tasks are the sorted ids the agent answered; runs span 1..max index.
// Failed or missing triples stay absent.
inline std::map<std::string, metrics::ScoreMatrix> build_matrices(const std::vector<RunSummary>& runs) {
  std::map<std::string, std::map<std::string, std::map<int, std::optional<Rational>>>> grid;
  for (const auto& r : runs) grid[r.agent_name][r.task_id][r.run_index] = r.scored ? r.root_score : std::nullopt;
  std::map<std::string, metrics::ScoreMatrix> out;
  for (const auto& [agent, tasks] : grid) {
    std::vector<std::string> ids;
    int max_run = 0;
    for (const auto& [task, cells] : tasks) {
      ids.push_back(task);
      max_run = std::max(max_run, cells.rbegin()->first);
    }
    metrics::ScoreMatrix m(ids, static_cast<std::size_t>(max_run));
    for (std::size_t t = 0; t < ids.size(); ++t) {
      for (const auto& [run, score] : tasks.at(ids[t])) {
        if (score) m.set(t, static_cast<std::size_t>(run - 1), *score);
      }
    }
    out.emplace(agent, std::move(m));
  }
  return out;
}

// Evaluates every selected (task, agent, run) triple with up to
// cfg.concurrency triples in flight. Triples already scored for the same
// answer, model and short-circuit setting are reused.
inline SuiteResult run_suite(const fs::path& campaign, const JudgeRegistry& registry, const RunConfig& cfg,
                             const Services& services, const Selector& selector = {}) {
  cfg.validate();
  auto answers = load_answers(campaign, selector);
  SuiteResult result;
  result.runs.resize(answers.size());
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr fatal;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < answers.size();) {
      const auto& a = answers[i];
      try {
        if (auto done = completed_run(a, cfg)) {
          result.runs[i] = std::move(*done);
          continue;
        }
        result.runs[i] = run_judge(registry.at(a.task_id), a, cfg, services);
      } catch (const Error& e) {
        // Unknown tasks and broken judges fail this triple only.
        RunSummary s{a.task_id, a.agent_name, a.run_index};
        s.error = e.what();
        s.dir = result_dir(cfg.results_root, a.task_id, a.agent_name, a.run_index);
        spdlog::error("{}/{}/run_{}: {}", a.task_id, a.agent_name, a.run_index, s.error);
        result.runs[i] = std::move(s);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!fatal) fatal = std::current_exception();
        next = answers.size();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(cfg.concurrency, std::max<std::size_t>(answers.size(), 1)); ++w) {
    pool.emplace_back(worker);
  }
  for (auto& t : pool) t.join();
  if (fatal) std::rethrow_exception(fatal);
  for (const auto& r : result.runs) {
    result.failed += r.scored ? 0 : 1;
    result.resumed += r.resumed ? 1 : 0;
  }
  result.matrices = build_matrices(result.runs);
  return result;
}

// Rebuilds the per-agent matrices from result.json files on disk.
inline std::map<std::string, metrics::ScoreMatrix> load_matrices(const fs::path& results_root) {
  std::vector<RunSummary> runs;
  if (!fs::is_directory(results_root)) throw ConfigError("no results under " + results_root.string());
  for (const auto& e : fs::recursive_directory_iterator(results_root)) {
    if (e.path().filename() != "result.json") continue;
    auto doc = parse_document(read_file(e.path().string()));
    require_schema(doc, kResultSchema);
    RunSummary s{doc["task_id"], doc["agent"], doc["run"].get<int>()};
    s.scored = doc["status"] == "scored";
    if (s.scored) s.root_score = parse_rational(doc["root_score"].get<std::string>());
    runs.push_back(std::move(s));
  }
  if (runs.empty()) throw ConfigError("no result.json files under " + results_root.string());
  return build_matrices(runs);
}

}  // namespace treejudge::runner
