#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "treejudge/cache/devtools_renderer.hpp"
#include "treejudge/cache/page_cache.hpp"
#include "treejudge/cache/static_renderer.hpp"
#include "treejudge/judgment/openai_client.hpp"
#include "treejudge/judgment/tools.hpp"
#include "treejudge/metrics/report.hpp"
#include "treejudge/runner/judges/llava_commit.hpp"
#include "treejudge/runner/review.hpp"
#include "treejudge/runner/run.hpp"

namespace fs = std::filesystem;
using namespace treejudge;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitEvaluationFailed = 2;

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

struct Options {
  fs::path campaign = ".";
  fs::path cache_root;
  fs::path results_root;
  std::size_t concurrency = 4;
  std::string browser = env_or("TREEJUDGE_BROWSER_ENDPOINT", "");
  std::string log_level = "info";

  runner::Selector selector;
  std::string model = env_or("TREEJUDGE_MODEL", judgment::kDefaultModel);
  bool no_short_circuit = false;

  int k = 3;
  std::string timestamp;
  fs::path out;

  fs::path bundle;
  fs::path annotations;
  fs::path request;

  fs::path cache() const { return cache_root.empty() ? campaign / "cache" : cache_root; }
  fs::path results() const { return results_root.empty() ? campaign / "results" : results_root; }
};

std::shared_ptr<cache::Renderer> make_renderer(const Options& o) {
  if (!o.browser.empty()) return std::make_shared<cache::DevToolsRenderer>(o.browser);
  spdlog::warn("no browser endpoint configured; pages are fetched without script execution");
  return std::make_shared<cache::StaticRenderer>();
}

void write_out(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  write_file_atomic(p.string(), text);
}

int cmd_cache(const Options& o) {
  ConcurrencyLimiter limiter(o.concurrency);
  cache::PageCache cache(std::make_shared<cache::CacheStore>(o.cache()), make_renderer(o), &limiter);
  std::vector<std::string> answers;
  for (const auto& a : runner::load_answers(o.campaign, o.selector)) answers.push_back(a.answer);
  auto urls = cache::collect_urls(answers);
  auto entries = cache.prefetch(urls, o.concurrency);
  std::size_t usable = 0, blocked = 0, unreachable = 0;
  for (const auto& e : entries) {
    if (e.usable()) ++usable;
    if (e.blocked && !e.manual) ++blocked;
    if (e.kind == cache::ContentKind::unreachable) ++unreachable;
  }
  std::cout << "cached " << entries.size() << " url(s): " << usable << " usable, " << blocked << " blocked, "
            << unreachable << " unreachable\n";
  return kExitOk;
}

int cmd_eval(const Options& o) {
  runner::RunConfig cfg;
  cfg.model = o.model;
  cfg.concurrency = o.concurrency;
  cfg.short_circuit = !o.no_short_circuit;
  cfg.cache_root = o.cache();
  cfg.results_root = o.results();
  cfg.validate();

  auto settings = judgment::OpenAiSettings::from_env();
  settings.model = cfg.model;
  if (settings.api_key.empty()) spdlog::warn("TREEJUDGE_API_KEY is not set");
  judgment::OpenAiClient model(settings);

  ConcurrencyLimiter limiter(cfg.concurrency);
  cache::PageCache cache(std::make_shared<cache::CacheStore>(cfg.cache_root), make_renderer(o), &limiter);
  judgment::ToolVerifier tools(judgment::ToolBackends::from_env(), &limiter);
  runner::JudgeRegistry registry;
  runner::judges::register_builtin(registry);

  auto suite = runner::run_suite(o.campaign, registry, cfg, {&model, &cache, &tools, &limiter, {}}, o.selector);
  if (suite.runs.empty()) throw ConfigError("no answers match the selection");
  for (const auto& r : suite.runs) {
    std::cout << r.task_id << " " << r.agent_name << " run_" << r.run_index << " ";
    if (r.scored) {
      std::cout << "score=" << to_decimal(*r.root_score, 4) << " evaluated=" << r.counts.evaluated
                << " skipped=" << (r.counts.skipped_sequential + r.counts.skipped_critical_block)
                << " total=" << r.counts.total << (r.resumed ? " (resumed)" : "") << "\n";
    } else {
      std::cout << "evaluation-failed: " << r.error << "\n";
    }
  }
  std::cout << suite.runs.size() << " run(s), " << suite.failed << " failed, " << suite.resumed << " resumed\n";
  return suite.failed ? kExitEvaluationFailed : kExitOk;
}

int cmd_metrics(const Options& o) {
  auto matrices = runner::load_matrices(o.results());
  // Provenance comes from the results themselves; mixed settings are refused.
  std::set<std::string> models;
  std::set<bool> short_circuit;
  for (const auto& e : fs::recursive_directory_iterator(o.results())) {
    if (e.path().filename() != "result.json") continue;
    auto doc = parse_document(read_file(e.path().string()));
    models.insert(doc.value("model", ""));
    short_circuit.insert(doc.value("short_circuit", true));
  }
  if (models.size() != 1 || short_circuit.size() != 1) {
    throw ConfigError("results mix models or short-circuit settings; evaluate them into separate roots");
  }
  metrics::Provenance prov{*models.begin(), *short_circuit.begin(),
                           o.timestamp.empty() ? cache::utc_now() : o.timestamp, PROJECT_VERSION};
  auto out = o.out.empty() ? o.campaign / "metrics" : o.out;
  std::vector<metrics::MetricsReport> reports;
  for (const auto& [agent, m] : matrices) {
    reports.push_back(metrics::emit_report(m, o.k, agent, prov));
    write_out(out / (agent + ".json"), to_canonical_text(metrics::report_to_json(reports.back())));
    write_out(out / (agent + ".csv"), metrics::matrix_to_csv(m));
  }
  auto table = metrics::render_table(reports);
  write_out(out / "summary.txt", table);
  std::cout << table;
  return kExitOk;
}

int cmd_export_review(const Options& o) {
  cache::CacheStore store(o.cache());
  auto bundle = runner::export_review_bundle(o.results(), o.campaign, &store);
  auto out = o.out.empty() ? o.campaign / "review_bundle.json" : o.out;
  write_out(out, to_canonical_text(bundle));
  std::cout << "wrote " << out.string() << " (bundle " << bundle["bundle_id"].get<std::string>() << ", "
            << bundle["runs"].size() << " run(s))\n";
  return kExitOk;
}

int cmd_replace(const Options& o) {
  auto req = runner::parse_replacement_request(parse_document(read_file(o.request.string())));
  // Replacement never fetches, so no browser is needed.
  cache::PageCache cache(std::make_shared<cache::CacheStore>(o.cache()), std::make_shared<cache::StaticRenderer>());
  auto outcome = runner::apply_replacement(cache, req);
  std::cout << "replaced " << outcome.entry.key << " (version " << outcome.entry.version << ")\n";
  return kExitOk;
}

int cmd_review_diff(const Options& o) {
  auto bundle = parse_document(read_file(o.bundle.string()));
  auto annotations = runner::parse_annotations(parse_document(read_file(o.annotations.string())));
  auto report = runner::compute_discrepancies(bundle, annotations);
  auto out = o.out.empty() ? o.campaign / "discrepancy_report.json" : o.out;
  write_out(out, to_canonical_text(report));
  const auto& t = report["totals"];
  std::cout << t["nodes_compared"] << " compared, " << t["mismatches"] << " mismatched, " << t["annotated_skipped"]
            << " annotated but skipped\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rubric-tree judging for web information-gathering answers"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--campaign", o.campaign, "Campaign directory holding answers/")->capture_default_str();
  app.add_option("--cache", o.cache_root, "Cache root (default: <campaign>/cache)");
  app.add_option("--results", o.results_root, "Results root (default: <campaign>/results)");
  app.add_option("--concurrency", o.concurrency, "Global cap on in-flight model calls and fetches")
      ->capture_default_str()
      ->check(CLI::Range(std::size_t{1}, std::size_t{1024}));
  app.add_option("--browser", o.browser, "Headless browser debugging endpoint (env TREEJUDGE_BROWSER_ENDPOINT)");
  app.add_option("--log-level", o.log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  auto add_selectors = [&](CLI::App* cmd) {
    cmd->add_option("--task", o.selector.tasks, "Only these task ids");
    cmd->add_option("--agent", o.selector.agents, "Only these agents");
    cmd->add_option("--run", o.selector.runs, "Only these run indices")->check(CLI::PositiveNumber);
  };

  auto* cache_cmd = app.add_subcommand("cache", "Pre-fetch every URL cited in the answers");
  add_selectors(cache_cmd);

  auto* eval = app.add_subcommand("eval", "Judge answers and write results");
  add_selectors(eval);
  eval->add_option("--model", o.model, "Judge model id (env TREEJUDGE_MODEL)")->capture_default_str();
  eval->add_flag("--no-short-circuit", o.no_short_circuit, "Evaluate every leaf, even ones that cannot matter");

  auto* metrics_cmd = app.add_subcommand("metrics", "Aggregate scores into per-agent reports");
  metrics_cmd->add_option("--k", o.k, "Pass@k")->capture_default_str()->check(CLI::PositiveNumber);
  metrics_cmd->add_option("--timestamp", o.timestamp, "Report timestamp (default: now, UTC)");
  metrics_cmd->add_option("--out", o.out, "Output directory (default: <campaign>/metrics)");

  auto* export_cmd = app.add_subcommand("export-review", "Write the review bundle");
  export_cmd->add_option("--out", o.out, "Bundle file (default: <campaign>/review_bundle.json)");

  auto* replace = app.add_subcommand("replace", "Apply a replacement-request file to the cache");
  replace->add_option("request", o.request, "Replacement request file")->required()->check(CLI::ExistingFile);

  auto* diff = app.add_subcommand("review-diff", "Compare human annotations with automated leaf scores");
  diff->add_option("--bundle", o.bundle, "Review bundle")->required()->check(CLI::ExistingFile);
  diff->add_option("--annotations", o.annotations, "Annotation file")->required()->check(CLI::ExistingFile);
  diff->add_option("--out", o.out, "Report file (default: <campaign>/discrepancy_report.json)");

  CLI11_PARSE(app, argc, argv);
  // Logs go to stderr so stdout carries only command output.
  spdlog::set_default_logger(spdlog::stderr_color_mt("treejudge"));
  spdlog::set_level(spdlog::level::from_str(o.log_level));

  try {
    if (*cache_cmd) return cmd_cache(o);
    if (*eval) return cmd_eval(o);
    if (*metrics_cmd) return cmd_metrics(o);
    if (*export_cmd) return cmd_export_review(o);
    if (*replace) return cmd_replace(o);
    if (*diff) return cmd_review_diff(o);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitError;
  }
  return kExitError;
}
