// Acceptance run: one line per primary criterion, nonzero exit if any fails.
// Tolerances are the criteria's own (exact equality unless a time bound is
// stated); nothing here is relaxed relative to the unit suites.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "support/campaign_fixture.hpp"
#include "support/fake_judge.hpp"
#include "support/fixture_server.hpp"
#include "support/llava_tree.hpp"
#include "support/random_tree.hpp"
#include "support/score_oracle.hpp"
#include "treejudge/cache/static_renderer.hpp"
#include "treejudge/judgment/prompts.hpp"
#include "treejudge/judgment/verifier.hpp"
#include "treejudge/metrics/metrics.hpp"
#include "treejudge/rubric/scoring.hpp"
#include "treejudge/rubric/short_circuit.hpp"
#include "treejudge/runner/run.hpp"

using namespace treejudge;
namespace tt = treejudge::testing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// Collects the first few failures of a criterion.
struct Outcome {
  std::size_t failures = 0;
  std::ostringstream detail;
  std::string note;

  void expect(bool ok, const std::string& what) {
    if (ok) return;
    if (failures++ < 3) detail << (failures > 1 ? "; " : "") << what;
  }
};

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("treejudge_acceptance_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::map<std::string, bool> as_bools(const rubric::LeafOutcomes& o) {
  std::map<std::string, bool> out;
  for (const auto& [id, r] : o) out[id] = r.passed;
  return out;
}

// --- scoring oracle --------------------------------------------------------

Outcome scoring_oracle() {
  Outcome o;
  std::mt19937_64 rng(0x5c0e);
  auto start = Clock::now();
  std::size_t max_nodes = 0, max_depth = 0;
  for (int i = 0; i < 1000; ++i) {
    auto tree = tt::random_tree(rng);
    max_nodes = std::max(max_nodes, tree.size());
    max_depth = std::max(max_depth, tree.depth());
    auto outcomes = tt::random_outcomes(rng, tree, 0.75);
    auto scored = rubric::aggregate_scores(tree, outcomes);
    o.expect(scored.root_score() == tt::oracle_score(tree, 0, as_bools(outcomes)), "tree " + std::to_string(i));
  }
  auto secs = std::chrono::duration<double>(Clock::now() - start).count();
  o.expect(max_depth <= 6 && max_nodes <= 603, "generator exceeded bounds");
  o.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
  o.note = "1000 trees, max " + std::to_string(max_nodes) + " nodes, " + std::to_string(secs).substr(0, 5) + " s";
  return o;
}

// --- short-circuit equivalence and call ledger -----------------------------

// Model stub that answers "leaf:<id>:pass|fail" claims and keeps only the
// claim text, in call order.
class LedgerModel : public judgment::ModelClient {
 public:
  judgment::ModelReply complete(const judgment::ModelRequest& r) override {
    auto claim = tt::claim_of(r);
    {
      std::lock_guard lock(mu_);
      ledger_.push_back(claim);
    }
    bool pass = claim.size() > 4 && claim.substr(claim.size() - 4) == "pass";
    return {Json{{"reasoning", "r"}, {"judgment", pass ? "Correct" : "Incorrect"}}.dump(), r.model};
  }
  std::vector<std::string> ledger() const {
    std::lock_guard lock(mu_);
    return ledger_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> ledger_;
};

// Rebuilds `tree` through the judge-facing session API, verified leaves
// claiming their given outcome.
void transcribe(runner::JudgeSession& s, const rubric::RubricTree& tree, const rubric::LeafOutcomes& truth) {
  std::vector<rubric::NodeHandle> handles(tree.size());
  handles[0] = s.initialize(*tree.root().ordering);
  for (std::size_t i = 1; i < tree.size(); ++i) {
    const auto& n = tree.node(i);
    auto parent = handles[*n.parent];
    bool crit = n.is_critical();
    switch (n.kind) {
      case rubric::NodeKind::internal:
        handles[i] = n.is_sequential() ? s.add_sequential(n.id, n.description, parent, crit)
                                       : s.add_parallel(n.id, n.description, parent, crit);
        break;
      case rubric::NodeKind::leaf_precomputed:
        handles[i] = s.add_custom_node(*n.precomputed_result, n.id, n.description, parent, crit);
        break;
      case rubric::NodeKind::leaf_verified:
        handles[i] = s.add_leaf(n.id, n.description, parent, crit);
        s.verify(handles[i], "leaf:" + n.id + (truth.at(n.id).passed ? ":pass" : ":fail"));
        break;
    }
  }
}

Outcome short_circuit() {
  Outcome o;
  std::mt19937_64 rng(0x5c1c);
  std::size_t calls = 0, skipped = 0;
  auto store = std::make_shared<cache::CacheStore>(scratch("short_circuit"));
  tt::StoreEvidence evidence(store);
  judgment::JudgmentConfig cfg;
  cfg.retry = {1, std::chrono::milliseconds(0), 1.0};
  for (int t = 0; t < 200; ++t) {
    auto tree = tt::random_tree(rng, {6, 200});
    for (int a = 0; a < 5; ++a) {
      auto truth = tt::random_outcomes(rng, tree, 0.7);
      LedgerModel model;
      judgment::JudgmentService service(model, cfg, nullptr);
      runner::JudgeSession session({"t", "task", "answer"}, service, evidence);
      transcribe(session, tree, truth);
      auto on = rubric::aggregate_scores(session.finalize(), session.evaluate(true));
      auto off = rubric::aggregate_scores(tree, rubric::collect_outcomes(tree, false, [&](const rubric::RubricNode& n) {
                                            return truth.at(n.id);
                                          }));
      auto tag = "tree " + std::to_string(t) + "/" + std::to_string(a);
      o.expect(on.root_score() == off.root_score(), tag + ": root differs");
      o.expect(off.count(rubric::NodeStatus::skipped_critical_block) == 0, tag + ": skipped with short-circuit off");

      // Replay the ledger: each call must target a leaf not yet blocked by
      // the outcomes returned before it.
      rubric::LeafOutcomes seen;
      for (const auto& claim : model.ledger()) {
        auto id = claim.substr(5, claim.rfind(':') - 5);
        o.expect(!rubric::blocked_nodes(tree, seen).count(id), tag + ": model called for blocked " + id);
        seen[id] = truth.at(id);
      }
      calls += seen.size();
      skipped += truth.size() - seen.size();
    }
  }
  o.note = std::to_string(calls) + " calls, " + std::to_string(skipped) + " avoided";
  return o;
}

// --- judge fixture -----------------------------------------------------------

struct FixtureRig {
  fs::path root;
  std::shared_ptr<cache::CacheStore> store;
  tt::StoreEvidence evidence;
  judgment::ScriptedModel model{tt::fake_judge};
  ConcurrencyLimiter limiter;
  runner::JudgeRegistry registry = tt::fixture_registry();
  runner::RunConfig cfg;

  FixtureRig(const std::string& name, std::size_t cap)
      : root(scratch(name)), store(std::make_shared<cache::CacheStore>(root / "cache")), evidence(store), limiter(cap) {
    tt::seed_cache(*store);
    tt::write_campaign(root / "campaign");
    cfg.results_root = root / "results";
    cfg.concurrency = cap;
  }
  runner::Services services() { return {&model, &evidence, nullptr, &limiter, {3, std::chrono::milliseconds(0), 2.0}}; }
};

Outcome llava_fixture() {
  Outcome o;
  FixtureRig rig("llava", 4);
  auto judge = rig.registry.at(runner::judges::llava::kTaskId);
  auto run = [&](const std::string& name) {
    return runner::run_judge(judge, {judge.task_id, "agent", 1, tt::fixture_answers().at(name), ""}, rig.cfg,
                             rig.services());
  };
  auto good = run("llava_good");
  o.expect(good.scored && *good.root_score == 1, "ground truth answer did not score exactly 1");

  auto bad = run("llava_wrong_id");
  o.expect(bad.scored && *bad.root_score == 0, "corrupted commit id did not score exactly 0");
  auto tree = rubric::decode_tree(parse_document(read_file((bad.dir / "rubric.json").string())));
  auto scored = rubric::decode_scored(parse_document(read_file((bad.dir / "scored.json").string())));
  auto authors = *tree.find("authors_verification");
  for (auto i = authors; i < tree.subtree_end(authors); ++i) {
    o.expect(scored.at(tree.node(i).id).status == rubric::NodeStatus::skipped_sequential,
             tree.node(i).id + " not skipped-sequential");
  }
  o.note = "root 1 then 0, " + std::to_string(tree.subtree_end(authors) - authors) + " author nodes skipped";
  return o;
}

// --- metrics -----------------------------------------------------------------

Outcome metrics_goldens() {
  Outcome o;
  using metrics::ScoreMatrix;
  auto q = [](long long n, long long d = 1) { return make_rational(n, d); };
  std::vector<std::vector<Rational>> rows = {{q(1), q(1), q(1)},       {q(1, 2), q(1), q(0)},   {q(0), q(0), q(0)},
                                             {q(1, 4), q(1, 3), q(1)}, {q(1), q(0), q(1, 2)},   {q(2, 3), q(2, 3), q(2, 3)},
                                             {q(0), q(0), q(1)},       {q(1, 5), q(1), q(3, 4)}, {q(1), q(1, 2), q(0)},
                                             {q(0), q(0), q(0)}};
  std::vector<std::string> names;
  for (std::size_t i = 0; i < rows.size(); ++i) names.push_back("t" + std::to_string(i + 1));
  ScoreMatrix m(names, 3);
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t r = 0; r < 3; ++r) m.set(t, r, rows[t][r]);
  }
  auto pc = metrics::partial_completion(m);
  auto sr = metrics::success_rate(m);
  o.expect(pc.per_run == std::vector<Rational>{q(277, 600), q(9, 20), q(59, 120)}, "PC per run");
  o.expect(pc.mean == q(421, 900), "PC mean");
  o.expect(pc.variance == q(499, 1620000), "PC variance");
  o.expect(sr.per_run == std::vector<Rational>{q(3, 10), q(3, 10), q(3, 10)} && sr.mean == q(3, 10), "SR");
  o.expect(metrics::pass_at_k(m, 1) == q(3, 10) && metrics::pass_at_k(m, 2) == q(1, 2) &&
               metrics::pass_at_k(m, 3) == q(7, 10),
           "Pass@k");

  std::mt19937_64 rng(0x3e7);
  std::uniform_int_distribution<int> den(1, 12);
  std::bernoulli_distribution perfect(0.3);
  for (int i = 0; i < 100; ++i) {
    ScoreMatrix r(names, 3);
    for (std::size_t t = 0; t < names.size(); ++t) {
      for (std::size_t k = 0; k < 3; ++k) {
        int d = den(rng);
        r.set(t, k, perfect(rng) ? q(1) : q(std::uniform_int_distribution<int>(0, d)(rng), d));
      }
    }
    auto rpc = metrics::partial_completion(r);
    auto rsr = metrics::success_rate(r);
    for (std::size_t k = 0; k < 3; ++k) o.expect(rsr.per_run[k] <= rpc.per_run[k], "SR > PC");
    o.expect(metrics::pass_at_k(r, 1) <= metrics::pass_at_k(r, 2) && metrics::pass_at_k(r, 2) <= metrics::pass_at_k(r, 3),
             "Pass@k not monotone");
  }
  o.note = "10x3 golden exact, 100 random matrices";
  return o;
}

// --- prompts -----------------------------------------------------------------

Outcome prompt_fidelity() {
  Outcome o;
  const auto dir = fs::path(TREEJUDGE_GOLDEN_DIR) / "prompts";
  auto sets = parse_document(read_file((dir / "placeholder_sets.json").string()));
  auto golden = [&](const std::string& f) { return read_file((dir / f).string()); };
  int compared = 0;
  for (const auto& s : sets) {
    auto name = s["name"].get<std::string>();
    o.expect(judgment::render_extractor_prompt(s["extraction_prompt"], s["task_description"], s["answer"],
                                               s["additional_instruction"]) == golden("extractor_" + name + ".txt"),
             "extractor " + name);
    o.expect(judgment::render_simple_verifier_prompt(s["task_description"], s["answer"], s["additional_instruction"],
                                                     s["claim"]) == golden("simple_" + name + ".txt"),
             "simple " + name);
    o.expect(judgment::render_url_verifier_prompt(s["task_description"], s["answer"], s["claim"],
                                                  s["additional_instruction"], s["url"], s["web_text"],
                                                  s["screenshots"].get<std::size_t>()) == golden("url_" + name + ".txt"),
             "url " + name);
    compared += 3;
  }
  o.expect(compared == 9, "expected three placeholder sets");
  o.note = std::to_string(compared) + " renderings byte-identical";
  return o;
}

// --- cache -------------------------------------------------------------------

Outcome cache_round_trip() {
  Outcome o;
  auto start = Clock::now();
  tt::FixtureServer server;
  auto store = std::make_shared<cache::CacheStore>(scratch("cache"));
  cache::PageCache cache(store, std::make_shared<cache::StaticRenderer>(), nullptr,
                         [] { return std::string("2025-06-01T12:00:00Z"); });

  auto html = cache.fetch_and_cache(server.url("/article.html"));
  auto lazy = cache.fetch_and_cache(server.url("/lazy.html"));
  auto pdf = cache.fetch_and_cache(server.url("/report.pdf"));
  auto guarded = cache.fetch_and_cache(server.url("/guarded.html"));
  o.expect(html.kind == cache::ContentKind::html && !html.blocked, "article not html");
  o.expect(lazy.kind == cache::ContentKind::html && !lazy.blocked, "lazy page not html");
  o.expect(pdf.kind == cache::ContentKind::pdf, "report not pdf");
  o.expect(guarded.blocked, "challenge page not blocked");
  o.expect(html.text.find("HTML-SENTINEL-4410") != std::string::npos, "html sentinel");
  o.expect(lazy.text.find("LAZY-SENTINEL-5521") != std::string::npos, "lazy sentinel");
  o.expect(pdf.text.find("PDF-SENTINEL-7731") != std::string::npos, "pdf sentinel");

  std::vector<std::thread> threads;
  for (int i = 0; i < 16; ++i) threads.emplace_back([&] { cache.fetch_and_cache(server.url("/slow")); });
  for (auto& t : threads) t.join();
  cache.fetch_and_cache(server.url("/article.html#again"));
  o.expect(server.hits("/slow") == 1, "concurrent fetches not coalesced");
  o.expect(server.hits("/article.html") == 1, "cached page fetched twice");

  auto replaced = cache.replace_entry(server.url("/guarded.html"), {"captured by hand", {}, "challenge", "reviewer"});
  auto history = store->history(replaced.key);
  o.expect(!replaced.blocked && replaced.manual && replaced.usable(), "replacement did not clear blocked");
  o.expect(replaced.provenance && replaced.provenance->annotator == "reviewer", "replacement provenance");
  o.expect(history.size() == 1 && history[0].blocked, "previous blocked version not kept");

  auto secs = std::chrono::duration<double>(Clock::now() - start).count();
  o.expect(secs < 30.0, "took " + std::to_string(secs) + " s");
  o.note = std::to_string(secs).substr(0, 4) + " s";
  return o;
}

// --- URL sanitization ----------------------------------------------------------

Outcome url_sanitization() {
  Outcome o;
  std::mt19937 rng(0x0a11);
  const std::vector<std::string> hosts = {"example.com", "www.docs.org", "github.com", "arxiv.org", "a-b.net"};
  const std::vector<std::string> tails = {"", "/", "/p", "/a/b?x=1", "/c#frag", "/d.html"};
  const std::vector<std::string> punct = {"", ".", ",", ")", ").", ";", "!"};
  auto pick = [&](const auto& v) { return v[rng() % v.size()]; };
  judgment::ExtractionSchema schema{"Links", {judgment::FieldSpec::url("link"),
                                              judgment::FieldSpec::list("links", judgment::FieldSpec::url("u"))}};
  Json reply;
  judgment::ScriptedModel model([&](const judgment::ModelRequest&) { return reply.dump(); });
  judgment::JudgmentConfig cfg;
  cfg.retry = {1, std::chrono::milliseconds(0), 1.0};
  judgment::JudgmentService service(model, cfg, nullptr);
  std::size_t kept = 0, dropped = 0;
  for (int n = 0; n < 1000; ++n) {
    std::string answer = "Answer " + std::to_string(n) + ":";
    std::vector<std::string> claimed;
    for (int i = 0; i < 4; ++i) {
      std::string url = (rng() % 3 ? (rng() % 2 ? "https://" : "http://") : "") + pick(hosts) + pick(tails);
      if (rng() % 4 == 0) {
        claimed.push_back(url + "/invented" + std::to_string(rng() % 100));
      } else {
        answer += " see (" + url + pick(punct) + " and";
        claimed.push_back(url + pick(punct));
      }
    }
    if (rng() % 5 == 0) claimed.push_back("https://hallucinated.example/" + std::to_string(n));
    reply = {{"link", claimed.front()}, {"links", claimed}};
    auto got = service.extract({"t", "task", answer}, "Extract the links.", schema, "", "extract.links");
    auto grounded = [&](const std::string& u) {
      if (answer.find(u) != std::string::npos) return true;
      return u.rfind("http://", 0) == 0 && answer.find(u.substr(7)) != std::string::npos;
    };
    if (!got["link"].is_null()) o.expect(grounded(got["link"]), "ungrounded link " + got["link"].dump());
    for (const auto& u : got["links"]) o.expect(grounded(u), "ungrounded " + u.dump() + " in answer " + std::to_string(n));
    kept += got["links"].size();
    dropped += claimed.size() - got["links"].size();
  }
  o.note = std::to_string(kept) + " kept, " + std::to_string(dropped) + " dropped";
  return o;
}

// --- determinism ---------------------------------------------------------------

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path().string());
  }
  return out;
}

Outcome determinism() {
  Outcome o;
  FixtureRig serial("cap1", 1), wide("cap8", 8);
  auto a = runner::run_suite(serial.root / "campaign", serial.registry, serial.cfg, serial.services());
  auto b = runner::run_suite(wide.root / "campaign", wide.registry, wide.cfg, wide.services());
  o.expect(a.runs.size() == 12 && b.runs.size() == 12, "expected 12 triples");
  o.expect(a.failed == 0 && b.failed == 0, "evaluation failures");
  auto sa = snapshot(serial.cfg.results_root), sb = snapshot(wide.cfg.results_root);
  o.expect(sa.size() == sb.size(), "file counts differ");
  for (const auto& [path, bytes] : sa) {
    auto it = sb.find(path);
    o.expect(it != sb.end() && it->second == bytes, path + " differs");
  }
  for (const auto& [agent, m] : a.matrices) {
    const auto& other = b.matrices.at(agent);
    for (std::size_t t = 0; t < m.task_count(); ++t) {
      for (std::size_t r = 0; r < m.runs(); ++r) o.expect(m.cell(t, r) == other.cell(t, r), "matrix cell differs");
    }
  }
  o.note = std::to_string(sa.size()) + " files identical";
  return o;
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::off);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"scoring-oracle equivalence", scoring_oracle},
      {"short-circuit equivalence + call ledger", short_circuit},
      {"LLaVA commit judge fixture", llava_fixture},
      {"metrics goldens + properties", metrics_goldens},
      {"prompt fidelity", prompt_fidelity},
      {"cache round-trip", cache_round_trip},
      {"URL sanitization property", url_sanitization},
      {"determinism across concurrency caps", determinism},
  };
  int failed = 0;
  for (const auto& [name, run] : criteria) {
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o.expect(false, std::string("threw: ") + e.what());
    }
    if (o.failures) {
      ++failed;
      std::printf("FAIL  %-40s %zu failure(s): %s\n", name.c_str(), o.failures, o.detail.str().c_str());
    } else {
      std::printf("PASS  %-40s %s\n", name.c_str(), o.note.c_str());
    }
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed ? 1 : 0;
}
