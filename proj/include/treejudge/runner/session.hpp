#pragma once

#include <atomic>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/spdlog.h>

#include "treejudge/cache/page_cache.hpp"
#include "treejudge/judgment/tools.hpp"
#include "treejudge/judgment/verifier.hpp"
#include "treejudge/rubric/short_circuit.hpp"
#include "treejudge/rubric/tree.hpp"

namespace treejudge::runner {

using rubric::NodeHandle;

// What one leaf check asks for. No sources means a simple verification;
// a source list (even an empty one) means URL-based verification.
struct PendingCheck {
  std::string claim;
  std::optional<std::vector<std::string>> sources;
  std::string additional;
};

struct LeafRecord {
  judgment::VerificationOutcome outcome;
  bool url_based = false;
  std::vector<std::string> sources;
};

// Everything a judge sees while it builds its rubric: the answer context,
// the extractor, helper tools and the tree builder. Leaf verifications are
// registered here and run afterwards, in declaration order, so the
// efficiency short-circuit can skip the ones that no longer matter.
class JudgeSession {
 public:
  JudgeSession(judgment::JudgeContext ctx, judgment::JudgmentService& service, cache::EvidenceProvider& evidence,
               judgment::ToolVerifier* tools = nullptr)
      : ctx_(std::move(ctx)), service_(service), evidence_(evidence), tools_(tools) {
    ctx_.validate();
  }

  const judgment::JudgeContext& context() const { return ctx_; }

  NodeHandle initialize(rubric::Ordering strategy, std::string description = {}) {
    if (root_) throw StructureError("judge session already initialized");
    root_ = builder_.build_node(std::nullopt, {"root", std::move(description), rubric::Criticality::non_critical,
                                               rubric::NodeKind::internal, strategy, std::nullopt});
    return *root_;
  }

  NodeHandle root() const {
    if (!root_) throw StructureError("judge session not initialized");
    return *root_;
  }

  NodeHandle add_parallel(std::string id, std::string desc, NodeHandle parent, bool critical = false) {
    return internal(std::move(id), std::move(desc), parent, critical, rubric::Ordering::parallel);
  }

  NodeHandle add_sequential(std::string id, std::string desc, NodeHandle parent, bool critical = false) {
    return internal(std::move(id), std::move(desc), parent, critical, rubric::Ordering::sequential);
  }

  NodeHandle add_leaf(std::string id, std::string desc, NodeHandle parent, bool critical = false) {
    auto h = builder_.build_node(parent, {id, std::move(desc), crit(critical), rubric::NodeKind::leaf_verified,
                                          std::nullopt, std::nullopt});
    handles_[h.index] = std::move(id);
    return h;
  }

  NodeHandle add_custom_node(bool result, std::string id, std::string desc, NodeHandle parent, bool critical = true) {
    return builder_.build_node(parent, {std::move(id), std::move(desc), crit(critical), rubric::NodeKind::leaf_precomputed,
                                        std::nullopt, result});
  }

  void verify(NodeHandle leaf, std::string claim, std::optional<std::vector<std::string>> sources = std::nullopt,
              std::string additional = {}) {
    auto it = handles_.find(leaf.index);
    if (it == handles_.end()) throw StructureError("verify() needs a leaf created with add_leaf");
    if (!checks_.emplace(it->second, PendingCheck{std::move(claim), std::move(sources), std::move(additional)}).second) {
      throw StructureError("leaf '" + it->second + "' already has a verification");
    }
  }

  // Single optional source, as judges often hold one nullable URL: null
  // falls back to a simple verification.
  void verify_with_url(NodeHandle leaf, std::string claim, const Json& maybe_url, std::string additional = {}) {
    if (maybe_url.is_null()) return verify(leaf, std::move(claim), std::nullopt, std::move(additional));
    return verify(leaf, std::move(claim), std::vector<std::string>{maybe_url.get<std::string>()}, std::move(additional));
  }

  Json extract(const std::string& instruction, const judgment::ExtractionSchema& schema, const std::string& name,
               const std::string& additional = {}) {
    if (extractions_.contains(name)) throw StructureError("duplicate extraction name '" + name + "'");
    auto record = service_.extract(ctx_, instruction, schema, additional, "extract." + name);
    extractions_[name] = record;
    return record;
  }

  Json tool(judgment::ToolKind kind, const Json& params) {
    if (!tools_) throw ConfigError("no helper tools configured for this run");
    return tools_->tool_verify(kind, params);
  }

  void add_ground_truth(Json value, const std::string& name) { ground_truth_[name] = std::move(value); }

  const Json& extractions() const { return extractions_; }
  const Json& ground_truth() const { return ground_truth_; }

  // Freezes the rubric. Every verified leaf must have a registered check.
  const rubric::RubricTree& finalize() {
    if (!tree_) {
      tree_ = builder_.finalize(root());
      for (auto i : tree_->leaves()) {
        const auto& n = tree_->node(i);
        if (n.kind == rubric::NodeKind::leaf_verified && !checks_.contains(n.id)) {
          throw StructureError("leaf '" + n.id + "' has no verification");
        }
      }
    }
    return *tree_;
  }

  // Runs the registered checks. With the short-circuit on, leaves blocked
  // at their turn are never sent to the model. With it off, every check
  // runs, up to `workers` at a time.
  rubric::LeafOutcomes evaluate(bool short_circuit, std::size_t workers = 1) {
    const auto& tree = finalize();
    if (short_circuit || workers <= 1) {
      return rubric::collect_outcomes(tree, short_circuit, [&](const rubric::RubricNode& n) { return check(n.id); });
    }
    std::vector<std::string> ids;
    for (auto i : tree.leaves()) {
      if (tree.node(i).kind == rubric::NodeKind::leaf_verified) ids.push_back(tree.node(i).id);
    }
    std::map<std::string, rubric::LeafOutcome> done;
    std::mutex mu;
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < ids.size();) {
        try {
          auto o = check(ids[i]);
          std::lock_guard lock(mu);
          done[ids[i]] = std::move(o);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          next = ids.size();
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(workers, ids.size()); ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return rubric::collect_outcomes(tree, false, [&](const rubric::RubricNode& n) { return done.at(n.id); });
  }

  std::map<std::string, LeafRecord> leaf_records() const {
    std::lock_guard lock(records_mu_);
    return records_;
  }

 private:
  static rubric::Criticality crit(bool critical) {
    return critical ? rubric::Criticality::critical : rubric::Criticality::non_critical;
  }

  NodeHandle internal(std::string id, std::string desc, NodeHandle parent, bool critical, rubric::Ordering o) {
    return builder_.build_node(parent, {std::move(id), std::move(desc), crit(critical), rubric::NodeKind::internal, o,
                                        std::nullopt});
  }

  rubric::LeafOutcome check(const std::string& id) {
    const auto& c = checks_.at(id);
    std::string label = "verify." + id;
    LeafRecord rec;
    if (c.sources) {
      rec.url_based = true;
      rec.sources = *c.sources;
      rec.outcome = service_.verify_by_url(ctx_, c.claim, *c.sources, evidence_, c.additional, label);
    } else {
      rec.outcome = service_.verify_simple(ctx_, c.claim, c.additional, label);
    }
    rubric::LeafOutcome out{rec.outcome.passed, rec.outcome.reasoning};
    if (out.reasoning.empty()) out.reasoning = rec.outcome.passed ? "pass" : "fail";
    std::lock_guard lock(records_mu_);
    records_[id] = std::move(rec);
    return out;
  }

  judgment::JudgeContext ctx_;
  judgment::JudgmentService& service_;
  cache::EvidenceProvider& evidence_;
  judgment::ToolVerifier* tools_;
  rubric::RubricBuilder builder_;
  std::optional<NodeHandle> root_;
  std::map<std::size_t, std::string> handles_;
  std::map<std::string, PendingCheck> checks_;
  std::optional<rubric::RubricTree> tree_;
  Json extractions_ = Json::object();
  Json ground_truth_ = Json::object();
  mutable std::mutex records_mu_;
  std::map<std::string, LeafRecord> records_;
};

}  // namespace treejudge::runner
