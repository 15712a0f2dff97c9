#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "treejudge/core/error.hpp"
#include "treejudge/core/rational.hpp"
#include "treejudge/rubric/tree.hpp"

namespace treejudge::rubric {

enum class NodeStatus { evaluated, skipped_sequential, skipped_critical_block };

inline std::string_view to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::evaluated: return "evaluated";
    case NodeStatus::skipped_sequential: return "skipped-sequential";
    case NodeStatus::skipped_critical_block: return "skipped-critical-block";
  }
  return "?";
}

struct LeafOutcome {
  bool passed = false;
  std::string reasoning;
};

using LeafOutcomes = std::map<std::string, LeafOutcome, std::less<>>;

struct NodeResult {
  Rational score;
  NodeStatus status = NodeStatus::evaluated;
  std::string reasoning;

  friend bool operator==(const NodeResult&, const NodeResult&) = default;
};

// Per-node results of one evaluation run, in the tree's preorder.
class ScoredTree {
 public:
  ScoredTree() = default;

  void add(std::string id, NodeResult result) {
    index_.emplace(id, entries_.size());
    entries_.emplace_back(std::move(id), std::move(result));
  }

  const NodeResult& at(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) throw StructureError("no scored entry for '" + std::string(id) + "'");
    return entries_[it->second].second;
  }

  bool contains(std::string_view id) const { return index_.count(std::string(id)) > 0; }

  const Rational& root_score() const { return entries_.at(0).second.score; }
  const std::vector<std::pair<std::string, NodeResult>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  std::size_t count(NodeStatus status) const {
    std::size_t n = 0;
    for (const auto& e : entries_) n += e.second.status == status ? 1 : 0;
    return n;
  }

  // Every tree node has exactly one entry, leaves are binary, skipped
  // entries carry 0 and no reasoning.
  void validate_against(const RubricTree& tree) const {
    if (entries_.size() != tree.size()) {
      throw StructureError("scored tree has " + std::to_string(entries_.size()) +
                           " entries, rubric has " + std::to_string(tree.size()));
    }
    for (std::size_t i = 0; i < tree.size(); ++i) {
      const auto& node = tree.node(i);
      auto it = index_.find(node.id);
      if (it == index_.end()) throw StructureError("no scored entry for '" + node.id + "'");
      const auto& r = entries_[it->second].second;
      if (r.score < 0 || r.score > 1) throw StructureError("score out of range at '" + node.id + "'");
      if (node.is_leaf() && r.score != 0 && r.score != 1) {
        throw StructureError("non-binary leaf score at '" + node.id + "'");
      }
      if (r.status != NodeStatus::evaluated && (r.score != 0 || !r.reasoning.empty())) {
        throw StructureError("skipped node '" + node.id + "' carries a score or reasoning");
      }
      if (!node.is_leaf() && !r.reasoning.empty()) {
        throw StructureError("internal node '" + node.id + "' carries reasoning");
      }
    }
  }

  friend bool operator==(const ScoredTree& a, const ScoredTree& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<std::pair<std::string, NodeResult>> entries_;
  std::map<std::string, std::size_t> index_;
};

namespace detail {

// What is known about a node's score given a partial set of leaf outcomes.
enum class Bound { one, below_one, unknown };

struct Partial {
  std::optional<Rational> exact;
  Bound bound = Bound::unknown;
};

enum class Gate { open, closed, unknown };

struct PartialState {
  std::vector<Partial> own;        // score of the node on its own
  std::vector<Partial> effective;  // after sequential gating by the parent
  std::vector<bool> gated_out;     // preceded by a sibling known to be < 1 under a sequential parent
  std::vector<bool> gate_unknown;  // preceded by a sibling whose score is still unknown
};

inline Partial known(bool pass) {
  return pass ? Partial{Rational(1), Bound::one} : Partial{Rational(0), Bound::below_one};
}

// Bottom-up evaluation tolerant of missing leaves. With exact=false only the
// bounds are tracked, which is all the short-circuit check needs.
template <typename Lookup>
PartialState evaluate_partial(const RubricTree& tree, Lookup&& lookup, bool exact) {
  const std::size_t n = tree.size();
  PartialState st{std::vector<Partial>(n), std::vector<Partial>(n), std::vector<bool>(n, false),
                  std::vector<bool>(n, false)};
  // Preorder storage means children always follow their parent.
  for (std::size_t ii = n; ii-- > 0;) {
    const auto& node = tree.node(ii);
    if (node.kind == NodeKind::leaf_precomputed) {
      st.own[ii] = known(*node.precomputed_result);
      continue;
    }
    if (node.kind == NodeKind::leaf_verified) {
      auto outcome = lookup(node.id);
      st.own[ii] = outcome ? known(*outcome) : Partial{};
      continue;
    }

    Gate gate = Gate::open;
    bool any_critical_below = false;
    bool any_below = false;
    bool all_one = true;
    bool all_exact = true;
    Rational sum = 0;
    std::size_t non_critical = 0;
    for (std::size_t c : node.children) {
      Partial eff;
      if (node.is_sequential() && gate == Gate::closed) {
        st.gated_out[c] = true;
        eff = known(false);
      } else if (node.is_sequential() && gate == Gate::unknown) {
        st.gate_unknown[c] = true;
        const auto& own = st.own[c];
        eff.bound = own.bound == Bound::below_one ? Bound::below_one : Bound::unknown;
        if (own.exact && *own.exact == 0) eff.exact = Rational(0);
      } else {
        eff = st.own[c];
      }
      st.effective[c] = eff;

      if (node.is_sequential()) {
        if (eff.bound == Bound::below_one) {
          gate = Gate::closed;
        } else if (eff.bound == Bound::unknown && gate == Gate::open) {
          gate = Gate::unknown;
        }
      }

      const bool critical = tree.node(c).is_critical();
      if (eff.bound == Bound::below_one) {
        any_below = true;
        if (critical) any_critical_below = true;
      }
      if (eff.bound != Bound::one) all_one = false;
      if (!eff.exact) all_exact = false;
      if (!critical) {
        ++non_critical;
        if (exact && eff.exact) sum += *eff.exact;
      }
    }

    Partial& out = st.own[ii];
    if (any_critical_below) {
      out = known(false);
    } else {
      out.bound = any_below ? Bound::below_one : (all_one ? Bound::one : Bound::unknown);
      if (exact && all_exact) {
        out.exact = non_critical > 0 ? Rational(sum / Rational(non_critical)) : Rational(1);
      } else if (!exact && out.bound == Bound::one) {
        out.exact = Rational(1);
      }
    }
  }
  st.effective[0] = st.own[0];
  return st;
}

}  // namespace detail

// Gate-then-average aggregation with sequential skipping.
//
// Under a sequential parent, a child whose preceding sibling scored below 1
// is skipped (score 0) together with its subtree. A leaf may lack an outcome
// only when its evaluation cannot affect the result because a critical
// sibling of it or of an ancestor already scored below 1; those subtrees are
// reported as skipped-critical-block.
inline ScoredTree aggregate_scores(const RubricTree& tree, const LeafOutcomes& outcomes) {
  auto lookup = [&](const std::string& id) -> std::optional<bool> {
    auto it = outcomes.find(id);
    if (it == outcomes.end()) return std::nullopt;
    return it->second.passed;
  };
  auto st = detail::evaluate_partial(tree, lookup, /*exact=*/true);

  const std::size_t n = tree.size();
  std::vector<std::optional<NodeStatus>> forced(n);
  ScoredTree out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = tree.node(i);
    if (!forced[i] && node.parent) {
      if (st.gated_out[i]) {
        forced[i] = NodeStatus::skipped_sequential;
      } else if (st.gate_unknown[i] || !st.effective[i].exact) {
        forced[i] = NodeStatus::skipped_critical_block;
      }
    }
    if (forced[i]) {
      for (std::size_t c : node.children) forced[c] = forced[i];
      out.add(node.id, NodeResult{Rational(0), *forced[i], {}});
      continue;
    }
    if (!st.own[i].exact) {
      // Find the first leaf whose absence leaves this node undetermined.
      for (std::size_t j = i; j < tree.subtree_end(i); ++j) {
        const auto& leaf = tree.node(j);
        if (leaf.kind == NodeKind::leaf_verified && !outcomes.count(leaf.id)) {
          throw StructureError("missing outcome for required leaf '" + leaf.id + "'");
        }
      }
      throw StructureError("score of '" + node.id + "' is undetermined");
    }
    std::string reasoning;
    if (node.kind == NodeKind::leaf_verified) {
      reasoning = outcomes.find(node.id)->second.reasoning;
    } else if (node.kind == NodeKind::leaf_precomputed) {
      reasoning = *node.precomputed_result ? "precomputed: pass" : "precomputed: fail";
    }
    out.add(node.id, NodeResult{*st.own[i].exact, NodeStatus::evaluated, std::move(reasoning)});
  }
  return out;
}

}  // namespace treejudge::rubric
