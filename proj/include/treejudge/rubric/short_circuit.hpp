#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "treejudge/rubric/scoring.hpp"

namespace treejudge::rubric {

namespace detail {

// Marks every node whose evaluation is irrelevant or forbidden given the
// outcomes known so far. Indexed like the tree.
inline std::vector<bool> blocked_mask(const RubricTree& tree, const LeafOutcomes& partial) {
  for (const auto& [id, _] : partial) {
    if (!tree.find(id)) throw StructureError("outcome for unknown node '" + id + "'");
  }
  auto lookup = [&](const std::string& id) -> std::optional<bool> {
    auto it = partial.find(id);
    if (it == partial.end()) return std::nullopt;
    return it->second.passed;
  };
  auto st = evaluate_partial(tree, lookup, /*exact=*/false);

  std::vector<bool> blocked(tree.size(), false);
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& node = tree.node(i);
    if (node.is_leaf()) continue;
    if (blocked[i]) {
      for (std::size_t c : node.children) blocked[c] = true;
      continue;
    }
    // A critical sibling known to score below 1 gates the parent to 0.
    // Siblings skipped by sequencing do not count as having been scored.
    std::size_t failed_critical = 0;
    for (std::size_t c : node.children) {
      if (tree.node(c).is_critical() && !st.gated_out[c] &&
          st.effective[c].bound == Bound::below_one) {
        ++failed_critical;
      }
    }
    for (std::size_t c : node.children) {
      bool self_counted = tree.node(c).is_critical() && !st.gated_out[c] &&
                          st.effective[c].bound == Bound::below_one;
      if (st.gated_out[c] || failed_critical > (self_counted ? 1u : 0u)) blocked[c] = true;
    }
  }
  return blocked;
}

}  // namespace detail

// Ids whose evaluation is provably irrelevant or forbidden given the leaf
// outcomes known so far: nodes with a critical sibling already known to
// score below 1, and nodes after a sub-1 sibling under a sequential parent,
// each with its whole subtree.
inline std::set<std::string> blocked_nodes(const RubricTree& tree, const LeafOutcomes& partial) {
  auto mask = detail::blocked_mask(tree, partial);
  std::set<std::string> out;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (mask[i]) out.insert(tree.node(i).id);
  }
  return out;
}

// Visits verified leaves in declaration order and asks `verify` for each
// outcome. With short_circuit on, leaves blocked at their turn are never
// passed to `verify`.
template <typename Verify>
LeafOutcomes collect_outcomes(const RubricTree& tree, bool short_circuit, Verify&& verify) {
  LeafOutcomes outcomes;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& node = tree.node(i);
    if (node.kind != NodeKind::leaf_verified) continue;
    if (short_circuit && detail::blocked_mask(tree, outcomes)[i]) continue;
    LeafOutcome outcome = verify(node);
    outcomes.emplace(node.id, std::move(outcome));
  }
  return outcomes;
}

}  // namespace treejudge::rubric
