#pragma once

#include <random>
#include <string>
#include <vector>

#include "treejudge/rubric/scoring.hpp"
#include "treejudge/rubric/tree.hpp"

namespace treejudge::testing {

struct RandomTreeLimits {
  std::size_t max_depth = 6;    // nodes on the longest root-to-leaf path
  std::size_t max_nodes = 603;
};

// Random rubric respecting the given depth and size bounds. Mixes both
// orderings, both criticalities and precomputed leaves.
inline rubric::RubricTree random_tree(std::mt19937_64& rng, RandomTreeLimits limits = {}) {
  using namespace rubric;
  std::uniform_int_distribution<std::size_t> size_dist(2, limits.max_nodes);
  std::bernoulli_distribution coin(0.5);
  std::bernoulli_distribution critical(0.35);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::size_t target = size_dist(rng);

  RubricBuilder b;
  std::vector<std::pair<NodeHandle, std::size_t>> internals;  // handle, depth
  std::size_t next_id = 0;
  auto fresh_id = [&] { return "n" + std::to_string(next_id++); };

  auto make_leaf = [&](NodeHandle parent) {
    NodeSpec s;
    s.id = fresh_id();
    s.criticality = critical(rng) ? Criticality::critical : Criticality::non_critical;
    if (unit(rng) < 0.15) {
      s.kind = NodeKind::leaf_precomputed;
      s.precomputed_result = unit(rng) < 0.8;
    } else {
      s.kind = NodeKind::leaf_verified;
    }
    s.description = "leaf " + s.id;
    b.build_node(parent, s);
  };
  auto make_internal = [&](std::optional<NodeHandle> parent, std::size_t depth) {
    NodeSpec s;
    s.id = fresh_id();
    s.kind = NodeKind::internal;
    s.ordering = coin(rng) ? Ordering::parallel : Ordering::sequential;
    s.criticality = critical(rng) ? Criticality::critical : Criticality::non_critical;
    s.description = "group " + s.id;
    auto h = b.build_node(parent, s);
    internals.emplace_back(h, depth);
    make_leaf(h);
    return h;
  };

  auto root = make_internal(std::nullopt, 1);
  while (b.size() < target) {
    auto [parent, depth] = internals[std::uniform_int_distribution<std::size_t>(0, internals.size() - 1)(rng)];
    bool room_for_internal = depth + 1 < limits.max_depth && b.size() + 2 <= target;
    if (room_for_internal && unit(rng) < 0.3) {
      make_internal(parent, depth + 1);
    } else {
      make_leaf(parent);
    }
  }
  return b.finalize(root);
}

inline rubric::LeafOutcomes random_outcomes(std::mt19937_64& rng, const rubric::RubricTree& tree,
                                            double pass_rate = 0.8) {
  std::bernoulli_distribution pass(pass_rate);
  rubric::LeafOutcomes out;
  for (const auto& n : tree.nodes()) {
    if (n.kind == rubric::NodeKind::leaf_verified) {
      bool p = pass(rng);
      out[n.id] = {p, p ? "ok" : "no"};
    }
  }
  return out;
}

}  // namespace treejudge::testing
