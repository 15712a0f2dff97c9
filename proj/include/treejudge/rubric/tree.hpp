#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "treejudge/core/error.hpp"

namespace treejudge::rubric {

enum class Criticality { critical, non_critical };
enum class NodeKind { leaf_verified, leaf_precomputed, internal };
enum class Ordering { parallel, sequential };

inline std::string_view to_string(Criticality c) {
  return c == Criticality::critical ? "critical" : "non-critical";
}

inline std::string_view to_string(NodeKind k) {
  switch (k) {
    case NodeKind::leaf_verified: return "leaf-verified";
    case NodeKind::leaf_precomputed: return "leaf-precomputed";
    case NodeKind::internal: return "internal";
  }
  return "?";
}

inline std::string_view to_string(Ordering o) {
  return o == Ordering::parallel ? "parallel" : "sequential";
}

// What a caller declares for one node.
struct NodeSpec {
  std::string id;
  std::string description;
  Criticality criticality = Criticality::non_critical;
  NodeKind kind = NodeKind::leaf_verified;
  std::optional<Ordering> ordering;
  std::optional<bool> precomputed_result;
};

// One criterion of a finalized tree. Children are indices into the owning
// RubricTree, in declaration order.
struct RubricNode {
  std::string id;
  std::string description;
  Criticality criticality = Criticality::non_critical;
  NodeKind kind = NodeKind::leaf_verified;
  std::optional<Ordering> ordering;
  std::optional<bool> precomputed_result;
  std::vector<std::size_t> children;
  std::optional<std::size_t> parent;

  bool is_leaf() const { return kind != NodeKind::internal; }
  bool is_critical() const { return criticality == Criticality::critical; }
  bool is_sequential() const { return ordering == Ordering::sequential; }

  friend bool operator==(const RubricNode&, const RubricNode&) = default;
};

// Validated, immutable rubric. Nodes are stored in preorder with the root
// at index 0. Safe to share across threads.
class RubricTree {
 public:
  const RubricNode& root() const { return nodes_.front(); }
  const RubricNode& node(std::size_t index) const { return nodes_.at(index); }
  std::span<const RubricNode> nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }

  std::optional<std::size_t> find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  const RubricNode& at(std::string_view id) const {
    auto idx = find(id);
    if (!idx) throw StructureError("no node with id '" + std::string(id) + "'");
    return nodes_[*idx];
  }

  std::vector<std::size_t> leaves() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].is_leaf()) out.push_back(i);
    }
    return out;
  }

  // Number of nodes on the longest root-to-leaf path.
  std::size_t depth() const {
    std::vector<std::size_t> level(nodes_.size(), 1);
    std::size_t best = 1;
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
      level[i] = level[*nodes_[i].parent] + 1;
      best = std::max(best, level[i]);
    }
    return best;
  }

  // Index one past the last node of the subtree rooted at `index`.
  std::size_t subtree_end(std::size_t index) const {
    std::size_t end = index + 1;
    while (end < nodes_.size() && is_ancestor(index, end)) ++end;
    return end;
  }

  bool is_ancestor(std::size_t ancestor, std::size_t index) const {
    auto p = nodes_[index].parent;
    while (p) {
      if (*p == ancestor) return true;
      p = nodes_[*p].parent;
    }
    return false;
  }

  friend bool operator==(const RubricTree& a, const RubricTree& b) { return a.nodes_ == b.nodes_; }

 private:
  friend class RubricBuilder;
  std::vector<RubricNode> nodes_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Opaque reference to a node under construction. Only valid with the
// builder that issued it.
struct NodeHandle {
  std::size_t index = 0;
  std::uint64_t owner = 0;
};

class RubricBuilder {
 public:
  RubricBuilder() : tag_(next_tag()) {}

  NodeHandle build_node(std::optional<NodeHandle> parent, NodeSpec spec) {
    if (spec.id.empty()) throw StructureError("node id must not be empty");
    if (index_.count(spec.id)) throw StructureError("duplicate node id '" + spec.id + "'");
    if (spec.kind == NodeKind::internal) {
      if (!spec.ordering) throw StructureError("internal node '" + spec.id + "' needs an ordering");
    } else if (spec.ordering) {
      throw StructureError("leaf '" + spec.id + "' cannot carry an ordering");
    }
    if (spec.kind == NodeKind::leaf_precomputed && !spec.precomputed_result) {
      throw StructureError("precomputed leaf '" + spec.id + "' has no result");
    }
    if (spec.kind != NodeKind::leaf_precomputed && spec.precomputed_result) {
      throw StructureError("node '" + spec.id + "' is not precomputed but carries a result");
    }

    Pending node;
    node.node.id = spec.id;
    node.node.description = std::move(spec.description);
    node.node.criticality = spec.criticality;
    node.node.kind = spec.kind;
    node.node.ordering = spec.ordering;
    node.node.precomputed_result = spec.precomputed_result;

    if (parent) {
      check_handle(*parent);
      auto& p = pending_[parent->index];
      if (p.node.kind != NodeKind::internal) {
        throw StructureError("cannot attach '" + spec.id + "' under leaf '" + p.node.id + "'");
      }
      node.node.parent = parent->index;
    } else {
      if (root_) throw StructureError("tree already has root '" + pending_[*root_].node.id + "'");
      root_ = pending_.size();
    }

    std::size_t index = pending_.size();
    if (parent) pending_[parent->index].node.children.push_back(index);
    index_.emplace(node.node.id, index);
    pending_.push_back(std::move(node));
    return NodeHandle{index, tag_};
  }

  const RubricNode& peek(NodeHandle h) const {
    check_handle(h);
    return pending_[h.index].node;
  }

  std::size_t size() const { return pending_.size(); }

  // Validates every structural invariant and returns a frozen copy,
  // renumbered into preorder.
  RubricTree finalize(NodeHandle root) const {
    check_handle(root);
    if (pending_[root.index].node.parent) {
      throw StructureError("'" + pending_[root.index].node.id + "' is not the root");
    }
    RubricTree tree;
    tree.nodes_.reserve(pending_.size());
    std::vector<std::pair<std::size_t, std::optional<std::size_t>>> stack{{root.index, std::nullopt}};
    while (!stack.empty()) {
      auto [src, parent] = stack.back();
      stack.pop_back();
      const auto& p = pending_[src].node;
      if (p.kind == NodeKind::internal && p.children.empty()) {
        throw StructureError("internal node '" + p.id + "' has no children");
      }
      std::size_t dst = tree.nodes_.size();
      RubricNode copy = p;
      copy.children.clear();
      copy.parent = parent;
      if (!tree.index_.emplace(copy.id, dst).second) {
        throw StructureError("duplicate node id '" + copy.id + "'");
      }
      tree.nodes_.push_back(std::move(copy));
      if (parent) tree.nodes_[*parent].children.push_back(dst);
      for (auto it = p.children.rbegin(); it != p.children.rend(); ++it) {
        stack.emplace_back(*it, dst);
      }
    }
    if (tree.nodes_.size() != pending_.size()) {
      throw StructureError("builder holds nodes unreachable from root '" + tree.nodes_[0].id + "'");
    }
    return tree;
  }

 private:
  struct Pending {
    RubricNode node;
  };

  static std::uint64_t next_tag() {
    static std::atomic<std::uint64_t> counter{1};
    return counter++;
  }

  void check_handle(NodeHandle h) const {
    if (h.owner != tag_ || h.index >= pending_.size()) {
      throw StructureError("dangling node handle");
    }
  }

  std::uint64_t tag_;
  std::vector<Pending> pending_;
  std::unordered_map<std::string, std::size_t> index_;
  std::optional<std::size_t> root_;
};

}  // namespace treejudge::rubric
