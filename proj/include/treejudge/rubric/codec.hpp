#pragma once

#include <string>

#include "treejudge/core/document.hpp"
#include "treejudge/core/rational.hpp"
#include "treejudge/rubric/scoring.hpp"
#include "treejudge/rubric/tree.hpp"

namespace treejudge::rubric {

inline constexpr const char* kRubricSchema = "treejudge.rubric/1";
inline constexpr const char* kScoredSchema = "treejudge.scored-tree/1";

namespace detail {

inline Json node_to_json(const RubricTree& tree, std::size_t index) {
  const auto& n = tree.node(index);
  Json j;
  j["id"] = n.id;
  j["description"] = n.description;
  j["criticality"] = std::string(to_string(n.criticality));
  j["kind"] = std::string(to_string(n.kind));
  if (n.ordering) j["ordering"] = std::string(to_string(*n.ordering));
  if (n.precomputed_result) j["result"] = *n.precomputed_result;
  if (n.kind == NodeKind::internal) {
    Json children = Json::array();
    for (auto c : n.children) children.push_back(node_to_json(tree, c));
    j["children"] = std::move(children);
  }
  return j;
}

inline Criticality parse_criticality(const std::string& s) {
  if (s == "critical") return Criticality::critical;
  if (s == "non-critical") return Criticality::non_critical;
  throw DocumentError("unknown criticality '" + s + "'");
}

inline NodeKind parse_kind(const std::string& s) {
  if (s == "leaf-verified") return NodeKind::leaf_verified;
  if (s == "leaf-precomputed") return NodeKind::leaf_precomputed;
  if (s == "internal") return NodeKind::internal;
  throw DocumentError("unknown node kind '" + s + "'");
}

inline Ordering parse_ordering(const std::string& s) {
  if (s == "parallel") return Ordering::parallel;
  if (s == "sequential") return Ordering::sequential;
  throw DocumentError("unknown ordering '" + s + "'");
}

inline NodeStatus parse_status(const std::string& s) {
  if (s == "evaluated") return NodeStatus::evaluated;
  if (s == "skipped-sequential") return NodeStatus::skipped_sequential;
  if (s == "skipped-critical-block") return NodeStatus::skipped_critical_block;
  throw DocumentError("unknown node status '" + s + "'");
}

inline NodeHandle node_from_json(RubricBuilder& builder, std::optional<NodeHandle> parent, const Json& j) {
  if (!j.is_object()) throw DocumentError("node must be an object");
  NodeSpec spec;
  spec.id = require_string(j, "id");
  spec.description = require_string(j, "description");
  spec.criticality = parse_criticality(require_string(j, "criticality"));
  spec.kind = parse_kind(require_string(j, "kind"));
  if (j.contains("ordering")) spec.ordering = parse_ordering(require_string(j, "ordering"));
  if (j.contains("result")) {
    if (!j["result"].is_boolean()) throw DocumentError("node result must be a boolean");
    spec.precomputed_result = j["result"].get<bool>();
  }
  NodeHandle h;
  try {
    h = builder.build_node(parent, spec);
  } catch (const StructureError& e) {
    throw DocumentError(e.what());
  }
  if (spec.kind == NodeKind::internal) {
    const auto& children = require_field(j, "children");
    if (!children.is_array()) throw DocumentError("children of '" + spec.id + "' must be an array");
    for (const auto& c : children) node_from_json(builder, h, c);
  } else if (j.contains("children")) {
    throw DocumentError("leaf '" + spec.id + "' has children");
  }
  return h;
}

}  // namespace detail

inline Json encode_tree(const RubricTree& tree) {
  Json doc;
  doc["schema"] = kRubricSchema;
  doc["root"] = detail::node_to_json(tree, 0);
  return doc;
}

inline RubricTree decode_tree(const Json& doc) {
  require_schema(doc, kRubricSchema);
  RubricBuilder builder;
  auto root = detail::node_from_json(builder, std::nullopt, require_field(doc, "root"));
  try {
    return builder.finalize(root);
  } catch (const StructureError& e) {
    throw DocumentError(e.what());
  }
}

// Scores are kept exact ("1/3"); "score_decimal" is a 4-place rendering
// for readers and is ignored when decoding.
inline Json encode_scored(const ScoredTree& scored) {
  Json nodes = Json::array();
  for (const auto& [id, r] : scored.entries()) {
    Json j;
    j["id"] = id;
    j["score"] = to_exact_string(r.score);
    j["score_decimal"] = to_decimal(r.score, 4);
    j["status"] = std::string(to_string(r.status));
    j["reasoning"] = r.reasoning;
    nodes.push_back(std::move(j));
  }
  Json doc;
  doc["schema"] = kScoredSchema;
  doc["nodes"] = std::move(nodes);
  return doc;
}

inline ScoredTree decode_scored(const Json& doc) {
  require_schema(doc, kScoredSchema);
  const auto& nodes = require_field(doc, "nodes");
  if (!nodes.is_array() || nodes.empty()) throw DocumentError("scored tree needs a non-empty node list");
  ScoredTree out;
  for (const auto& j : nodes) {
    auto id = require_string(j, "id");
    if (out.contains(id)) throw DocumentError("duplicate scored entry '" + id + "'");
    NodeResult r;
    r.score = parse_rational(require_string(j, "score"));
    r.status = detail::parse_status(require_string(j, "status"));
    r.reasoning = require_string(j, "reasoning");
    out.add(std::move(id), std::move(r));
  }
  return out;
}

}  // namespace treejudge::rubric
