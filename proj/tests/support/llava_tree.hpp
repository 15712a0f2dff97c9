#pragma once

#include <string>

#include "treejudge/rubric/tree.hpp"

namespace treejudge::testing {

// Hand transcription of the LLaVA-commit judge's rubric: a sequential root
// over commit checks (themselves sequential) and five author subtrees.
// Precomputed leaves take the given existence flags.
struct LlavaTreeFlags {
  bool commit_id_exists = true;
  bool date_exists = true;
  bool authors_exist[5] = {true, true, true, true, true};
};

inline rubric::RubricTree llava_tree(const LlavaTreeFlags& flags = {}) {
  using namespace rubric;
  RubricBuilder b;
  auto internal = [&](std::optional<NodeHandle> parent, std::string id, Ordering o, Criticality c) {
    return b.build_node(parent, {std::move(id), "", c, NodeKind::internal, o, std::nullopt});
  };
  auto leaf = [&](NodeHandle parent, std::string id, Criticality c) {
    b.build_node(parent, {std::move(id), "", c, NodeKind::leaf_verified, std::nullopt, std::nullopt});
  };
  auto custom = [&](NodeHandle parent, std::string id, bool result) {
    b.build_node(parent, {std::move(id), "", Criticality::critical, NodeKind::leaf_precomputed, std::nullopt, result});
  };
  const auto C = Criticality::critical;
  const auto N = Criticality::non_critical;

  auto root = internal(std::nullopt, "root", Ordering::sequential, N);
  auto commit = internal(root, "commit_verification", Ordering::sequential, N);
  auto commit_id = internal(commit, "commit_id_verification", Ordering::parallel, N);
  custom(commit_id, "commit_id_exists", flags.commit_id_exists);
  leaf(commit_id, "commit_id_correctness", C);
  leaf(commit_id, "commit_provenance", C);
  custom(commit, "commit_date_exists", flags.date_exists);
  leaf(commit, "commit_date_correctness", C);
  auto authors = internal(root, "authors_verification", Ordering::parallel, N);
  for (int i = 1; i <= 5; ++i) {
    auto a = internal(authors, "author_" + std::to_string(i), Ordering::parallel, N);
    custom(a, "author_" + std::to_string(i) + "_exists", flags.authors_exist[i - 1]);
    leaf(a, "author_" + std::to_string(i) + "_name_match", C);
    leaf(a, "author_" + std::to_string(i) + "_profile_provided", N);
  }
  return b.finalize(root);
}

}  // namespace treejudge::testing
