#pragma once

#include <string>
#include <vector>

#include "treejudge/runner/registry.hpp"

namespace treejudge::runner::judges {

// Judge for the "first LLaVA commit in transformers" task: commit id, date
// and provenance are checked first, and the five author slots only if the
// commit checks all pass.
namespace llava {

inline constexpr const char* kTaskId = "find_llava_commit";

inline const std::string kTaskDescription = R"(
Identify the first commit on the main branch of the official Hugging Face transformers repository that added support for the LLaVA model.
Please provide the following details about this commit: the short commit ID (first 7 characters), the date of the commit, a list of all contributors/authors involved in this commit. For each author, include a link to their GitHub profile page and the full real name displayed on their GitHub profile page.
)";

inline const std::string kCommitId = "44b5506";
inline const std::string kDate = "Dec 7, 2023";
inline const std::vector<std::string> kAuthors = {"Younes B", "Arthur", "Shauray Singh", "Lysandre Debut", "Haotian Liu"};

inline const std::string kCommitInstruction = R"(
    Extract the basic commit information for the LLaVA model support from the answer.

    Look for:
    - commit_id: The short commit ID (typically 7 characters)
    - date: The date when the commit was made
    - source_urls: Any URLs that contain or reference this commit information (e.g., GitHub commit URLs, repository links)

    Extract the information exactly as it appears in the text.
    If any field is not mentioned, set it to null or empty list.
    )";

inline const std::string kAuthorsInstruction = R"(
    Extract all author information mentioned in the answer related to the LLaVA commit.

    For each author, extract:
    - name: The author's name as mentioned in the answer
    - profile_url: Their GitHub profile page URL if provided
    - real_name_from_profile: Their real name as stated to appear on their profile page

    Extract information exactly as it appears in the text.
    If any field is not mentioned for an author, set it to null.
    Include all authors mentioned, even if some information is incomplete.
    )";

inline judgment::ExtractionSchema commit_schema() {
  using judgment::FieldSpec;
  return {"CommitInfo",
          {FieldSpec::text("commit_id", "Short commit ID (7 characters)"), FieldSpec::text("date", "Date of the commit"),
           FieldSpec::list("source_urls", FieldSpec::url("url"), "Source URLs for commit verification")}};
}

inline judgment::ExtractionSchema authors_schema() {
  using judgment::FieldSpec;
  return {"AuthorsInfo",
          {FieldSpec::list("authors",
                           FieldSpec::record("author", {FieldSpec::text("name", "Author name as provided in the answer"),
                                                        FieldSpec::url("profile_url", "GitHub profile page URL"),
                                                        FieldSpec::text("real_name_from_profile",
                                                                        "Real name extracted from profile page")}),
                           "List of authors with their profile info")}};
}

inline std::string str_or(const Json& v, const std::string& fallback) {
  return v.is_string() ? v.get<std::string>() : fallback;
}

inline bool present(const Json& v) {
  return v.is_string() && v.get<std::string>().find_first_not_of(" \t\r\n") != std::string::npos;
}

inline std::vector<std::string> string_list(const Json& v) {
  std::vector<std::string> out;
  if (v.is_array()) {
    for (const auto& s : v) {
      if (s.is_string()) out.push_back(s.get<std::string>());
    }
  }
  return out;
}

inline void verify_commit(JudgeSession& s, NodeHandle parent, const Json& info) {
  auto commit = s.add_sequential("commit_verification", "Verify commit ID, date, and provenance in sequence", parent);
  auto urls = string_list(info["source_urls"]);

  auto id_node = s.add_parallel("commit_id_verification", "Verify commit ID existence, correctness and provenance", commit);
  s.add_custom_node(present(info["commit_id"]) && !urls.empty(), "commit_id_exists", "Commit ID is provided in the answer",
                    id_node, true);
  auto correctness = s.add_leaf("commit_id_correctness", "Commit ID matches the expected value (" + kCommitId + ")", id_node, true);
  s.verify(correctness,
           "This ID (a github commit id) '" + str_or(info["commit_id"], "N/A") + "' matches this ID '" + kCommitId + "'",
           std::nullopt,
           "Allow minor formatting differences or extra descriptions but the core 7-character commit ID should exist and "
           "match exactly. Expected: " + kCommitId + ".");
  auto provenance = s.add_leaf("commit_provenance", "Commit information is supported by provided source URLs", id_node, true);
  s.verify(provenance,
           "This page shows or mentioned the github commit ID: '" + str_or(info["commit_id"], "None") +
               "'. For example, if this is exactly the commit page",
           urls);

  s.add_custom_node(present(info["date"]), "commit_date_exists", "Commit date is provided in the answer", commit, true);
  auto date = s.add_leaf("commit_date_correctness", "Commit date matches the expected value (" + kDate + ")", commit, true);
  std::optional<std::vector<std::string>> date_sources;
  if (!urls.empty()) date_sources = urls;
  s.verify(date,
           "The provided commit date '" + str_or(info["date"], "N/A") + "' matches the expected date '" + kDate + "'",
           date_sources,
           "Allow reasonable date format variations (e.g., 'Dec 7, 2023', 'December 7, 2023', '2023-12-07') but the "
           "core date should match. Expected: " + kDate + ".");
}

inline void verify_authors(JudgeSession& s, NodeHandle parent, const Json& info) {
  auto authors_node = s.add_parallel("authors_verification", "Verify all authors information in parallel", parent);
  std::vector<Json> authors;
  if (info["authors"].is_array()) {
    for (const auto& a : info["authors"]) {
      if (authors.size() == 5) break;
      authors.push_back(a.is_object() ? a : Json::object());
    }
  }
  while (authors.size() < 5) authors.push_back(Json::object());

  std::string expected;
  for (const auto& a : kAuthors) expected += (expected.empty() ? "" : ", ") + a;
  for (std::size_t i = 0; i < authors.size(); ++i) {
    const auto& a = authors[i];
    auto n = std::to_string(i + 1);
    Json name = a.value("name", Json(nullptr));
    Json real = a.value("real_name_from_profile", Json(nullptr));
    Json url = a.value("profile_url", Json(nullptr));

    auto node = s.add_parallel("author_" + n, "Author " + n + " information verification", authors_node);
    s.add_custom_node(present(name), "author_" + n + "_exists", "Author " + n + " name is provided", node, true);
    auto match = s.add_leaf("author_" + n + "_name_match", "Author " + n + " name matches one of the expected contributors",
                            node, true);
    std::string shown = present(real) ? real.get<std::string>() : str_or(name, "N/A");
    if (shown.empty()) shown = "N/A";
    s.verify(match, "The name '" + shown + "' matches one of the names in the following list: " + expected, std::nullopt,
             "Allow variations like 'Arthur' matching 'Arthur Zucker', or reasonable name format differences. Expected "
             "authors: Younes B, Arthur (or Arthur Zucker), Shauray Singh, Lysandre Debut, Haotian Liu.");
    auto profile = s.add_leaf("author_" + n + "_profile_provided", "Author " + n + " GitHub profile page URL is provided",
                              node, false);
    s.verify_with_url(profile, "This is a GitHub profile page for '" + str_or(name, "N/A") + "'", url);
  }
}

inline JudgeDefinition definition() {
  return {kTaskId, kTaskDescription, [](JudgeSession& s) {
            auto root = s.initialize(rubric::Ordering::sequential);
            s.add_ground_truth({{"commit_id", kCommitId}, {"date", kDate}, {"expected_authors", kAuthors}},
                               "expected_commit_and_authors_info");
            auto commit = s.extract(kCommitInstruction, commit_schema(), "commit_extraction");
            auto authors = s.extract(kAuthorsInstruction, authors_schema(), "authors_extraction");
            verify_commit(s, root, commit);
            verify_authors(s, root, authors);
          }};
}

}  // namespace llava

inline void register_builtin(JudgeRegistry& registry) { registry.add(llava::definition()); }

}  // namespace treejudge::runner::judges
