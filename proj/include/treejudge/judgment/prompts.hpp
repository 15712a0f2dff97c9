#pragma once

#include <map>
#include <string>
#include <string_view>

#include "treejudge/core/error.hpp"

namespace treejudge::judgment {

inline constexpr std::string_view kExtractorTemplate =
    R"(You are responsible for extracting specific information of interest from the provided answer text for a task. For context, we are evaluating the correctness of an answer to a web information-gathering task. This extraction step helps us identify relevant information for subsequent validation. You must carefully follow the provided extraction instructions to accurately extract information from the answer.

GENERAL RULES:

1. Do not add, omit, or invent any information. Extract only information explicitly mentioned in the provided answer exactly as it appears.

2. If any required information is missing from the answer, explicitly return null as the JSON value.

3. You will also receive the original task description as context. Understand it clearly, as it provides essential background for the extraction. You may apply common-sense reasoning to assist your extraction, but your final result must be accurately extracted from the answer text provided.

4. Occasionally, additional instructions might be provided to aid your extraction. Carefully follow those instructions when available.

SPECIAL RULES FOR URL EXTRACTION:

These rules apply only when URL fields are required in the extraction.

1. Extract only URLs explicitly present in the answer text. Do not create or infer any URLs.

2. Extract only valid URLs. Ignore obviously invalid or malformed URLs.

3. If a URL is missing a protocol (http:// or https://), prepend http://.

Instruction for Extraction:
{extraction_prompt}

Original Task Description:
{task_description}

Complete Answer to the Task:
{answer}

Additional Instructions (if any):
{additional_instruction}
)";

inline constexpr std::string_view kSimpleVerifierTemplate =
    R"(You are responsible for verifying whether a given claim or simple statement is correct and accurate. Typically, this verification involves straightforward factual judgments or logical checks (e.g., "1+1=2", or verifying if a given name matches exactly another given name). For context, we are evaluating the correctness of an answer to a web information-gathering task. This verification step helps us determine part of the answer’s accuracy. Your task is to provide a binary judgment ("Correct" or "Incorrect") along with clear and detailed reasoning supporting your decision.

To assist your judgment, you will receive:
- The original task description (as context).
- The complete answer to the task (as context).
- Additional instructions (occasionally provided to guide your verification).

GENERAL RULES:

1. Carefully examine the provided claim or statement. Use logic, basic factual knowledge, or simple reasoning to determine its accuracy.

2. Clearly understand the provided task description and complete answer, as they offer important context and may influence your decision.

3. Your reasoning must be explicit, concise, and directly support your binary judgment.

4. Carefully follow any additional instructions provided. If none are provided, you may ignore this.

Original Task Description:
{task_description}

Complete Answer to the Task:
{answer}

Additional Instructions (if any):
{additional_instruction}

Claim or Statement to Verify:
{claim}
)";

inline constexpr std::string_view kUrlVerifierTemplate =
    R"(You are responsible for verifying whether a given claim or "fact" is fully supported by the actual content of a specified webpage (or a PDF file from a PDF webpage). For context, we are examining the correctness of an answer to a web information-gathering task. Typically, the claim or "fact" is extracted directly from the answer, and the webpage provided is the URL source referenced in the answer. This verification step helps us determine whether the claim or "fact" in the answer is accurate or hallucinated, a common issue in LLM-based systems. You will receive both the text content and a screenshot of the webpage for examination. Your task is to provide a binary judgment (i.e., supported or not supported) along with clear and detailed reasoning for your decision.

GENERAL RULES:

1. The provided webpage content may be lengthy. Carefully examine the relevant sections of both the webpage text and the screenshot. Determine clearly whether the claim or "fact" exactly matches or is explicitly supported by the webpage content. If the information appears to be not able to find from the text, but more likely from the screenshot, please check the screenshot carefully.

2. You will also receive the original task description and the complete answer as context. Understand them clearly, as they provide essential background for evaluating the claim. You may apply common-sense reasoning (e.g., fuzzy matching for names differing only in letter casing or minor spelling variations) to assist your judgment, but your final decision must primarily rely on explicit evidence from the webpage content provided.

3. If the provided webpage (the URL source mentioned in the answer) is entirely irrelevant, invalid, or inaccessible, you must conclude that the claim or "fact" is not supported.

4. Occasionally, additional instructions might be provided to aid your judgment. Carefully follow those instructions when available.

Original Task Description:
{task_description}

Complete Answer to the Task:
{answer}

Claim or Fact to Verify:
{claim}

Additional Instructions (if any):
{additional_instruction}

Webpage URL:
{url}

Extracted Webpage Text (truncated if too long):
{web_text}

Rendered Screenshots (to provide non-textual context):
{screenshots}
)";

// Fills {name} placeholders in one left-to-right pass, so braces inside the
// substituted values are never re-expanded. Unknown placeholders are an
// error; braces not forming a known name pass through.
inline std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string, std::less<>>& values) {
  std::string out;
  out.reserve(tmpl.size() + 1024);
  std::size_t i = 0;
  std::size_t used = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        auto name = tmpl.substr(i + 1, close - i - 1);
        if (auto it = values.find(name); it != values.end()) {
          out += it->second;
          ++used;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tmpl[i++]);
  }
  if (used < values.size()) throw Error("template is missing a placeholder for a supplied value");
  return out;
}

inline constexpr std::string_view kNoAdditional = "None";

inline std::string or_none(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos ? std::string(kNoAdditional) : s;
}

inline std::string render_extractor_prompt(const std::string& extraction_prompt, const std::string& task_description,
                                           const std::string& answer, const std::string& additional) {
  return fill_template(kExtractorTemplate, {{"extraction_prompt", extraction_prompt},
                                            {"task_description", task_description},
                                            {"answer", answer},
                                            {"additional_instruction", or_none(additional)}});
}

inline std::string render_simple_verifier_prompt(const std::string& task_description, const std::string& answer,
                                                 const std::string& additional, const std::string& claim) {
  return fill_template(kSimpleVerifierTemplate, {{"task_description", task_description},
                                                 {"answer", answer},
                                                 {"additional_instruction", or_none(additional)},
                                                 {"claim", claim}});
}

// Placeholder text standing in for the attached screenshot images.
inline std::string screenshot_manifest(std::size_t count) {
  if (count == 0) return "(no screenshots available)";
  std::string out;
  for (std::size_t i = 1; i <= count; ++i) {
    if (i > 1) out.push_back('\n');
    out += "[screenshot " + std::to_string(i) + " of " + std::to_string(count) + " attached]";
  }
  return out;
}

inline std::string render_url_verifier_prompt(const std::string& task_description, const std::string& answer,
                                              const std::string& claim, const std::string& additional,
                                              const std::string& url, const std::string& web_text,
                                              std::size_t screenshot_count) {
  return fill_template(kUrlVerifierTemplate, {{"task_description", task_description},
                                              {"answer", answer},
                                              {"claim", claim},
                                              {"additional_instruction", or_none(additional)},
                                              {"url", url},
                                              {"web_text", web_text},
                                              {"screenshots", screenshot_manifest(screenshot_count)}});
}

// Cuts text to at most `max_chars` code points, marking the cut.
inline std::string truncate_text(const std::string& text, std::size_t max_chars) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) == 0x80) continue;
    if (count == max_chars) return text.substr(0, i) + "\n[... text truncated ...]";
    ++count;
  }
  return text;
}

}  // namespace treejudge::judgment
