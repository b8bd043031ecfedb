#pragma once

// Per-label usefulness rubrics.
//
// File format (UTF-8 text, one directive per line, `#` starts a comment):
//
//   dataset: THUIR_STYLE
//   version: thuir/1
//   provenance: SHIPPED
//
//   label: 3
//   category: RELEVANCE
//   rule: Task relevance and query relevance are both 2 or 3.
//   category: USER_ACTIONS
//   rule: ...
//   label: 2
//   ...
//
// A `label:` line opens the section for that label; every rule is a
// `category:` line immediately followed by its `rule:` line.

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "usejudge/session.hpp"

namespace usejudge {

inline constexpr int kNumLabels = 4;

/// "Very Useful", "Fairly Useful", "Somewhat Useful", "Not Useful at all".
std::string_view label_name(int label);

enum class RuleCategory {
  kRelevance,
  kSatisfaction,
  kUserActions,
  kTitleSummaryAlignment,
  kExceptionCases,
};

std::string_view to_string(RuleCategory category);        // "RELEVANCE", ...
std::string_view display_name(RuleCategory category);     // "Relevance", ...
std::optional<RuleCategory> parse_category(std::string_view text);

enum class RubricProvenance { kShipped, kInduced };

std::string_view to_string(RubricProvenance provenance);
std::optional<RubricProvenance> parse_provenance(std::string_view text);

struct RubricRule {
  RuleCategory category = RuleCategory::kRelevance;
  std::string text;

  bool operator==(const RubricRule&) const = default;
};

struct RubricDocument {
  DatasetTag dataset_tag = DatasetTag::kSynthetic;
  std::string version;
  RubricProvenance provenance = RubricProvenance::kShipped;
  std::array<std::vector<RubricRule>, kNumLabels> rules;  // indexed by label

  bool operator==(const RubricDocument&) const = default;
};

/// Empty when every label has at least one rule with non-empty single-line text.
std::vector<std::string> rubric_problems(const RubricDocument& rubric);

/// Strict parse of the file format. Throws InputError with a line number on
/// unknown directives or category tags, and "rubric incomplete: label N" when
/// a label has no rules.
RubricDocument parse_rubric(std::string_view text);

/// Lenient parse for model output: skips lines that are not rubric
/// directives, tolerates list bullets, and does not require the header.
/// Header fields come from `defaults`. Throws ResponseParseError carrying the
/// raw text when the result is incomplete.
RubricDocument parse_rubric_response(std::string_view text, const RubricDocument& defaults);

std::string format_rubric(const RubricDocument& rubric);

RubricDocument load_rubric(const std::filesystem::path& path);
void save_rubric(const RubricDocument& rubric, const std::filesystem::path& path);

/// Rubric shipped for a dataset style (THUIR_STYLE or QREF_STYLE).
RubricDocument shipped_rubric(DatasetTag tag);

/// Resolves "shipped:thuir", "shipped:qref" or a file path.
RubricDocument resolve_rubric(std::string_view source);

}  // namespace usejudge
