#pragma once

// Rubric induction: labeled sessions go to the model for reasoning, the
// reasoning comes back as categorized rules, and each later round refines the
// previous draft.

#include <span>
#include <string>
#include <vector>

#include "usejudge/backend.hpp"
#include "usejudge/batching.hpp"
#include "usejudge/prompting.hpp"
#include "usejudge/rubric.hpp"

namespace usejudge {

struct InductionOptions {
  int iterations = 3;
  DatasetTag dataset_tag = DatasetTag::kSynthetic;
  std::string version = "induced/1";
  DecodingParams decoding;
};

struct InductionResult {
  RubricDocument rubric;                // provenance INDUCED
  std::vector<std::string> reasoning;   // one per round
  std::vector<std::string> drafts;      // raw extraction answers, one per round
  std::size_t backend_calls = 0;        // 2 per round
  std::string template_version;
};

/// Sections of assets/templates/induction.tmpl.
struct InductionTemplate {
  std::string version;
  std::string persona;
  std::string reasoning;
  std::string refinement;
  std::string extraction;

  static InductionTemplate parse(std::string_view text);
  static const InductionTemplate& builtin();
};

/// Runs `options.iterations` rounds of reasoning + extraction. Throws
/// ConfigError on empty input or iterations < 1, BackendError when a call
/// keeps failing, and ResponseParseError (with the raw text) when the final
/// answer is not a complete rubric.
InductionResult induce_rubric(std::span<const JudgmentBatch> labeled_batches, Dispatcher& dispatcher,
                              const InductionOptions& options = {},
                              const InductionTemplate& tmpl = InductionTemplate::builtin());

}  // namespace usejudge
