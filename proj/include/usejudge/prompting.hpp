#pragma once

// Prompt assembly for the three judging methods.
//
// Every prompt has the same skeleton: a rater persona (system message), then
// measure definitions, the batch content, the reasoning aspects (either
// step-by-step instructions or a rubric), the label scale and a fixed answer
// trailer `LABELS: l1, ..., lk`.

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "usejudge/batching.hpp"
#include "usejudge/rubric.hpp"

namespace usejudge {

enum class JudgeMethod { kBaselineCot, kSessionPersonalized, kTrueRubric };

std::string_view to_string(JudgeMethod method);  // "BASELINE_COT", ...

/// Accepts the enum names and the short forms "baseline", "session", "true".
std::optional<JudgeMethod> parse_method(std::string_view text);

/// Scope each method is run with unless overridden.
BatchScope default_scope(JudgeMethod method);

/// A template file split into its `[[name]]` sections (trimmed), plus the
/// `version:` header. Lines starting with '#' before the first section are
/// comments.
struct TemplateSections {
  std::string version;
  std::map<std::string, std::string> sections;

  const std::string& at(const std::string& name) const;  // InputError when absent
};

TemplateSections parse_template_sections(std::string_view text);

/// Replaces `{{name}}` markers in one pass; an unknown name throws Error.
std::string fill(std::string_view text, const std::map<std::string, std::string>& values);

/// Sections of a judging template. See assets/templates/dna.tmpl for the
/// file format and the `@R/@S/@U/@P` line tags.
struct PromptTemplate {
  std::string version;
  std::string persona;
  std::string descriptive;
  std::string narrative;
  std::string cot;
  std::string rubric;
  std::string label_scale;
  std::string output;

  /// Throws InputError on a missing section or a label scale that does not
  /// name all four labels.
  static PromptTemplate parse(std::string_view text);
  static PromptTemplate load(const std::filesystem::path& path);
  static const PromptTemplate& builtin();
};

struct RenderedPrompt {
  std::string system;
  std::string user;

  std::string full_text() const { return system + "\n\n" + user; }
  bool operator==(const RenderedPrompt&) const = default;
};

/// Pure function of its arguments. Throws ConfigError when TRUE_RUBRIC has no
/// rubric or SESSION_PERSONALIZED is given a POINT batch.
RenderedPrompt render_prompt(const JudgmentBatch& batch, JudgeMethod method,
                             const RubricDocument* rubric,
                             const PromptTemplate& tmpl = PromptTemplate::builtin());

/// Batch content as shown to the model. With `with_labels` every item also
/// shows its human usefulness label (used for rubric induction).
std::string render_narrative(const JudgmentBatch& batch, bool with_labels = false);

/// Rubric body restricted to rules whose signals the mask lets through.
std::string render_rubric(const RubricDocument& rubric, const FeatureGroupMask& mask);

/// Whether a rule may appear under `mask`: rules of a disabled group's
/// category, or that mention one of its signals, are withheld.
bool rule_visible(const RubricRule& rule, const FeatureGroupMask& mask);

/// Signal words of each optional feature group, used to keep disabled
/// groups out of rubric text.
struct SignalTerm {
  std::string_view text;
  bool case_sensitive;
};
std::vector<SignalTerm> signal_terms(char group);  // 'R', 'S' or 'U'

bool mentions(std::string_view text, const SignalTerm& term);

}  // namespace usejudge
