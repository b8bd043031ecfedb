#include "usejudge/induction.hpp"

#include <map>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "usejudge/assets.hpp"
#include "usejudge/error.hpp"

namespace usejudge {

InductionTemplate InductionTemplate::parse(std::string_view text) {
  const TemplateSections sections = parse_template_sections(text);
  InductionTemplate t;
  t.version = sections.version;
  t.persona = sections.at("persona");
  t.reasoning = sections.at("reasoning");
  t.refinement = sections.at("refinement");
  t.extraction = sections.at("extraction");
  return t;
}

const InductionTemplate& InductionTemplate::builtin() {
  static const InductionTemplate instance = parse(asset("templates/induction.tmpl"));
  return instance;
}

namespace {

std::string render_examples(std::span<const JudgmentBatch> batches) {
  std::string out;
  for (std::size_t i = 0; i < batches.size(); ++i) {
    if (i > 0) out += "\n\n";
    out += fmt::format("Example {}\n{}", i + 1, render_narrative(batches[i], true));
  }
  return out;
}

}  // namespace

InductionResult induce_rubric(std::span<const JudgmentBatch> labeled_batches, Dispatcher& dispatcher,
                              const InductionOptions& options, const InductionTemplate& tmpl) {
  if (labeled_batches.empty()) throw ConfigError("rubric induction needs at least one labeled batch");
  if (options.iterations < 1) throw ConfigError("rubric induction needs at least one iteration");

  RubricDocument defaults;
  defaults.dataset_tag = options.dataset_tag;
  defaults.version = options.version;
  defaults.provenance = RubricProvenance::kInduced;

  InductionResult result;
  result.template_version = tmpl.version;
  const std::string examples = render_examples(labeled_batches);

  auto ask = [&](const std::string& user) {
    ChatRequest request;
    request.system = tmpl.persona;
    request.user = user;
    request.decoding = options.decoding;
    ++result.backend_calls;
    return dispatcher.call(request).response.text;
  };

  std::string draft;
  for (int round = 1; round <= options.iterations; ++round) {
    const std::string previous =
        draft.empty() ? std::string() : "\n" + fill(tmpl.refinement, {{"rubric", draft}});
    const std::string reasoning =
        ask(fill(tmpl.reasoning, {{"examples", examples}, {"previous_rubric", previous}}));
    draft = ask(fill(tmpl.extraction, {{"reasoning", reasoning}}));
    spdlog::info("induction round {}/{}: {} chars of reasoning, {} chars of rules", round,
                 options.iterations, reasoning.size(), draft.size());
    result.reasoning.push_back(reasoning);
    result.drafts.push_back(draft);
  }
  result.rubric = parse_rubric_response(draft, defaults);
  return result;
}

}  // namespace usejudge
