#include "usejudge/prompting.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "usejudge/assets.hpp"
#include "usejudge/error.hpp"

namespace usejudge {

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(begin, end - begin));
    begin = end + 1;
  }
  return lines;
}

struct LineFilter {
  FeatureGroupMask mask;
  bool personalized = false;
};

// Keeps untagged lines, and tagged lines whose group is enabled (tag removed).
std::string filter_tagged_lines(std::string_view section, const LineFilter& filter) {
  std::string out;
  for (std::string_view line : split_lines(section)) {
    if (line.size() >= 3 && line[0] == '@' && line[2] == ' ') {
      const char tag = line[1];
      const bool keep = (tag == 'R' && filter.mask.relevance) ||
                        (tag == 'S' && filter.mask.satisfaction) ||
                        (tag == 'U' && filter.mask.user_behavior) ||
                        (tag == 'P' && filter.personalized);
      if (!keep) continue;
      line.remove_prefix(3);
    }
    out.append(line);
    out.push_back('\n');
  }
  if (!out.empty()) out.pop_back();
  return out;
}

}  // namespace

// Single pass, so substituted content is never scanned for placeholders.
std::string fill(std::string_view text, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    const std::string key(trim(text.substr(open + 2, close - open - 2)));
    auto it = values.find(key);
    if (it == values.end()) throw Error("template: unknown placeholder {{" + key + "}}");
    out.append(text.substr(pos, open - pos));
    out.append(it->second);
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

namespace {

char group_of(RuleCategory category) {
  switch (category) {
    case RuleCategory::kRelevance:
      return 'R';
    case RuleCategory::kSatisfaction:
      return 'S';
    case RuleCategory::kUserActions:
      return 'U';
    default:
      return 0;
  }
}

bool group_enabled(char group, const FeatureGroupMask& mask) {
  switch (group) {
    case 'R':
      return mask.relevance;
    case 'S':
      return mask.satisfaction;
    case 'U':
      return mask.user_behavior;
    default:
      return true;
  }
}

std::string slots(std::size_t count) {
  std::string out;
  for (std::size_t i = 1; i <= count; ++i) {
    if (i > 1) out += ", ";
    out += "l" + std::to_string(i);
  }
  return out;
}

}  // namespace

std::string_view to_string(JudgeMethod method) {
  switch (method) {
    case JudgeMethod::kBaselineCot:
      return "BASELINE_COT";
    case JudgeMethod::kSessionPersonalized:
      return "SESSION_PERSONALIZED";
    case JudgeMethod::kTrueRubric:
      return "TRUE_RUBRIC";
  }
  return "UNKNOWN";
}

std::optional<JudgeMethod> parse_method(std::string_view text) {
  if (text == "BASELINE_COT" || text == "baseline") return JudgeMethod::kBaselineCot;
  if (text == "SESSION_PERSONALIZED" || text == "session") {
    return JudgeMethod::kSessionPersonalized;
  }
  if (text == "TRUE_RUBRIC" || text == "TRUE" || text == "true") return JudgeMethod::kTrueRubric;
  return std::nullopt;
}

BatchScope default_scope(JudgeMethod method) {
  return method == JudgeMethod::kBaselineCot ? BatchScope::kPoint : BatchScope::kSession;
}

TemplateSections parse_template_sections(std::string_view text) {
  TemplateSections t;
  std::string* current = nullptr;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    const std::string_view trimmed = trim(line);
    if (trimmed.size() > 4 && trimmed.starts_with("[[") && trimmed.ends_with("]]")) {
      const std::string name(trimmed.substr(2, trimmed.size() - 4));
      if (t.sections.count(name)) throw InputError("template: section [[" + name + "]] repeated", line_no);
      current = &t.sections[name];
      continue;
    }
    if (current == nullptr) {
      if (trimmed.empty() || trimmed.front() == '#') continue;
      if (trimmed.starts_with("version:")) {
        t.version = std::string(trim(trimmed.substr(8)));
        continue;
      }
      throw InputError("template: unexpected text before the first section", line_no);
    }
    current->append(line);
    current->push_back('\n');
  }
  for (auto& [name, body] : t.sections) body = std::string(trim(body));
  if (t.version.empty()) throw InputError("template: missing 'version:' header");
  return t;
}

const std::string& TemplateSections::at(const std::string& name) const {
  auto it = sections.find(name);
  if (it == sections.end()) throw InputError("template: missing section [[" + name + "]]");
  return it->second;
}

PromptTemplate PromptTemplate::parse(std::string_view text) {
  const TemplateSections sections = parse_template_sections(text);
  PromptTemplate t;
  t.version = sections.version;
  auto take = [&](const char* name) { return sections.at(name); };
  t.persona = take("persona");
  t.descriptive = take("descriptive");
  t.narrative = take("narrative");
  t.cot = take("cot");
  t.rubric = take("rubric");
  t.label_scale = take("label_scale");
  t.output = take("output");
  for (int label = 0; label < kNumLabels; ++label) {
    const std::string expected = std::to_string(label) + " = " + std::string(label_name(label));
    if (t.label_scale.find(expected) == std::string::npos) {
      throw InputError("template: label scale must contain '" + expected + "'");
    }
  }
  return t;
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open template file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const PromptTemplate& PromptTemplate::builtin() {
  static const PromptTemplate instance = parse(asset("templates/dna.tmpl"));
  return instance;
}

std::vector<SignalTerm> signal_terms(char group) {
  switch (group) {
    case 'R':
      return {{"relevan", false}};
    case 'S':
      return {{"satisf", false}};
    case 'U':
      return {{"dwell", false}, {"click-through", false}, {"CTR", true}};
    default:
      return {};
  }
}

bool mentions(std::string_view text, const SignalTerm& term) {
  if (term.case_sensitive) return text.find(term.text) != std::string_view::npos;
  auto it = std::search(text.begin(), text.end(), term.text.begin(), term.text.end(),
                        [](char a, char b) {
                          return std::tolower(static_cast<unsigned char>(a)) ==
                                 std::tolower(static_cast<unsigned char>(b));
                        });
  return it != text.end();
}

bool rule_visible(const RubricRule& rule, const FeatureGroupMask& mask) {
  if (!group_enabled(group_of(rule.category), mask)) return false;
  for (char group : {'R', 'S', 'U'}) {
    if (group_enabled(group, mask)) continue;
    for (const SignalTerm& term : signal_terms(group)) {
      if (mentions(rule.text, term)) return false;
    }
  }
  return true;
}

std::string render_rubric(const RubricDocument& rubric, const FeatureGroupMask& mask) {
  std::string out;
  for (int label = kNumLabels - 1; label >= 0; --label) {
    out += fmt::format("Label {} ({}):\n", label, label_name(label));
    std::size_t shown = 0;
    for (const RubricRule& rule : rubric.rules[label]) {
      if (!rule_visible(rule, mask)) continue;
      out += fmt::format("- {}: {}\n", display_name(rule.category), rule.text);
      ++shown;
    }
    if (shown == 0) out += "- (no rule applies to the measures provided)\n";
  }
  if (!out.empty()) out.pop_back();
  return out;
}

namespace {

std::string render_session_header(const JudgmentBatch& batch) {
  std::string out;
  const SessionContext& s = batch.session;
  out += fmt::format("User: {}\n", batch.user_id);
  if (s.task_description) out += fmt::format("Task: {}\n", *s.task_description);
  if (s.session_satisfaction) out += fmt::format("Session satisfaction: {} (1-5)\n", *s.session_satisfaction);
  if (s.task_dwell_ms) out += fmt::format("Task dwell time: {} ms\n", *s.task_dwell_ms);
  if (s.avg_query_dwell_ms) out += fmt::format("Average query dwell time: {:.1f} ms\n", *s.avg_query_dwell_ms);
  out.pop_back();
  return out;
}

std::string render_items(const JudgmentBatch& batch, bool with_labels) {
  std::string out;
  std::optional<int> open_query;
  for (std::size_t i = 0; i < batch.items.size(); ++i) {
    const BatchItem& it = batch.items[i];
    if (open_query != it.query_position) {
      open_query = it.query_position;
      if (!out.empty()) out += '\n';
      out += fmt::format("Query {}: \"{}\"\n", it.query_position, it.query_text);
      if (it.query_satisfaction) out += fmt::format("Query satisfaction: {} (1-5)\n", *it.query_satisfaction);
      if (it.query_dwell_ms) out += fmt::format("Query dwell time: {} ms\n", *it.query_dwell_ms);
    }
    out += fmt::format("  Item {}\n", i + 1);
    out += fmt::format("    Title: {}\n", it.title);
    out += fmt::format("    URL: {}\n", it.url);
    out += fmt::format("    Summary: {}\n", it.summary);
    out += fmt::format("    Rank: {}\n", it.rank);
    if (it.task_relevance) out += fmt::format("    Task relevance: {} (0-3)\n", *it.task_relevance);
    if (it.query_relevance) out += fmt::format("    Query relevance: {} (0-3)\n", *it.query_relevance);
    if (it.url_ctr) out += fmt::format("    URL CTR: {:.3f}\n", *it.url_ctr);
    if (it.url_dwell_ms) out += fmt::format("    URL dwell time: {} ms\n", *it.url_dwell_ms);
    if (with_labels && i < batch.ground_truth.size()) {
      const int label = batch.ground_truth[i];
      out += fmt::format("    Usefulness label: {} ({})\n", label, label_name(label));
    }
  }
  if (!out.empty() && out.back() == '\n') out.pop_back();
  return out;
}

}  // namespace

std::string render_narrative(const JudgmentBatch& batch, bool with_labels) {
  return render_session_header(batch) + "\n\n" + render_items(batch, with_labels);
}

RenderedPrompt render_prompt(const JudgmentBatch& batch, JudgeMethod method,
                             const RubricDocument* rubric, const PromptTemplate& tmpl) {
  if (method == JudgeMethod::kTrueRubric && rubric == nullptr) {
    throw ConfigError("rubric required for method TRUE");
  }
  if (method == JudgeMethod::kSessionPersonalized && batch.scope != BatchScope::kSession) {
    throw ConfigError("method SESSION_PERSONALIZED requires a SESSION batch");
  }
  if (batch.items.empty()) throw ConfigError("cannot render a batch without items");

  const LineFilter filter{batch.mask, method == JudgeMethod::kSessionPersonalized};
  std::map<std::string, std::string> values{
      {"items", render_items(batch, false)},
      {"session", render_session_header(batch)},
      {"slots", slots(batch.items.size())},
      {"item_count", std::to_string(batch.items.size())},
  };
  std::string aspects;
  if (method == JudgeMethod::kTrueRubric) {
    values["rubric"] = render_rubric(*rubric, batch.mask);
    aspects = fill(filter_tagged_lines(tmpl.rubric, filter), values);
  } else {
    aspects = fill(filter_tagged_lines(tmpl.cot, filter), values);
  }

  RenderedPrompt prompt;
  prompt.system = fill(filter_tagged_lines(tmpl.persona, filter), values);
  prompt.user = fill(filter_tagged_lines(tmpl.descriptive, filter), values);
  prompt.user += "\n\n";
  prompt.user += std::string(trim(fill(filter_tagged_lines(tmpl.narrative, filter), values)));
  prompt.user += "\n\n";
  prompt.user += aspects;
  prompt.user += "\n\n";
  prompt.user += fill(filter_tagged_lines(tmpl.label_scale, filter), values);
  prompt.user += "\n\n";
  prompt.user += fill(filter_tagged_lines(tmpl.output, filter), values);
  prompt.user += "\n";
  return prompt;
}

}  // namespace usejudge
