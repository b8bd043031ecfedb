#include "usejudge/rubric.hpp"

#include <fstream>
#include <sstream>
#include <utility>

#include "usejudge/assets.hpp"
#include "usejudge/error.hpp"

namespace usejudge {

namespace {

constexpr std::string_view kLabelNames[kNumLabels] = {
    "Not Useful at all", "Somewhat Useful", "Fairly Useful", "Very Useful"};

struct CategoryName {
  RuleCategory category;
  std::string_view tag;
  std::string_view display;
};

constexpr CategoryName kCategories[] = {
    {RuleCategory::kRelevance, "RELEVANCE", "Relevance"},
    {RuleCategory::kSatisfaction, "SATISFACTION", "Satisfaction"},
    {RuleCategory::kUserActions, "USER_ACTIONS", "User actions"},
    {RuleCategory::kTitleSummaryAlignment, "TITLE_SUMMARY_ALIGNMENT", "Title-summary alignment"},
    {RuleCategory::kExceptionCases, "EXCEPTION_CASES", "Exception cases"},
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

struct Directive {
  std::string_view key;
  std::string_view value;
};

std::optional<Directive> split_directive(std::string_view line) {
  const auto colon = line.find(':');
  if (colon == std::string_view::npos) return std::nullopt;
  return Directive{trim(line.substr(0, colon)), trim(line.substr(colon + 1))};
}

// Strips list bullets and emphasis that models like to add around directives.
std::string_view strip_decoration(std::string_view line) {
  line = trim(line);
  while (!line.empty() && (line.front() == '-' || line.front() == '*' || line.front() == '`')) {
    line = trim(line.substr(1));
  }
  while (!line.empty() && (line.back() == '*' || line.back() == '`')) {
    line = trim(line.substr(0, line.size() - 1));
  }
  return line;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

class RubricParser {
 public:
  RubricParser(bool lenient, RubricDocument defaults)
      : lenient_(lenient), doc_(std::move(defaults)) {
    for (auto& rules : doc_.rules) rules.clear();
  }

  RubricDocument parse(std::string_view text, std::string_view raw_for_errors) {
    std::size_t line_no = 0;
    std::size_t begin = 0;
    while (begin <= text.size()) {
      std::size_t end = text.find('\n', begin);
      if (end == std::string_view::npos) end = text.size();
      const std::string_view line = text.substr(begin, end - begin);
      begin = end + 1;
      ++line_no;
      handle(line, line_no);
    }
    if (pending_category_) fail("category without a following rule", pending_line_);
    if (!lenient_) {
      if (!saw_dataset_) fail("missing 'dataset:' header", 0);
      if (!saw_version_) fail("missing 'version:' header", 0);
    }
    for (int label = kNumLabels - 1; label >= 0; --label) {
      if (doc_.rules[label].empty()) {
        const std::string message = "rubric incomplete: label " + std::to_string(label);
        if (lenient_) throw ResponseParseError(message, std::string(raw_for_errors));
        throw InputError(message);
      }
    }
    return std::move(doc_);
  }

 private:
  void handle(std::string_view raw, std::size_t line_no) {
    std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') return;
    if (lenient_) line = strip_decoration(line);
    auto directive = split_directive(line);
    if (!directive) {
      if (lenient_) return;
      fail("expected 'key: value'", line_no);
    }
    const std::string key = lenient_ ? lower(directive->key) : std::string(directive->key);
    const std::string_view value = directive->value;

    // Model answers cannot override what the caller fixed.
    if (lenient_ && (key == "dataset" || key == "version" || key == "provenance")) return;
    if (key == "dataset") {
      auto tag = parse_dataset_tag(value);
      if (!tag) fail("unknown dataset tag '" + std::string(value) + "'", line_no);
      doc_.dataset_tag = *tag;
      saw_dataset_ = true;
    } else if (key == "version") {
      if (value.empty()) fail("empty version", line_no);
      doc_.version = std::string(value);
      saw_version_ = true;
    } else if (key == "provenance") {
      auto p = parse_provenance(value);
      if (!p) fail("unknown provenance '" + std::string(value) + "'", line_no);
      doc_.provenance = *p;
    } else if (key == "label") {
      if (pending_category_) fail("category without a following rule", pending_line_);
      const std::string digits(value.substr(0, value.find_first_not_of("0123456789")));
      if (digits.empty() || digits.size() > 1 || digits[0] > '3') {
        fail("label must be 0, 1, 2 or 3, got '" + std::string(value) + "'", line_no);
      }
      const int label = digits[0] - '0';
      if (!lenient_ && seen_labels_[label]) {
        fail("label " + digits + " appears twice", line_no);
      }
      seen_labels_[label] = true;
      current_label_ = label;
    } else if (key == "category") {
      if (!current_label_) fail("category before any 'label:' line", line_no);
      if (pending_category_) fail("category without a following rule", pending_line_);
      const std::string tag = lenient_ ? upper_tag(value) : std::string(value);
      auto category = parse_category(tag);
      if (!category) fail("unknown category tag '" + std::string(value) + "'", line_no);
      pending_category_ = category;
      pending_line_ = line_no;
    } else if (key == "rule") {
      if (!pending_category_) fail("rule without a preceding 'category:' line", line_no);
      if (value.empty()) fail("empty rule text", line_no);
      doc_.rules[*current_label_].push_back({*pending_category_, std::string(value)});
      pending_category_.reset();
    } else if (!lenient_) {
      fail("unknown directive '" + key + "'", line_no);
    }
  }

  static std::string upper_tag(std::string_view value) {
    std::string out;
    for (char c : value) {
      if (c == ' ' || c == '-') c = '_';
      out += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& message, std::size_t line_no) const {
    throw InputError("rubric: " + message, line_no);
  }

  bool lenient_;
  RubricDocument doc_;
  bool saw_dataset_ = false;
  bool saw_version_ = false;
  std::array<bool, kNumLabels> seen_labels_{};
  std::optional<int> current_label_;
  std::optional<RuleCategory> pending_category_;
  std::size_t pending_line_ = 0;
};

}  // namespace

std::string_view label_name(int label) {
  if (label < 0 || label >= kNumLabels) throw Error("label out of range 0–3");
  return kLabelNames[label];
}

std::string_view to_string(RuleCategory category) {
  for (const auto& c : kCategories) {
    if (c.category == category) return c.tag;
  }
  return "UNKNOWN";
}

std::string_view display_name(RuleCategory category) {
  for (const auto& c : kCategories) {
    if (c.category == category) return c.display;
  }
  return "Unknown";
}

std::optional<RuleCategory> parse_category(std::string_view text) {
  for (const auto& c : kCategories) {
    if (c.tag == text) return c.category;
  }
  return std::nullopt;
}

std::string_view to_string(RubricProvenance provenance) {
  return provenance == RubricProvenance::kShipped ? "SHIPPED" : "INDUCED";
}

std::optional<RubricProvenance> parse_provenance(std::string_view text) {
  if (text == "SHIPPED") return RubricProvenance::kShipped;
  if (text == "INDUCED") return RubricProvenance::kInduced;
  return std::nullopt;
}

std::vector<std::string> rubric_problems(const RubricDocument& rubric) {
  std::vector<std::string> out;
  if (rubric.version.empty() || rubric.version.find('\n') != std::string::npos) {
    out.push_back("version must be a non-empty single line");
  }
  for (int label = 0; label < kNumLabels; ++label) {
    if (rubric.rules[label].empty()) {
      out.push_back("rubric incomplete: label " + std::to_string(label));
    }
    for (const auto& rule : rubric.rules[label]) {
      if (trim(rule.text).empty() || rule.text != trim(rule.text) ||
          rule.text.find('\n') != std::string::npos) {
        out.push_back("label " + std::to_string(label) +
                      ": rule text must be a non-empty trimmed single line");
      }
    }
  }
  return out;
}

RubricDocument parse_rubric(std::string_view text) {
  return RubricParser(false, RubricDocument{}).parse(text, text);
}

RubricDocument parse_rubric_response(std::string_view text, const RubricDocument& defaults) {
  return RubricParser(true, defaults).parse(text, text);
}

std::string format_rubric(const RubricDocument& rubric) {
  if (auto problems = rubric_problems(rubric); !problems.empty()) {
    throw Error("cannot format rubric: " + problems.front());
  }
  std::ostringstream out;
  out << "dataset: " << to_string(rubric.dataset_tag) << '\n'
      << "version: " << rubric.version << '\n'
      << "provenance: " << to_string(rubric.provenance) << '\n';
  for (int label = kNumLabels - 1; label >= 0; --label) {
    out << "\nlabel: " << label << '\n';
    for (const auto& rule : rubric.rules[label]) {
      out << "category: " << to_string(rule.category) << '\n' << "rule: " << rule.text << '\n';
    }
  }
  return out.str();
}

RubricDocument load_rubric(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open rubric file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  try {
    return parse_rubric(buffer.str());
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void save_rubric(const RubricDocument& rubric, const std::filesystem::path& path) {
  const std::string text = format_rubric(rubric);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write rubric file: " + path.string());
  out << text;
}

RubricDocument shipped_rubric(DatasetTag tag) {
  switch (tag) {
    case DatasetTag::kThuirStyle:
      return parse_rubric(asset("rubrics/thuir.rubric"));
    case DatasetTag::kQrefStyle:
      return parse_rubric(asset("rubrics/qref.rubric"));
    case DatasetTag::kSynthetic:
      break;
  }
  throw Error("no shipped rubric for dataset " + std::string(to_string(tag)));
}

RubricDocument resolve_rubric(std::string_view source) {
  if (source == "shipped:thuir") return shipped_rubric(DatasetTag::kThuirStyle);
  if (source == "shipped:qref") return shipped_rubric(DatasetTag::kQrefStyle);
  return load_rubric(std::filesystem::path(std::string(source)));
}

}  // namespace usejudge
