#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "usejudge/error.hpp"
#include "usejudge/induction.hpp"
#include "usejudge/rubric.hpp"

namespace {

using namespace usejudge;

// Answers reasoning and extraction prompts alternately and keeps every request.
class RecordingBackend final : public ChatBackend {
 public:
  explicit RecordingBackend(std::string rubric_text) : rubric_text_(std::move(rubric_text)) {}
  ChatResponse complete(const ChatRequest& request) override {
    count_call();
    requests.push_back(request);
    if (requests.size() % 2 == 1) return {"reasoning round " + std::to_string(requests.size() / 2 + 1), {}, {}};
    return {rubric_text_, {}, {}};
  }
  std::string identity() const override { return "mock:recording"; }

  std::vector<ChatRequest> requests;

 private:
  std::string rubric_text_;
};

std::vector<JudgmentBatch> labeled() {
  Corpus c;
  c.sessions = {fixtures::two_query_session()};
  c.summary = summarize(c.sessions);
  return make_session_batches(c, FeatureGroupMask::full());
}

RetryPolicy once() {
  RetryPolicy p;
  p.max_attempts = 1;
  return p;
}

TEST(Induction, CannedRubricComesBackUnchanged) {
  const RubricDocument canned = shipped_rubric(DatasetTag::kThuirStyle);
  RecordingBackend backend(format_rubric(canned));
  Dispatcher dispatcher(backend, once(), {});
  InductionOptions options;
  options.iterations = 1;
  options.dataset_tag = DatasetTag::kThuirStyle;
  const auto batches = labeled();
  const InductionResult r = induce_rubric(batches, dispatcher, options);
  EXPECT_EQ(r.rubric.rules, canned.rules);
  EXPECT_EQ(r.rubric.provenance, RubricProvenance::kInduced);
  EXPECT_EQ(r.rubric.dataset_tag, DatasetTag::kThuirStyle);
  EXPECT_EQ(r.rubric.version, "induced/1");
  EXPECT_EQ(r.backend_calls, 2u);
  EXPECT_EQ(r.template_version, InductionTemplate::builtin().version);
}

TEST(Induction, TwoCallsPerRoundAndRefinement) {
  const RubricDocument canned = shipped_rubric(DatasetTag::kQrefStyle);
  const std::string text = format_rubric(canned);
  RecordingBackend backend(text);
  Dispatcher dispatcher(backend, once(), {});
  InductionOptions options;
  options.iterations = 2;
  const auto batches = labeled();
  const InductionResult r = induce_rubric(batches, dispatcher, options);
  EXPECT_EQ(backend.call_count(), 4u);
  EXPECT_EQ(r.backend_calls, 4u);
  EXPECT_EQ(r.reasoning.size(), 2u);
  EXPECT_EQ(r.drafts.size(), 2u);

  const auto& reqs = backend.requests;
  // Labeled examples go into every reasoning prompt.
  EXPECT_NE(reqs[0].user.find("Example 1"), std::string::npos);
  EXPECT_NE(reqs[2].user.find("Example 1"), std::string::npos);
  // Only the second round sees the earlier draft.
  EXPECT_EQ(reqs[0].user.find(text), std::string::npos);
  EXPECT_NE(reqs[2].user.find(text), std::string::npos);
  // Extraction carries that round's reasoning.
  EXPECT_NE(reqs[1].user.find("reasoning round 1"), std::string::npos);
  EXPECT_NE(reqs[3].user.find("reasoning round 2"), std::string::npos);
  EXPECT_EQ(reqs[0].system, InductionTemplate::builtin().persona);
}

TEST(Induction, IncompleteAnswerIsParseError) {
  RecordingBackend backend(
      "label: 2\ncategory: RELEVANCE\nrule: On topic.\n"
      "label: 1\ncategory: RELEVANCE\nrule: Partly on topic.\n"
      "label: 0\ncategory: RELEVANCE\nrule: Off topic.\n");
  Dispatcher dispatcher(backend, once(), {});
  InductionOptions options;
  options.iterations = 1;
  const auto batches = labeled();
  try {
    induce_rubric(batches, dispatcher, options);
    FAIL() << "expected ResponseParseError";
  } catch (const ResponseParseError& e) {
    EXPECT_NE(std::string(e.what()).find("rubric incomplete: label 3"), std::string::npos);
    EXPECT_NE(e.raw().find("label: 2"), std::string::npos);
  }
}

TEST(Induction, RejectsBadInput) {
  RecordingBackend backend("");
  Dispatcher dispatcher(backend, once(), {});
  EXPECT_THROW(induce_rubric({}, dispatcher), ConfigError);
  InductionOptions options;
  options.iterations = 0;
  const auto batches = labeled();
  EXPECT_THROW(induce_rubric(batches, dispatcher, options), ConfigError);
  EXPECT_EQ(backend.call_count(), 0u);
}

TEST(Induction, TemplateSectionsRequired) {
  EXPECT_THROW(InductionTemplate::parse("version: x\n[[persona]]\nhi\n"), InputError);
  const auto& t = InductionTemplate::builtin();
  EXPECT_NE(t.reasoning.find("{{examples}}"), std::string::npos);
  EXPECT_NE(t.extraction.find("{{reasoning}}"), std::string::npos);
}

}  // namespace
