#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "usejudge/error.hpp"
#include "usejudge/metrics.hpp"
#include "usejudge/synthetic.hpp"

namespace {

using namespace usejudge;

TEST(UrlDwell, EndsAtNextClickOrQuery) {
  const InteractionEvent click{EventKind::kClick, 100, "a"};
  const std::vector<InteractionEvent> rest{{EventKind::kScroll, 200, std::nullopt},
                                           {EventKind::kClick, 700, "b"}};
  EXPECT_EQ(url_dwell(click, rest, 5000), 600);
  const std::vector<InteractionEvent> quiet{{EventKind::kMove, 300, std::nullopt}};
  EXPECT_EQ(url_dwell(click, quiet, 5000), 4900);
}

TEST(UrlDwell, RejectsNonClicksAndBackwardsEnds) {
  const InteractionEvent scroll{EventKind::kScroll, 100, std::nullopt};
  EXPECT_THROW(url_dwell(scroll, {}, 500), Error);
  const InteractionEvent click{EventKind::kClick, 100, "a"};
  EXPECT_THROW(url_dwell(click, {}, 50), Error);
}

TEST(DeriveMetrics, HandWorkedSession) {
  const auto m = derive_metrics(fixtures::two_query_session());
  ASSERT_EQ(m.queries.size(), 2u);
  EXPECT_EQ(m.queries[0].query_dwell_ms, 10000);
  EXPECT_EQ(m.queries[1].query_dwell_ms, 6000);
  EXPECT_EQ(m.queries[0].documents[0].url_dwell_ms, 3000);
  EXPECT_EQ(m.queries[0].documents[1].url_dwell_ms, 6000);
  EXPECT_EQ(m.queries[1].documents[0].url_dwell_ms, 5000);
  EXPECT_EQ(m.task_dwell_ms, 16000);
  EXPECT_DOUBLE_EQ(m.avg_query_dwell_ms, 8000.0);
  EXPECT_EQ(m.task_clicks, 3);
  for (const auto& q : m.queries) {
    for (const auto& d : q.documents) EXPECT_DOUBLE_EQ(d.url_ctr, 1.0 / 3.0);
  }
}

TEST(DeriveMetrics, RepeatClicksAccumulate) {
  auto s = fixtures::two_query_session();
  // Revisit a after b.
  s.queries[0].events.push_back({EventKind::kClick, 8000, "a"});
  const auto m = derive_metrics(s);
  EXPECT_EQ(m.queries[0].documents[0].click_count, 2);
  EXPECT_EQ(m.queries[0].documents[0].url_dwell_ms, 3000 + 2000);
  EXPECT_EQ(m.queries[0].documents[1].url_dwell_ms, 4000);
  EXPECT_DOUBLE_EQ(m.queries[0].documents[0].url_ctr, 0.5);
}

TEST(DeriveMetrics, UnknownClickTargetRejected) {
  auto s = fixtures::two_query_session();
  s.queries[0].events[2].target = "nowhere";
  EXPECT_THROW(derive_metrics(s), Error);
}

TEST(DeriveMetrics, NoClicksMeansZeroCtr) {
  auto s = fixtures::two_query_session();
  s.queries.resize(1);
  s.queries[0].events = {{EventKind::kQueryIssue, 0, std::nullopt},
                         {EventKind::kScroll, 900, std::nullopt}};
  const auto m = derive_metrics(s);
  EXPECT_EQ(m.task_clicks, 0);
  EXPECT_EQ(m.queries[0].documents[0].url_ctr, 0.0);
  EXPECT_EQ(m.queries[0].query_dwell_ms, 900);
}

class SyntheticMetrics : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(SyntheticMetrics, AgreeWithEventReplay) {
  SyntheticOptions o;
  o.seed = GetParam();
  o.sessions = 30;
  const Corpus c = generate_corpus(o);
  for (const auto& s : c.sessions) {
    const auto m = derive_metrics(s);
    const auto replayed = oracle::replay(s);
    const auto ctr = oracle::task_ctr(s);
    std::int64_t dwell_sum = 0;
    double ctr_sum = 0;
    for (std::size_t q = 0; q < s.queries.size(); ++q) {
      EXPECT_EQ(m.queries[q].query_dwell_ms, replayed[q].span_ms);
      dwell_sum += m.queries[q].query_dwell_ms;
      for (std::size_t d = 0; d < s.queries[q].clicked_documents.size(); ++d) {
        EXPECT_EQ(m.queries[q].documents[d].url_dwell_ms, replayed[q].doc_dwell_ms[d]);
        EXPECT_EQ(m.queries[q].documents[d].click_count, replayed[q].doc_clicks[d]);
        EXPECT_NEAR(m.queries[q].documents[d].url_ctr,
                    ctr.at(s.queries[q].clicked_documents[d].doc_id), 1e-15);
        ctr_sum += m.queries[q].documents[d].url_ctr;
      }
    }
    EXPECT_EQ(m.task_dwell_ms, dwell_sum);
    EXPECT_NEAR(ctr_sum, 1.0, 1e-9);
  }
}

TEST_P(SyntheticMetrics, PassiveEventsChangeNothing) {
  SyntheticOptions o;
  o.seed = GetParam();
  o.sessions = 10;
  const Corpus c = generate_corpus(o);
  std::mt19937_64 rng(GetParam());
  for (const auto& s : c.sessions) {
    auto noisy = s;
    for (int k = 0; k < 100; ++k) {
      auto& q = noisy.queries[rng() % noisy.queries.size()];
      // Stay inside the query's own envelope so the timeline keeps its shape.
      const std::size_t at = 1 + rng() % q.events.size();
      const std::int64_t lo = q.events[at - 1].timestamp_ms;
      const std::int64_t hi = at < q.events.size() ? q.events[at].timestamp_ms : lo;
      if (at == q.events.size() && q.events.back().kind == EventKind::kSessionEnd) continue;
      const std::int64_t t = lo + static_cast<std::int64_t>(rng() % (hi - lo + 1));
      q.events.insert(q.events.begin() + static_cast<std::ptrdiff_t>(at),
                      {rng() % 2 ? EventKind::kScroll : EventKind::kMove, t, std::nullopt});
    }
    ASSERT_TRUE(validate_session(noisy).empty());
    EXPECT_EQ(derive_metrics(noisy), derive_metrics(s));
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, SyntheticMetrics, ::testing::Values(1, 2, 3, 99));

}  // namespace
