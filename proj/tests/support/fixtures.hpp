#pragma once

// Small hand-written sessions shared by the unit tests.

#include "usejudge/session.hpp"

namespace fixtures {

using usejudge::EventKind;

inline usejudge::ClickedDocument doc(std::string id, int usefulness, int rank = 1) {
  usejudge::ClickedDocument d;
  d.doc_id = id;
  d.url = "https://example.org/" + id;
  d.title = "Title of " + id;
  d.summary = "Summary of " + id + ".";
  d.rank = rank;
  d.task_relevance = usefulness;
  d.query_relevance = usefulness;
  d.usefulness_human = usefulness;
  return d;
}

// Two queries. q1 (0..10000): click a at 1000, scroll, click b at 4000,
// back to the result page is implicit; q2 (10000..16000): click c at 11000,
// session ends at 16000.
inline usejudge::TaskSession two_query_session() {
  usejudge::TaskSession s;
  s.user_id = "u1";
  s.task_id = "t1";
  s.task_description = "Plan a weekend trip.";
  s.session_satisfaction = 4;

  usejudge::QueryRecord q1;
  q1.query_text = "weekend trip ideas";
  q1.query_position = 1;
  q1.query_satisfaction = 3;
  q1.clicked_documents = {doc("a", 3, 1), doc("b", 1, 3)};
  q1.events = {{EventKind::kQueryIssue, 0, std::nullopt},
               {EventKind::kHover, 500, "a"},
               {EventKind::kClick, 1000, "a"},
               {EventKind::kScroll, 2500, std::nullopt},
               {EventKind::kClick, 4000, "b"},
               {EventKind::kMove, 6000, std::nullopt}};

  usejudge::QueryRecord q2;
  q2.query_text = "cheap trains";
  q2.query_position = 2;
  q2.query_satisfaction = 4;
  q2.clicked_documents = {doc("c", 2, 2)};
  q2.events = {{EventKind::kQueryIssue, 10000, std::nullopt},
               {EventKind::kClick, 11000, "c"},
               {EventKind::kSessionEnd, 16000, std::nullopt}};

  s.queries = {q1, q2};
  return s;
}

}  // namespace fixtures
