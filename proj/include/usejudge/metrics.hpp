#pragma once

// Online behavior metrics derived from raw interaction events.
//
// Dwell policy:
//   query dwell  = this query's QUERY_ISSUE up to the next query's start, or to
//                  SESSION_END (or the last recorded event) for the final query.
//   url dwell    = from a CLICK to the next CLICK or QUERY_ISSUE, else query end.
//                  SCROLL, HOVER and MOVE never terminate a dwell interval.
//   task dwell   = sum of query dwells.
// URL CTR is clicks on a document over all clicks in the task.

#include <cstdint>
#include <span>
#include <vector>

#include "usejudge/session.hpp"

namespace usejudge {

struct DocumentMetrics {
  double url_ctr = 0.0;
  std::int64_t url_dwell_ms = 0;
  int click_count = 0;  // CLICK events on this document within its query

  bool operator==(const DocumentMetrics&) const = default;
};

struct QueryMetrics {
  std::int64_t query_dwell_ms = 0;
  std::vector<DocumentMetrics> documents;  // aligned with QueryRecord::clicked_documents

  bool operator==(const QueryMetrics&) const = default;
};

struct DerivedMetrics {
  std::vector<QueryMetrics> queries;  // aligned with TaskSession::queries
  std::int64_t task_dwell_ms = 0;
  double avg_query_dwell_ms = 0.0;
  int task_clicks = 0;

  bool operator==(const DerivedMetrics&) const = default;
};

/// Time from `click` to the first following CLICK or QUERY_ISSUE in
/// `subsequent`, or to `query_end` when none follows. Throws Error when
/// `click` is not a CLICK, or when `query_end` precedes the click.
std::int64_t url_dwell(const InteractionEvent& click, std::span<const InteractionEvent> subsequent,
                       std::int64_t query_end);

/// Throws Error when a CLICK targets a document not clicked in that query or
/// when an interval would be negative.
DerivedMetrics derive_metrics(const TaskSession& session);

}  // namespace usejudge
