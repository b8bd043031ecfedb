#include "usejudge/metrics.hpp"

#include <map>
#include <string>

#include "usejudge/error.hpp"

namespace usejudge {

namespace {

bool terminates_dwell(EventKind kind) {
  return kind == EventKind::kClick || kind == EventKind::kQueryIssue;
}

struct Interval {
  std::int64_t begin = 0;
  std::int64_t end = 0;
};

std::optional<std::int64_t> query_start(const QueryRecord& q) {
  if (q.events.empty()) return std::nullopt;
  return q.events.front().timestamp_ms;
}

std::vector<Interval> query_intervals(const TaskSession& session) {
  std::vector<Interval> out(session.queries.size());
  for (std::size_t i = 0; i < session.queries.size(); ++i) {
    const QueryRecord& q = session.queries[i];
    auto start = query_start(q);
    if (!start) continue;  // no events: zero-length interval

    std::optional<std::int64_t> end;
    for (std::size_t j = i + 1; j < session.queries.size() && !end; ++j) {
      end = query_start(session.queries[j]);
    }
    if (!end) {
      // Final query with events: SESSION_END if recorded, else the last event.
      end = q.events.back().timestamp_ms;
    }
    if (*end < *start) {
      throw Error("negative query interval at query_position " +
                  std::to_string(q.query_position) + " [session " + session.user_id + "/" +
                  session.task_id + "]");
    }
    out[i] = {*start, *end};
  }
  return out;
}

}  // namespace

std::int64_t url_dwell(const InteractionEvent& click, std::span<const InteractionEvent> subsequent,
                       std::int64_t query_end) {
  if (click.kind != EventKind::kClick) throw Error("url_dwell: event is not a CLICK");
  if (query_end < click.timestamp_ms) {
    throw Error("url_dwell: query end " + std::to_string(query_end) + " precedes click at " +
                std::to_string(click.timestamp_ms));
  }
  std::int64_t end = query_end;
  for (const auto& e : subsequent) {
    if (terminates_dwell(e.kind)) {
      end = e.timestamp_ms;
      break;
    }
  }
  if (end < click.timestamp_ms) throw Error("url_dwell: negative dwell interval");
  return end - click.timestamp_ms;
}

DerivedMetrics derive_metrics(const TaskSession& session) {
  DerivedMetrics m;
  const auto intervals = query_intervals(session);
  std::map<std::string, int> clicks_by_doc;

  m.queries.resize(session.queries.size());
  for (std::size_t qi = 0; qi < session.queries.size(); ++qi) {
    const QueryRecord& q = session.queries[qi];
    QueryMetrics& qm = m.queries[qi];
    qm.documents.resize(q.clicked_documents.size());
    qm.query_dwell_ms = intervals[qi].end - intervals[qi].begin;

    std::map<std::string, std::size_t> index;
    for (std::size_t di = 0; di < q.clicked_documents.size(); ++di) {
      index.emplace(q.clicked_documents[di].doc_id, di);
    }
    const std::span<const InteractionEvent> events(q.events);
    for (std::size_t ei = 0; ei < events.size(); ++ei) {
      const InteractionEvent& e = events[ei];
      if (e.kind != EventKind::kClick) continue;
      auto it = e.target ? index.find(*e.target) : index.end();
      if (it == index.end()) {
        throw Error("CLICK on document '" + e.target.value_or("") +
                    "' which is not among the clicked documents of query_position " +
                    std::to_string(q.query_position) + " [session " + session.user_id + "/" +
                    session.task_id + "]");
      }
      DocumentMetrics& dm = qm.documents[it->second];
      dm.url_dwell_ms += url_dwell(e, events.subspan(ei + 1), intervals[qi].end);
      dm.click_count += 1;
      clicks_by_doc[*e.target] += 1;
      m.task_clicks += 1;
    }
    m.task_dwell_ms += qm.query_dwell_ms;
  }

  if (m.task_clicks > 0) {
    for (std::size_t qi = 0; qi < session.queries.size(); ++qi) {
      const QueryRecord& q = session.queries[qi];
      for (std::size_t di = 0; di < q.clicked_documents.size(); ++di) {
        auto it = clicks_by_doc.find(q.clicked_documents[di].doc_id);
        const int clicks = it == clicks_by_doc.end() ? 0 : it->second;
        m.queries[qi].documents[di].url_ctr =
            static_cast<double>(clicks) / static_cast<double>(m.task_clicks);
      }
    }
  }
  if (!session.queries.empty()) {
    m.avg_query_dwell_ms =
        static_cast<double>(m.task_dwell_ms) / static_cast<double>(session.queries.size());
  }
  return m;
}

}  // namespace usejudge
