#include "usejudge/session.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <utility>

#include "usejudge/error.hpp"

namespace usejudge {

using nlohmann::json;

namespace {

constexpr std::pair<EventKind, std::string_view> kEventNames[] = {
    {EventKind::kClick, "CLICK"},           {EventKind::kScroll, "SCROLL"},
    {EventKind::kHover, "HOVER"},           {EventKind::kMove, "MOVE"},
    {EventKind::kQueryIssue, "QUERY_ISSUE"}, {EventKind::kSessionEnd, "SESSION_END"},
};

constexpr std::pair<DatasetTag, std::string_view> kDatasetNames[] = {
    {DatasetTag::kThuirStyle, "THUIR_STYLE"},
    {DatasetTag::kQrefStyle, "QREF_STYLE"},
    {DatasetTag::kSynthetic, "SYNTHETIC"},
};

bool requires_target(EventKind kind) {
  return kind == EventKind::kClick || kind == EventKind::kHover;
}

bool forbids_target(EventKind kind) {
  return kind == EventKind::kQueryIssue || kind == EventKind::kSessionEnd;
}

// Field accessors that turn type mismatches into InputErrors naming the field.
class RecordReader {
 public:
  RecordReader(const json& object, std::string path, std::size_t line)
      : object_(object), path_(std::move(path)), line_(line) {
    if (!object_.is_object()) fail(path_.empty() ? "record" : path_, "must be an object");
  }

  std::string str(const char* key) const {
    const json& value = at(key);
    if (!value.is_string()) fail(key, "must be a string");
    return value.get<std::string>();
  }

  std::optional<std::string> opt_str(const char* key) const {
    if (!has(key)) return std::nullopt;
    return str(key);
  }

  std::int64_t integer(const char* key) const {
    const json& value = at(key);
    if (!value.is_number_integer()) fail(key, "must be an integer");
    return value.get<std::int64_t>();
  }

  std::optional<int> opt_int(const char* key) const {
    if (!has(key)) return std::nullopt;
    return static_cast<int>(integer(key));
  }

  const json& array(const char* key) const {
    const json& value = at(key);
    if (!value.is_array()) fail(key, "must be an array");
    return value;
  }

  bool has(const char* key) const {
    auto it = object_.find(key);
    return it != object_.end() && !it->is_null();
  }

  std::string child(const char* key, std::size_t index) const {
    return prefix() + key + "[" + std::to_string(index) + "]";
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw InputError("field '" + prefix() + key + "' " + what, line_);
  }

 private:
  const json& at(const char* key) const {
    auto it = object_.find(key);
    if (it == object_.end() || it->is_null()) fail(key, "is required");
    return *it;
  }

  std::string prefix() const { return path_.empty() ? "" : path_ + "."; }

  const json& object_;
  std::string path_;
  std::size_t line_;
};

InteractionEvent event_from_json(const json& object, const std::string& path, std::size_t line) {
  RecordReader r(object, path, line);
  InteractionEvent event;
  const std::string kind = r.str("kind");
  auto parsed = parse_event_kind(kind);
  if (!parsed) r.fail("kind", "has unknown value '" + kind + "'");
  event.kind = *parsed;
  event.timestamp_ms = r.integer("timestamp");
  event.target = r.opt_str("target");
  return event;
}

ClickedDocument document_from_json(const json& object, const std::string& path,
                                   std::size_t line) {
  RecordReader r(object, path, line);
  ClickedDocument doc;
  doc.doc_id = r.str("doc_id");
  doc.url = r.str("url");
  doc.title = r.str("title");
  doc.summary = r.str("summary");
  doc.rank = static_cast<int>(r.integer("rank"));
  doc.task_relevance = r.opt_int("task_relevance");
  doc.query_relevance = r.opt_int("query_relevance");
  doc.usefulness_human = static_cast<int>(r.integer("usefulness_human"));
  return doc;
}

QueryRecord query_from_json(const json& object, const std::string& path, std::size_t line) {
  RecordReader r(object, path, line);
  QueryRecord query;
  query.query_text = r.str("query_text");
  query.query_position = static_cast<int>(r.integer("query_position"));
  query.query_satisfaction = r.opt_int("query_satisfaction");
  const json& docs = r.array("clicked_documents");
  for (std::size_t i = 0; i < docs.size(); ++i) {
    query.clicked_documents.push_back(
        document_from_json(docs[i], r.child("clicked_documents", i), line));
  }
  if (r.has("events")) {
    const json& events = r.array("events");
    for (std::size_t i = 0; i < events.size(); ++i) {
      query.events.push_back(event_from_json(events[i], r.child("events", i), line));
    }
  }
  return query;
}

template <typename T>
void put_optional(json& out, const char* key, const std::optional<T>& value) {
  if (value) out[key] = *value;
}

std::string location_of(const TaskSession& session) {
  return session.user_id + "/" + session.task_id;
}

}  // namespace

std::string_view to_string(EventKind kind) {
  for (const auto& [k, name] : kEventNames) {
    if (k == kind) return name;
  }
  return "UNKNOWN";
}

std::string_view to_string(DatasetTag tag) {
  for (const auto& [t, name] : kDatasetNames) {
    if (t == tag) return name;
  }
  return "UNKNOWN";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (const auto& [k, name] : kEventNames) {
    if (name == text) return k;
  }
  return std::nullopt;
}

std::optional<DatasetTag> parse_dataset_tag(std::string_view text) {
  for (const auto& [t, name] : kDatasetNames) {
    if (name == text) return t;
  }
  return std::nullopt;
}

std::size_t TaskSession::click_count() const {
  std::size_t n = 0;
  for (const auto& q : queries) n += q.clicked_documents.size();
  return n;
}

CorpusSummary summarize(const std::vector<TaskSession>& sessions) {
  CorpusSummary s;
  std::set<std::string> docs, users, tasks;
  s.sessions = sessions.size();
  for (const auto& session : sessions) {
    users.insert(session.user_id);
    tasks.insert(session.task_id);
    s.queries += session.queries.size();
    for (const auto& q : session.queries) {
      s.data_points += q.clicked_documents.size();
      for (const auto& d : q.clicked_documents) docs.insert(d.doc_id);
    }
  }
  s.clicks = docs.size();
  s.users = users.size();
  s.tasks = tasks.size();
  return s;
}

std::string Violation::to_string() const {
  return field + ": " + constraint + " [session " + location + "]";
}

std::vector<Violation> validate_session(const TaskSession& session) {
  std::vector<Violation> out;
  const std::string where = location_of(session);
  auto add = [&](std::string field, std::string constraint) {
    out.push_back({std::move(field), std::move(constraint), where});
  };
  auto check_range = [&](const std::optional<int>& value, int lo, int hi,
                         const std::string& field, const std::string& what) {
    if (value && (*value < lo || *value > hi)) {
      add(field, what + " out of range " + std::to_string(lo) + "–" + std::to_string(hi));
    }
  };

  if (session.user_id.empty()) add("user_id", "user_id must be non-empty");
  if (session.task_id.empty()) add("task_id", "task_id must be non-empty");
  if (session.queries.empty()) add("queries", "queries must be non-empty");
  check_range(session.session_satisfaction, 1, 5, "session_satisfaction", "satisfaction");

  int expected_position = 1;
  std::int64_t last_timestamp = 0;
  for (std::size_t qi = 0; qi < session.queries.size(); ++qi) {
    const QueryRecord& q = session.queries[qi];
    const std::string qpath = "queries[" + std::to_string(qi) + "]";

    if (q.query_position == expected_position) {
      ++expected_position;
    } else if (q.query_position < expected_position) {
      add(qpath + ".query_position", "query_position duplicate or out of order");
    } else {
      add(qpath + ".query_position", "query_position gap");
      expected_position = q.query_position + 1;
    }
    check_range(q.query_satisfaction, 1, 5, qpath + ".query_satisfaction", "satisfaction");

    std::set<std::string> seen;
    for (std::size_t di = 0; di < q.clicked_documents.size(); ++di) {
      const ClickedDocument& d = q.clicked_documents[di];
      const std::string dpath = qpath + ".clicked_documents[" + std::to_string(di) + "]";
      if (d.doc_id.empty()) add(dpath + ".doc_id", "doc_id must be non-empty");
      if (!seen.insert(d.doc_id).second) {
        add(dpath + ".doc_id", "document listed twice in one query");
      }
      if (d.rank < 1) add(dpath + ".rank", "rank must be ≥ 1");
      check_range(d.task_relevance, 0, 3, dpath + ".task_relevance", "relevance");
      check_range(d.query_relevance, 0, 3, dpath + ".query_relevance", "relevance");
      check_range(d.usefulness_human, 0, 3, dpath + ".usefulness_human", "usefulness");
    }

    for (std::size_t ei = 0; ei < q.events.size(); ++ei) {
      const InteractionEvent& e = q.events[ei];
      const std::string epath = qpath + ".events[" + std::to_string(ei) + "]";
      const std::string kind{to_string(e.kind)};
      if (e.timestamp_ms < 0) {
        add(epath + ".timestamp", "timestamp must be ≥ 0");
      } else if (e.timestamp_ms < last_timestamp) {
        add(epath + ".timestamp", "timestamps must be non-decreasing");
      } else {
        last_timestamp = e.timestamp_ms;
      }
      if (requires_target(e.kind) && (!e.target || e.target->empty())) {
        add(epath + ".target", kind + " requires a target");
      }
      if (forbids_target(e.kind) && e.target) {
        add(epath + ".target", kind + " must not carry a target");
      }
      if (e.kind == EventKind::kQueryIssue && ei != 0) {
        add(epath + ".kind", "QUERY_ISSUE must be the first event of its query");
      }
      if (ei == 0 && e.kind != EventKind::kQueryIssue) {
        add(epath + ".kind", "query events must begin with QUERY_ISSUE");
      }
      const bool last_event = qi + 1 == session.queries.size() && ei + 1 == q.events.size();
      if (e.kind == EventKind::kSessionEnd && !last_event) {
        add(epath + ".kind", "SESSION_END must be the final event of the session");
      }
    }
  }
  return out;
}

json session_to_json(const TaskSession& session) {
  json out;
  out["format_version"] = kCorpusFormatVersion;
  out["user_id"] = session.user_id;
  out["task_id"] = session.task_id;
  put_optional(out, "task_description", session.task_description);
  put_optional(out, "session_satisfaction", session.session_satisfaction);
  out["dataset_tag"] = to_string(session.dataset_tag);
  json queries = json::array();
  for (const auto& q : session.queries) {
    json jq;
    jq["query_text"] = q.query_text;
    jq["query_position"] = q.query_position;
    put_optional(jq, "query_satisfaction", q.query_satisfaction);
    json docs = json::array();
    for (const auto& d : q.clicked_documents) {
      json jd;
      jd["doc_id"] = d.doc_id;
      jd["url"] = d.url;
      jd["title"] = d.title;
      jd["summary"] = d.summary;
      jd["rank"] = d.rank;
      put_optional(jd, "task_relevance", d.task_relevance);
      put_optional(jd, "query_relevance", d.query_relevance);
      jd["usefulness_human"] = d.usefulness_human;
      docs.push_back(std::move(jd));
    }
    jq["clicked_documents"] = std::move(docs);
    json events = json::array();
    for (const auto& e : q.events) {
      json je;
      je["kind"] = to_string(e.kind);
      je["timestamp"] = e.timestamp_ms;
      put_optional(je, "target", e.target);
      events.push_back(std::move(je));
    }
    jq["events"] = std::move(events);
    queries.push_back(std::move(jq));
  }
  out["queries"] = std::move(queries);
  return out;
}

TaskSession session_from_json(const json& record, std::size_t line) {
  RecordReader r(record, "", line);
  const std::string version = r.str("format_version");
  if (version != kCorpusFormatVersion) {
    r.fail("format_version", "is '" + version + "', expected '" +
                                 std::string(kCorpusFormatVersion) + "'");
  }
  TaskSession session;
  session.user_id = r.str("user_id");
  if (auto task = r.opt_str("task_id")) {
    session.task_id = *task;
  } else {
    // Task-free data: the session identifier stands in for the task.
    session.task_id = r.opt_str("session_id").value_or("session-" + std::to_string(line));
  }
  session.task_description = r.opt_str("task_description");
  session.session_satisfaction = r.opt_int("session_satisfaction");
  const std::string tag = r.str("dataset_tag");
  auto parsed_tag = parse_dataset_tag(tag);
  if (!parsed_tag) r.fail("dataset_tag", "has unknown value '" + tag + "'");
  session.dataset_tag = *parsed_tag;
  const json& queries = r.array("queries");
  for (std::size_t i = 0; i < queries.size(); ++i) {
    session.queries.push_back(query_from_json(queries[i], r.child("queries", i), line));
  }
  return session;
}

Corpus parse_corpus(std::string_view text, std::string source) {
  Corpus corpus;
  corpus.source_path = std::move(source);
  std::set<std::pair<std::string, std::string>> keys;
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    TaskSession session = session_from_json(record, line_no);
    auto violations = validate_session(session);
    if (!violations.empty()) {
      throw InputError(violations.front().to_string(), line_no);
    }
    if (!keys.emplace(session.user_id, session.task_id).second) {
      throw InputError("duplicate (user_id, task_id) pair [session " + session.user_id + "/" +
                           session.task_id + "]",
                       line_no);
    }
    corpus.sessions.push_back(std::move(session));
  }
  if (corpus.sessions.empty()) throw InputError("corpus is empty: " + corpus.source_path);
  corpus.summary = summarize(corpus.sessions);
  return corpus;
}

Corpus ingest_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_corpus(buffer.str(), path.string());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& session : corpus.sessions) {
    out += session_to_json(session).dump();
    out += '\n';
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write corpus file: " + path.string());
  out << serialize_corpus(corpus);
}

}  // namespace usejudge
