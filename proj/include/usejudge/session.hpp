#pragma once

// Canonical data model for search sessions: one user working on one task,
// the queries they issued, the documents they clicked and the raw
// interaction events recorded while doing so.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace usejudge {

inline constexpr std::string_view kCorpusFormatVersion = "1";

enum class EventKind { kClick, kScroll, kHover, kMove, kQueryIssue, kSessionEnd };

enum class DatasetTag { kThuirStyle, kQrefStyle, kSynthetic };

std::string_view to_string(EventKind kind);
std::string_view to_string(DatasetTag tag);
std::optional<EventKind> parse_event_kind(std::string_view text);
std::optional<DatasetTag> parse_dataset_tag(std::string_view text);

struct InteractionEvent {
  EventKind kind = EventKind::kMove;
  std::int64_t timestamp_ms = 0;  // relative to session start
  std::optional<std::string> target;

  bool operator==(const InteractionEvent&) const = default;
};

struct ClickedDocument {
  std::string doc_id;
  std::string url;
  std::string title;
  std::string summary;  // SERP snippet
  int rank = 1;
  std::optional<int> task_relevance;
  std::optional<int> query_relevance;
  int usefulness_human = 0;

  bool operator==(const ClickedDocument&) const = default;
};

struct QueryRecord {
  std::string query_text;
  int query_position = 1;
  std::vector<ClickedDocument> clicked_documents;
  std::optional<int> query_satisfaction;
  std::vector<InteractionEvent> events;

  bool operator==(const QueryRecord&) const = default;
};

struct TaskSession {
  std::string user_id;
  std::string task_id;
  std::optional<std::string> task_description;
  std::vector<QueryRecord> queries;
  std::optional<int> session_satisfaction;
  DatasetTag dataset_tag = DatasetTag::kSynthetic;

  std::size_t click_count() const;
  bool operator==(const TaskSession&) const = default;
};

struct CorpusSummary {
  std::size_t sessions = 0;
  std::size_t queries = 0;
  std::size_t clicks = 0;       // distinct clicked documents (by doc_id)
  std::size_t data_points = 0;  // ClickedDocument entries
  std::size_t users = 0;
  std::size_t tasks = 0;

  bool operator==(const CorpusSummary&) const = default;
};

struct Corpus {
  std::vector<TaskSession> sessions;
  std::string source_path;
  std::string format_version{kCorpusFormatVersion};
  CorpusSummary summary;

  bool operator==(const Corpus&) const = default;
};

CorpusSummary summarize(const std::vector<TaskSession>& sessions);

/// One broken invariant. `field` is a path such as `queries[0].clicked_documents[2].rank`.
struct Violation {
  std::string field;
  std::string constraint;
  std::string location;  // "user_id/task_id"

  std::string to_string() const;
  bool operator==(const Violation&) const = default;
};

/// Checks every per-session invariant; an empty result means the session is valid.
std::vector<Violation> validate_session(const TaskSession& session);

/// Reads a canonical JSONL corpus. Throws InputError with the offending line
/// on malformed records, invariant violations, duplicate (user_id, task_id)
/// pairs or an empty file.
Corpus ingest_corpus(const std::filesystem::path& path);

/// Parses corpus text already in memory; `source` is used for provenance only.
Corpus parse_corpus(std::string_view text, std::string source = "<memory>");

nlohmann::json session_to_json(const TaskSession& session);

/// `line` is used for surrogate task ids and error messages.
TaskSession session_from_json(const nlohmann::json& record, std::size_t line);

std::string serialize_corpus(const Corpus& corpus);
void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace usejudge
