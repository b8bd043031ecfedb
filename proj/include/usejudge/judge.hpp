#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "usejudge/backend.hpp"
#include "usejudge/error.hpp"
#include "usejudge/batching.hpp"
#include "usejudge/prompting.hpp"

namespace usejudge {

/// Reads the last `LABELS:` line of a response. Throws ResponseParseError
/// (carrying the raw text) when the trailer is missing, the count differs
/// from `expected_count` or a label lies outside 0-3.
std::vector<int> parse_labels(std::string_view response, std::size_t expected_count);

/// Cache key over (rendered prompt, backend identity, decoding params).
std::string cache_key(const RenderedPrompt& prompt, std::string_view backend_identity,
                      const DecodingParams& decoding);

/// Response text plus what was reported when it was first produced.
struct StoredResponse {
  std::string ref;  // content hash of the raw text
  std::string text;
  std::int64_t wall_ms = 0;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
};

/// Hash-addressed raw responses under `dir` (one `<hash>.txt` per distinct
/// text) and an append-only `index.jsonl` mapping cache keys to them.
/// The first response stored for a key wins. Safe for concurrent use.
class ResponseStore {
 public:
  explicit ResponseStore(std::filesystem::path dir);

  std::optional<StoredResponse> lookup(const std::string& key) const;

  /// Stores `response` for `key` unless the key is already present, and
  /// returns whatever is stored for the key afterwards.
  StoredResponse put(const std::string& key, const ChatResponse& response, std::int64_t wall_ms);

  std::string read(const std::string& ref) const;
  std::size_t size() const;
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  mutable std::mutex mutex_;
  std::map<std::string, StoredResponse> index_;
};

struct JudgmentRecord {
  std::string batch_id;
  std::size_t item_index = 0;
  int predicted_label = 0;
  std::string raw_response_ref;
  std::string backend;
  std::string template_version;
  std::int64_t wall_ms = 0;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;

  bool operator==(const JudgmentRecord&) const = default;
};

nlohmann::json record_to_json(const JudgmentRecord& record);
JudgmentRecord record_from_json(const nlohmann::json& value);

/// Raised when a response arrived but could not be used; `ref` points at it.
class JudgeResponseError : public ResponseParseError {
 public:
  JudgeResponseError(const ResponseParseError& cause, std::string ref)
      : ResponseParseError(cause.what(), cause.raw()), ref_(std::move(ref)) {}
  const std::string& ref() const noexcept { return ref_; }

 private:
  std::string ref_;
};

struct JudgeOutcome {
  std::vector<JudgmentRecord> records;
  bool cache_hit = false;
  int attempts = 0;  // backend attempts made for this batch (0 on cache hit)
};

/// Renders, dispatches (through the cache) and parses one batch at a time.
class Judge {
 public:
  Judge(Dispatcher& dispatcher, ResponseStore& store, DecodingParams decoding,
        const PromptTemplate& tmpl = PromptTemplate::builtin());

  /// One record per item. Throws ConfigError for unrenderable input,
  /// BackendError when retries run out, JudgeResponseError when the
  /// response cannot be parsed into exactly one label per item.
  JudgeOutcome judge_batch(const JudgmentBatch& batch, JudgeMethod method,
                           const RubricDocument* rubric);

 private:
  Dispatcher& dispatcher_;
  ResponseStore& store_;
  DecodingParams decoding_;
  const PromptTemplate& template_;
};

}  // namespace usejudge
