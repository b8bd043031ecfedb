#pragma once

// Model backends: the HTTP chat client plus in-process mocks used for tests
// and dry runs. All backends are safe to call from several threads.

#include <atomic>
#include <chrono>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace usejudge {

struct DecodingParams {
  double temperature = 0.0;
  double top_p = 1.0;
  int max_tokens = 2048;

  /// Stable text form used in cache keys and manifests.
  std::string key() const;
  bool operator==(const DecodingParams&) const = default;
};

struct ChatRequest {
  std::string system;
  std::string user;
  DecodingParams decoding;
  // Mock-only context; never sent over the wire and not part of cache keys.
  std::size_t expected_labels = 0;
  std::vector<int> reference_labels;
};

struct ChatResponse {
  std::string text;
  std::optional<int> prompt_tokens;
  std::optional<int> completion_tokens;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  /// Throws BackendError on transport failure.
  virtual ChatResponse complete(const ChatRequest& request) = 0;

  /// Identifies backend and model, e.g. "http:openai:gpt-4o-mini@https://...".
  virtual std::string identity() const = 0;

  /// Number of complete() calls made so far (including failed ones).
  std::size_t call_count() const { return calls_.load(); }

 protected:
  void count_call() { calls_.fetch_add(1); }

 private:
  std::atomic<std::size_t> calls_{0};
};

std::string labels_trailer(const std::vector<int>& labels);

/// Answers every request with the reference labels it carries.
class EchoBackend final : public ChatBackend {
 public:
  ChatResponse complete(const ChatRequest& request) override;
  std::string identity() const override { return "mock:echo"; }
};

/// Answers every item with the same label.
class FixedBackend final : public ChatBackend {
 public:
  explicit FixedBackend(int label);
  ChatResponse complete(const ChatRequest& request) override;
  std::string identity() const override;

 private:
  int label_;
};

/// Plays back a script; the last step repeats once the script is exhausted.
class ScriptedBackend final : public ChatBackend {
 public:
  struct Echo {};
  struct Fail {
    std::string message;
  };
  struct Fixed {
    int label;
  };
  struct Text {
    std::string text;
  };
  using Step = std::variant<Echo, Fail, Fixed, Text>;

  explicit ScriptedBackend(std::vector<Step> steps, std::string name = "scripted");

  /// Script file: one step per line, `ECHO`, `FAIL <message>`, `FIXED <n>` or
  /// `TEXT <json string>`; `#` starts a comment.
  static std::unique_ptr<ScriptedBackend> from_file(const std::string& path);

  ChatResponse complete(const ChatRequest& request) override;
  std::string identity() const override;

 private:
  std::vector<Step> steps_;
  std::string name_;
  std::string fingerprint_;
  std::mutex mutex_;
  std::size_t next_ = 0;
};

enum class BackendKind { kHttpChat, kMockEcho, kMockFixed, kMockScripted };

enum class HttpProvider { kOpenAiChat, kBedrockConverse };

struct RetryPolicy {
  int max_attempts = 3;
  std::vector<std::chrono::milliseconds> backoff{std::chrono::milliseconds(1000),
                                                 std::chrono::milliseconds(4000)};

  /// Delay before attempt `attempt + 1` (the last entry repeats).
  std::chrono::milliseconds delay_after(int attempt) const;
};

struct RateLimit {
  int max_inflight = 4;
  int requests_per_minute = 0;  // 0 = unlimited
};

/// Everything needed to build a backend and drive it.
struct BackendConfig {
  BackendKind kind = BackendKind::kMockEcho;
  int fixed_label = 0;
  std::string script_path;
  // HTTP only
  HttpProvider provider = HttpProvider::kOpenAiChat;
  std::string endpoint;
  std::string model;
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_seconds = 120;

  DecodingParams decoding;
  RetryPolicy retry;
  RateLimit rate;
};

/// Parses "echo", "fixed:<n>", "scripted:<path>" or "http". HTTP details
/// come from the other BackendConfig fields. Throws ConfigError.
BackendKind parse_backend_kind(std::string_view descriptor, BackendConfig& config);

std::string describe_backend(const BackendConfig& config);

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config);

/// Spaces requests to honor a requests-per-minute budget.
class RateLimiter {
 public:
  explicit RateLimiter(int requests_per_minute);
  void acquire();

 private:
  std::chrono::nanoseconds interval_{0};
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_{};
};

/// Calls a backend with retries and rate limiting.
class Dispatcher {
 public:
  Dispatcher(ChatBackend& backend, RetryPolicy retry, RateLimit rate);

  struct Result {
    ChatResponse response;
    int attempts = 0;
    std::chrono::milliseconds elapsed{0};
  };

  /// Throws BackendError with the last failure once retries are exhausted.
  Result call(const ChatRequest& request);

  ChatBackend& backend() { return backend_; }
  const RetryPolicy& retry() const { return retry_; }
  const RateLimit& rate() const { return rate_; }

 private:
  ChatBackend& backend_;
  RetryPolicy retry_;
  RateLimit rate_;
  RateLimiter limiter_;
};

}  // namespace usejudge
