#include "usejudge/backend.hpp"

#include <fstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "usejudge/error.hpp"
#include "usejudge/hash.hpp"
#include "usejudge/http_backend.hpp"

namespace usejudge {

std::string DecodingParams::key() const {
  return fmt::format("temperature={};top_p={};max_tokens={}", temperature, top_p, max_tokens);
}

std::string labels_trailer(const std::vector<int>& labels) {
  std::string out = "LABELS: ";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(labels[i]);
  }
  return out;
}

ChatResponse EchoBackend::complete(const ChatRequest& request) {
  count_call();
  if (request.reference_labels.empty()) {
    throw BackendError("mock:echo: request carries no reference labels");
  }
  return {"Echoing reference labels.\n" + labels_trailer(request.reference_labels), {}, {}};
}

FixedBackend::FixedBackend(int label) : label_(label) {}

ChatResponse FixedBackend::complete(const ChatRequest& request) {
  count_call();
  const std::size_t n = request.expected_labels > 0 ? request.expected_labels : 1;
  return {labels_trailer(std::vector<int>(n, label_)), {}, {}};
}

std::string FixedBackend::identity() const { return "mock:fixed:" + std::to_string(label_); }

ScriptedBackend::ScriptedBackend(std::vector<Step> steps, std::string name)
    : steps_(std::move(steps)), name_(std::move(name)) {
  if (steps_.empty()) throw ConfigError("scripted backend needs at least one step");
  std::string canonical;
  for (const Step& step : steps_) {
    std::visit(
        [&](const auto& s) {
          using T = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<T, Echo>) canonical += "ECHO\n";
          if constexpr (std::is_same_v<T, Fail>) canonical += "FAIL " + s.message + "\n";
          if constexpr (std::is_same_v<T, Fixed>) canonical += "FIXED " + std::to_string(s.label) + "\n";
          if constexpr (std::is_same_v<T, Text>) canonical += "TEXT " + nlohmann::json(s.text).dump() + "\n";
        },
        step);
  }
  fingerprint_ = short_hash(canonical, 12);
}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open backend script: " + path);
  std::vector<Step> steps;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto space = line.find(' ');
    const std::string verb = line.substr(0, space);
    const std::string arg = space == std::string::npos ? "" : line.substr(space + 1);
    try {
      if (verb == "ECHO") {
        steps.emplace_back(Echo{});
      } else if (verb == "FAIL") {
        steps.emplace_back(Fail{arg.empty() ? "scripted failure" : arg});
      } else if (verb == "FIXED") {
        steps.emplace_back(Fixed{std::stoi(arg)});
      } else if (verb == "TEXT") {
        steps.emplace_back(Text{nlohmann::json::parse(arg).get<std::string>()});
      } else {
        throw ConfigError("unknown step '" + verb + "'");
      }
    } catch (const std::exception& e) {
      throw ConfigError(fmt::format("{}:{}: bad script step: {}", path, line_no, e.what()));
    }
  }
  return std::make_unique<ScriptedBackend>(std::move(steps), "scripted");
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request) {
  count_call();
  Step step;
  {
    std::lock_guard lock(mutex_);
    step = steps_[std::min(next_, steps_.size() - 1)];
    ++next_;
  }
  return std::visit(
      [&](const auto& s) -> ChatResponse {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Echo>) {
          if (request.reference_labels.empty()) {
            throw BackendError("scripted echo: request carries no reference labels");
          }
          return {labels_trailer(request.reference_labels), {}, {}};
        } else if constexpr (std::is_same_v<T, Fail>) {
          throw BackendError(s.message);
        } else if constexpr (std::is_same_v<T, Fixed>) {
          const std::size_t n = request.expected_labels > 0 ? request.expected_labels : 1;
          return {labels_trailer(std::vector<int>(n, s.label)), {}, {}};
        } else {
          return {s.text, {}, {}};
        }
      },
      step);
}

std::string ScriptedBackend::identity() const { return "mock:" + name_ + ":" + fingerprint_; }

std::chrono::milliseconds RetryPolicy::delay_after(int attempt) const {
  if (backoff.empty() || attempt < 1) return std::chrono::milliseconds(0);
  const std::size_t index = std::min<std::size_t>(attempt - 1, backoff.size() - 1);
  return backoff[index];
}

BackendKind parse_backend_kind(std::string_view descriptor, BackendConfig& config) {
  if (descriptor == "echo") {
    config.kind = BackendKind::kMockEcho;
  } else if (descriptor.starts_with("fixed:")) {
    const std::string value(descriptor.substr(6));
    if (value.size() != 1 || value[0] < '0' || value[0] > '3') {
      throw ConfigError("fixed backend label must be 0-3, got '" + value + "'");
    }
    config.kind = BackendKind::kMockFixed;
    config.fixed_label = value[0] - '0';
  } else if (descriptor.starts_with("scripted:")) {
    config.kind = BackendKind::kMockScripted;
    config.script_path = std::string(descriptor.substr(9));
  } else if (descriptor == "http" || descriptor == "http:openai") {
    config.kind = BackendKind::kHttpChat;
    config.provider = HttpProvider::kOpenAiChat;
  } else if (descriptor == "http:bedrock") {
    config.kind = BackendKind::kHttpChat;
    config.provider = HttpProvider::kBedrockConverse;
  } else {
    throw ConfigError("unknown backend '" + std::string(descriptor) +
                      "' (expected echo, fixed:<n>, scripted:<file>, http, http:bedrock)");
  }
  return config.kind;
}

std::string describe_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendKind::kMockEcho:
      return "echo";
    case BackendKind::kMockFixed:
      return "fixed:" + std::to_string(config.fixed_label);
    case BackendKind::kMockScripted:
      return "scripted:" + config.script_path;
    case BackendKind::kHttpChat:
      return config.provider == HttpProvider::kOpenAiChat ? "http" : "http:bedrock";
  }
  return "unknown";
}

std::unique_ptr<ChatBackend> make_backend(const BackendConfig& config) {
  switch (config.kind) {
    case BackendKind::kMockEcho:
      return std::make_unique<EchoBackend>();
    case BackendKind::kMockFixed:
      return std::make_unique<FixedBackend>(config.fixed_label);
    case BackendKind::kMockScripted:
      return ScriptedBackend::from_file(config.script_path);
    case BackendKind::kHttpChat:
      return std::make_unique<HttpChatBackend>(config);
  }
  throw ConfigError("unsupported backend kind");
}

RateLimiter::RateLimiter(int requests_per_minute) {
  if (requests_per_minute > 0) {
    interval_ = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::minutes(1)) /
                requests_per_minute;
  }
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

Dispatcher::Dispatcher(ChatBackend& backend, RetryPolicy retry, RateLimit rate)
    : backend_(backend), retry_(std::move(retry)), rate_(rate), limiter_(rate.requests_per_minute) {
  if (retry_.max_attempts < 1) throw ConfigError("retry policy needs at least one attempt");
}

Dispatcher::Result Dispatcher::call(const ChatRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  std::string last_failure;
  for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
    limiter_.acquire();
    try {
      Result result;
      result.response = backend_.complete(request);
      result.attempts = attempt;
      result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      if (attempt > 1) {
        spdlog::info("{}: succeeded after {} retr{}", backend_.identity(), attempt - 1,
                     attempt == 2 ? "y" : "ies");
      }
      return result;
    } catch (const BackendError& e) {
      last_failure = e.what();
      spdlog::warn("{}: attempt {}/{} failed: {}", backend_.identity(), attempt,
                   retry_.max_attempts, last_failure);
    }
    if (attempt < retry_.max_attempts) std::this_thread::sleep_for(retry_.delay_after(attempt));
  }
  throw BackendError(fmt::format("{}: giving up after {} attempt(s): {}", backend_.identity(),
                                 retry_.max_attempts, last_failure));
}

}  // namespace usejudge
