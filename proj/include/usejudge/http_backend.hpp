#pragma once

// Chat-completion client over HTTP(S). The request and response bodies are
// mapped per provider; everything else (retries, caching) lives above.

#include <string>

#include <nlohmann/json.hpp>

#include "usejudge/backend.hpp"

namespace usejudge {

/// Body for one chat request. Decoding parameters are always sent explicitly.
nlohmann::json build_request_body(HttpProvider provider, const std::string& model,
                                  const ChatRequest& request);

/// Extracts the completion text and token usage. Throws BackendError when the
/// body does not have the provider's shape.
ChatResponse parse_response_body(HttpProvider provider, const nlohmann::json& body);

struct EndpointParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

/// Splits the endpoint URL; for Bedrock the path becomes /model/<model>/converse.
EndpointParts resolve_endpoint(HttpProvider provider, const std::string& endpoint,
                               const std::string& model);

class HttpChatBackend final : public ChatBackend {
 public:
  /// Reads the API key from the environment variable named in the config
  /// (an unset variable means no Authorization header).
  explicit HttpChatBackend(const BackendConfig& config);

  ChatResponse complete(const ChatRequest& request) override;
  std::string identity() const override;

 private:
  HttpProvider provider_;
  std::string model_;
  EndpointParts endpoint_;
  std::string api_key_;
  int timeout_seconds_;
};

}  // namespace usejudge
