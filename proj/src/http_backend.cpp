#include "usejudge/http_backend.hpp"

#include <cctype>
#include <cstdlib>
#include <string_view>

#include <httplib.h>

#include "usejudge/error.hpp"

namespace usejudge {

using nlohmann::json;

namespace {

// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string encode_path_segment(std::string_view text) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 0x0F];
    }
  }
  return out;
}

}  // namespace

json build_request_body(HttpProvider provider, const std::string& model,
                        const ChatRequest& request) {
  const DecodingParams& d = request.decoding;
  if (provider == HttpProvider::kBedrockConverse) {
    json body;
    body["system"] = json::array({{{"text", request.system}}});
    body["messages"] =
        json::array({{{"role", "user"}, {"content", json::array({{{"text", request.user}}})}}});
    body["inferenceConfig"] = {
        {"temperature", d.temperature}, {"topP", d.top_p}, {"maxTokens", d.max_tokens}};
    return body;
  }
  json body;
  body["model"] = model;
  body["messages"] = json::array({
      {{"role", "system"}, {"content", request.system}},
      {{"role", "user"}, {"content", request.user}},
  });
  body["temperature"] = d.temperature;
  body["top_p"] = d.top_p;
  body["max_tokens"] = d.max_tokens;
  return body;
}

ChatResponse parse_response_body(HttpProvider provider, const json& body) {
  try {
    ChatResponse out;
    if (provider == HttpProvider::kBedrockConverse) {
      for (const json& part : body.at("output").at("message").at("content")) {
        if (part.contains("text")) out.text += part.at("text").get<std::string>();
      }
      if (body.contains("usage")) {
        out.prompt_tokens = body["usage"].value("inputTokens", 0);
        out.completion_tokens = body["usage"].value("outputTokens", 0);
      }
      return out;
    }
    const json& content = body.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendError("response content is not text");
    out.text = content.get<std::string>();
    if (body.contains("usage")) {
      out.prompt_tokens = body["usage"].value("prompt_tokens", 0);
      out.completion_tokens = body["usage"].value("completion_tokens", 0);
    }
    return out;
  } catch (const json::exception& e) {
    throw BackendError(std::string("unexpected response body: ") + e.what());
  }
}

EndpointParts resolve_endpoint(HttpProvider provider, const std::string& endpoint,
                               const std::string& model) {
  const auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) {
    throw ConfigError("endpoint must be an absolute http(s) URL: '" + endpoint + "'");
  }
  const auto slash = endpoint.find('/', scheme + 3);
  EndpointParts parts;
  parts.origin = endpoint.substr(0, slash);
  parts.path = slash == std::string::npos ? "" : endpoint.substr(slash);
  if (provider == HttpProvider::kBedrockConverse) {
    while (!parts.path.empty() && parts.path.back() == '/') parts.path.pop_back();
    parts.path += "/model/" + encode_path_segment(model) + "/converse";
  } else if (parts.path.empty()) {
    parts.path = "/v1/chat/completions";
  }
  return parts;
}

HttpChatBackend::HttpChatBackend(const BackendConfig& config)
    : provider_(config.provider),
      model_(config.model),
      endpoint_(resolve_endpoint(config.provider, config.endpoint, config.model)),
      timeout_seconds_(config.timeout_seconds) {
  if (model_.empty()) throw ConfigError("http backend requires a model name");
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str())) api_key_ = key;
  }
}

ChatResponse HttpChatBackend::complete(const ChatRequest& request) {
  count_call();
  httplib::Client client(endpoint_.origin);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  client.set_write_timeout(timeout_seconds_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const std::string body = build_request_body(provider_, model_, request).dump();
  auto result = client.Post(endpoint_.path, headers, body, "application/json");
  if (!result) {
    throw BackendError("request to " + endpoint_.origin + endpoint_.path +
                       " failed: " + httplib::to_string(result.error()));
  }
  if (result->status < 200 || result->status >= 300) {
    throw BackendError("HTTP " + std::to_string(result->status) + " from " + endpoint_.origin +
                       endpoint_.path + ": " + result->body.substr(0, 500));
  }
  json parsed;
  try {
    parsed = json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw BackendError(std::string("response is not JSON: ") + e.what());
  }
  return parse_response_body(provider_, parsed);
}

std::string HttpChatBackend::identity() const {
  const char* provider = provider_ == HttpProvider::kOpenAiChat ? "openai" : "bedrock";
  return std::string("http:") + provider + ":" + model_ + "@" + endpoint_.origin + endpoint_.path;
}

}  // namespace usejudge
