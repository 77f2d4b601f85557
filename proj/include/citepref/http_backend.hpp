#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "citepref/backend.hpp"
#include "citepref/retry.hpp"
#include "citepref/util.hpp"

namespace citepref {

/// Request/response field mapping. The text the model reads is identical across dialects.
enum class ApiDialect { OpenAIChat, AnthropicMessages };

ApiDialect parse_dialect(std::string_view s);

struct HttpBackendConfig {
  std::string id;
  ApiDialect dialect = ApiDialect::OpenAIChat;
  /// scheme://host[:port]
  std::string base_url;
  /// Empty selects the dialect default (/v1/chat/completions or /v1/messages).
  std::string path;
  std::string model;
  /// Name of the environment variable holding the credential. Secrets never live in config.
  std::string token_env;
  std::chrono::seconds timeout{120};
  int max_output_tokens = 1024;
  /// Unset: the backend's documented default applies.
  std::optional<double> temperature;
  /// Empty selects the dialect default (max_completion_tokens / max_tokens).
  std::string output_limit_field;
  double requests_per_second = 0.0;
};

/// Request body for the four-turn sequence: system, user, web_search call, tool result.
Json build_request_body(const HttpBackendConfig& config, const MessageSequence& messages);

/// Assistant text from a response body; throws BackendError(Permanent) when absent.
std::string parse_response_text(ApiDialect dialect, const Json& body);

/// Maps an HTTP status to an error kind; nullopt for 2xx.
std::optional<BackendError::Kind> classify_status(int status);

class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(HttpBackendConfig config);
  std::string id() const override { return config_.id; }
  Completion complete(const MessageSequence& messages, const TrialContext& context) override;
  const HttpBackendConfig& config() const { return config_; }

 private:
  HttpBackendConfig config_;
  RateLimiter limiter_;
};

}  // namespace citepref
