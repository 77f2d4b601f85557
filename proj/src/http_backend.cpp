#include "citepref/http_backend.hpp"

#include <cstdlib>

#include "httplib.h"

namespace citepref {

namespace {

constexpr const char* kToolCallId = "call_web_search_0";

Json search_tool_schema() {
  return Json{{"type", "object"},
              {"properties", {{"query", {{"type", "string"}, {"description", "Search query"}}}}},
              {"required", {"query"}}};
}

std::string default_path(ApiDialect d) {
  return d == ApiDialect::OpenAIChat ? "/v1/chat/completions" : "/v1/messages";
}

std::string default_limit_field(ApiDialect d) {
  return d == ApiDialect::OpenAIChat ? "max_completion_tokens" : "max_tokens";
}

}  // namespace

ApiDialect parse_dialect(std::string_view s) {
  if (s == "openai" || s == "openai-chat") return ApiDialect::OpenAIChat;
  if (s == "anthropic" || s == "anthropic-messages") return ApiDialect::AnthropicMessages;
  throw std::invalid_argument("unknown API dialect \"" + std::string(s) + "\" (expected openai or anthropic)");
}

Json build_request_body(const HttpBackendConfig& config, const MessageSequence& m) {
  const std::string arguments = Json{{"query", m.tool_query}}.dump();
  const std::string results = tool_response_text(m);
  const std::string limit_field =
      config.output_limit_field.empty() ? default_limit_field(config.dialect) : config.output_limit_field;

  Json body;
  body["model"] = config.model;
  body[limit_field] = config.max_output_tokens;
  if (config.temperature) body["temperature"] = *config.temperature;

  if (config.dialect == ApiDialect::OpenAIChat) {
    body["messages"] = Json::array({
        {{"role", "system"}, {"content", m.system}},
        {{"role", "user"}, {"content", m.user}},
        {{"role", "assistant"},
         {"content", nullptr},
         {"tool_calls",
          Json::array({{{"id", kToolCallId},
                        {"type", "function"},
                        {"function", {{"name", m.tool_name}, {"arguments", arguments}}}}})}},
        {{"role", "tool"}, {"tool_call_id", kToolCallId}, {"content", results}},
    });
    body["tools"] = Json::array({{{"type", "function"},
                                  {"function",
                                   {{"name", m.tool_name},
                                    {"description", "Search the web"},
                                    {"parameters", search_tool_schema()}}}}});
  } else {
    body["system"] = m.system;
    body["messages"] = Json::array({
        {{"role", "user"}, {"content", m.user}},
        {{"role", "assistant"},
         {"content",
          Json::array({{{"type", "tool_use"},
                        {"id", kToolCallId},
                        {"name", m.tool_name},
                        {"input", {{"query", m.tool_query}}}}})}},
        {{"role", "user"},
         {"content", Json::array({{{"type", "tool_result"}, {"tool_use_id", kToolCallId}, {"content", results}}})}},
    });
    body["tools"] = Json::array({{{"name", m.tool_name},
                                  {"description", "Search the web"},
                                  {"input_schema", search_tool_schema()}}});
  }
  return body;
}

std::string parse_response_text(ApiDialect dialect, const Json& body) {
  auto fail = [](const std::string& why) { return BackendError(BackendError::Kind::Permanent, why); };
  auto join_parts = [](const Json& parts) {
    std::string text;
    for (const auto& p : parts) {
      if (p.is_object() && p.value("type", "") == "text" && p.contains("text") && p["text"].is_string()) {
        if (!text.empty()) text += "\n";
        text += p["text"].get<std::string>();
      }
    }
    return text;
  };
  if (!body.is_object()) throw fail("response is not a JSON object");
  if (dialect == ApiDialect::OpenAIChat) {
    if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty()) {
      throw fail("response has no choices");
    }
    const Json& msg = body["choices"][0].value("message", Json::object());
    const Json content = msg.value("content", Json());
    if (content.is_string()) return content.get<std::string>();
    if (content.is_array()) return join_parts(content);
    throw fail("response message has no text content");
  }
  if (!body.contains("content") || !body["content"].is_array()) throw fail("response has no content blocks");
  return join_parts(body["content"]);
}

std::optional<BackendError::Kind> classify_status(int status) {
  if (status >= 200 && status < 300) return std::nullopt;
  if (status == 401 || status == 403) return BackendError::Kind::Auth;
  if (status == 408 || status == 409 || status == 429 || status >= 500) return BackendError::Kind::Transient;
  return BackendError::Kind::Permanent;
}

HttpBackend::HttpBackend(HttpBackendConfig config)
    : config_(std::move(config)), limiter_(config_.requests_per_second) {
  if (config_.base_url.empty()) throw std::invalid_argument("backend " + config_.id + ": base_url is required");
  if (config_.model.empty()) throw std::invalid_argument("backend " + config_.id + ": model is required");
}

Completion HttpBackend::complete(const MessageSequence& messages, const TrialContext&) {
  const char* token = config_.token_env.empty() ? nullptr : std::getenv(config_.token_env.c_str());
  if (!config_.token_env.empty() && (token == nullptr || *token == '\0')) {
    throw BackendError(BackendError::Kind::Auth, "environment variable " + config_.token_env + " is not set");
  }

  httplib::Headers headers;
  if (token != nullptr) {
    if (config_.dialect == ApiDialect::OpenAIChat) {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    } else {
      headers.emplace("x-api-key", token);
    }
  }
  if (config_.dialect == ApiDialect::AnthropicMessages) headers.emplace("anthropic-version", "2023-06-01");

  const std::string payload = build_request_body(config_, messages).dump();
  const std::string path = config_.path.empty() ? default_path(config_.dialect) : config_.path;

  limiter_.acquire();
  httplib::Client client(config_.base_url);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  auto res = client.Post(path, headers, payload, "application/json");
  if (!res) {
    throw BackendError(BackendError::Kind::Transient, "transport error: " + httplib::to_string(res.error()));
  }
  if (auto kind = classify_status(res->status)) {
    throw BackendError(*kind, "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300), res->status);
  }
  Json body;
  try {
    body = Json::parse(res->body);
  } catch (const Json::parse_error& e) {
    throw BackendError(BackendError::Kind::Permanent, std::string("response is not JSON: ") + e.what(), res->status);
  }
  Completion c;
  c.text = parse_response_text(config_.dialect, body);
  Json meta{{"status", res->status},
            {"model", body.value("model", config_.model)},
            {"temperature", config_.temperature ? Json(*config_.temperature) : Json("backend default")}};
  if (body.contains("usage")) meta["usage"] = body["usage"];
  c.meta = meta.dump();
  return c;
}

}  // namespace citepref
