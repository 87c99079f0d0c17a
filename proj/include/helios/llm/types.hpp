#pragma once

#include <cctype>
#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace helios::llm {

enum class Role { System, User, Assistant, Tool };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    case Role::Tool: return "tool";
  }
  return "?";
}

inline Role role_from_name(const std::string& s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  if (s == "tool") return Role::Tool;
  throw std::invalid_argument("unknown chat role: " + s);
}

struct ToolCall {
  std::string id;
  std::string name;
  std::string arguments;  // raw JSON text as the model produced it

  friend bool operator==(const ToolCall&, const ToolCall&) = default;
};

struct ChatMessage {
  Role role = Role::User;
  std::optional<std::string> content;
  std::vector<ToolCall> tool_calls;      // assistant only
  std::optional<std::string> tool_call_id;  // tool only

  static ChatMessage system(std::string text) { return {Role::System, std::move(text), {}, {}}; }
  static ChatMessage user(std::string text) { return {Role::User, std::move(text), {}, {}}; }
  static ChatMessage assistant(std::string text) { return {Role::Assistant, std::move(text), {}, {}}; }
  static ChatMessage tool(std::string call_id, std::string text) { return {Role::Tool, std::move(text), {}, std::move(call_id)}; }

  void validate() const {
    if (role == Role::Tool && (!tool_call_id || tool_call_id->empty())) throw std::invalid_argument("tool message needs a tool_call_id");
    if (role != Role::Tool && tool_call_id) throw std::invalid_argument("only tool messages carry a tool_call_id");
    if (role != Role::Assistant && !tool_calls.empty()) throw std::invalid_argument("only assistant messages carry tool_calls");
    if (role != Role::Assistant && !content) throw std::invalid_argument(std::string(role_name(role)) + " message needs content");
    if (role == Role::Assistant && !content && tool_calls.empty()) throw std::invalid_argument("assistant message is empty");
    for (const auto& c : tool_calls) {
      if (c.id.empty()) throw std::invalid_argument("tool call id must be non-empty");
      if (c.name.empty()) throw std::invalid_argument("tool call name must be non-empty");
    }
  }

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

struct ToolParam {
  std::string name;
  std::string type;  // number | string | boolean | object
  std::string description;
};

struct ToolSpec {
  std::string name;
  std::string description;
  std::vector<ToolParam> properties;
  std::vector<std::string> required;

  void validate() const {
    if (name.empty()) throw std::invalid_argument("tool spec name must be non-empty");
    for (char c : name) {
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) {
        throw std::invalid_argument("tool spec name is not an identifier: " + name);
      }
    }
    for (const auto& p : properties) {
      if (p.type != "number" && p.type != "string" && p.type != "boolean" && p.type != "object") {
        throw std::invalid_argument("tool " + name + ": unsupported parameter type " + p.type);
      }
    }
    for (const auto& r : required) {
      bool found = false;
      for (const auto& p : properties) found = found || p.name == r;
      if (!found) throw std::invalid_argument("tool " + name + ": required parameter " + r + " is not declared");
    }
  }
};

struct ProviderConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string credential_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  std::chrono::duration<double> timeout{60.0};
  int rate_limit_requests = 0;  // 0 disables the limiter
  std::chrono::duration<double> rate_limit_interval{60.0};
  int max_requests = 50;
  long long max_total_tokens = 200'000;
  int max_retries = 4;  // for 429 / transport failures
  std::chrono::duration<double> backoff_base{1.0};
  std::chrono::duration<double> backoff_cap{30.0};

  void validate() const {
    if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
    if (!(timeout.count() > 0)) throw std::invalid_argument("timeout must be > 0");
    if (rate_limit_requests < 0) throw std::invalid_argument("rate_limit_requests must be >= 0");
    if (rate_limit_requests > 0 && !(rate_limit_interval.count() > 0)) throw std::invalid_argument("rate_limit_interval must be > 0");
    if (max_requests < 0 || max_total_tokens < 0) throw std::invalid_argument("budget limits must be >= 0");
    if (max_retries < 0) throw std::invalid_argument("max_retries must be >= 0");
  }
};

struct RgbExtraction {
  double R = 0.0;
  double G = 0.0;
  double B = 0.0;
  int attempts = 1;
  std::string raw;  // accepted assistant content
};

class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProviderError : public std::runtime_error {
 public:
  ProviderError(const std::string& what, int status = 0, std::string body = {})
      : std::runtime_error(what), status_(status), body_(std::move(body)) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ExtractionError : public std::runtime_error {
 public:
  ExtractionError(const std::string& what, std::string raw) : std::runtime_error(what), raw_(std::move(raw)) {}
  const std::string& raw() const { return raw_; }

 private:
  std::string raw_;
};

class LoopError : public std::runtime_error {
 public:
  LoopError(const std::string& what, std::vector<ChatMessage> transcript)
      : std::runtime_error(what), transcript_(std::move(transcript)) {}
  const std::vector<ChatMessage>& transcript() const { return transcript_; }

 private:
  std::vector<ChatMessage> transcript_;
};

}  // namespace helios::llm
