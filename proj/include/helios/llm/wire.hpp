#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "helios/llm/types.hpp"

namespace helios::llm {

using Json = nlohmann::ordered_json;

inline Json to_wire(const ChatMessage& m) {
  Json j{{"role", role_name(m.role)}};
  j["content"] = m.content ? Json(*m.content) : Json(nullptr);
  if (!m.tool_calls.empty()) {
    Json calls = Json::array();
    for (const auto& c : m.tool_calls) {
      calls.push_back(Json{{"id", c.id}, {"type", "function"}, {"function", Json{{"name", c.name}, {"arguments", c.arguments}}}});
    }
    j["tool_calls"] = calls;
  }
  if (m.tool_call_id) j["tool_call_id"] = *m.tool_call_id;
  return j;
}

inline Json to_wire(const ToolSpec& s) {
  Json props = Json::object();
  for (const auto& p : s.properties) props[p.name] = Json{{"type", p.type}, {"description", p.description}};
  return Json{{"type", "function"},
              {"function", Json{{"name", s.name},
                                {"description", s.description},
                                {"parameters", Json{{"type", "object"}, {"properties", props}, {"required", s.required}}}}}};
}

struct RequestOptions {
  bool json_object = false;  // response_format {"type": "json_object"}
};

inline Json build_request(const ProviderConfig& cfg, const std::vector<ChatMessage>& messages, const std::vector<ToolSpec>& tools,
                          const RequestOptions& opt = {}) {
  Json msgs = Json::array();
  for (const auto& m : messages) msgs.push_back(to_wire(m));
  Json j{{"model", cfg.model}, {"messages", msgs}, {"temperature", cfg.temperature}};
  if (!tools.empty()) {
    Json t = Json::array();
    for (const auto& s : tools) t.push_back(to_wire(s));
    j["tools"] = t;
    j["tool_choice"] = "auto";
  }
  if (opt.json_object) j["response_format"] = Json{{"type", "json_object"}};
  return j;
}

inline ChatMessage message_from_wire(const nlohmann::json& j) {
  try {
    ChatMessage m;
    m.role = role_from_name(j.at("role").get<std::string>());
    if (j.contains("content") && !j["content"].is_null()) m.content = j["content"].get<std::string>();
    if (j.contains("tool_calls") && !j["tool_calls"].is_null()) {
      for (const auto& c : j["tool_calls"]) {
        const auto& f = c.at("function");
        const auto& args = f.at("arguments");
        m.tool_calls.push_back(ToolCall{c.at("id").get<std::string>(), f.at("name").get<std::string>(),
                                        args.is_string() ? args.get<std::string>() : args.dump()});
      }
    }
    if (j.contains("tool_call_id") && !j["tool_call_id"].is_null()) m.tool_call_id = j["tool_call_id"].get<std::string>();
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed chat message: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ProtocolError(std::string("invalid chat message: ") + e.what());
  }
}

struct Completion {
  ChatMessage message;
  long long total_tokens = 0;
};

inline Completion parse_completion(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError("provider body is not JSON");
  }
  if (!j.is_object() || !j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw ProtocolError("provider body has no choices");
  }
  const auto& choice = j["choices"][0];
  if (!choice.is_object() || !choice.contains("message")) throw ProtocolError("provider choice has no message");
  Completion c{message_from_wire(choice["message"]), 0};
  if (c.message.role != Role::Assistant) throw ProtocolError("provider returned a non-assistant message");
  if (j.contains("usage") && j["usage"].is_object() && j["usage"].contains("total_tokens") &&
      j["usage"]["total_tokens"].is_number_integer()) {
    c.total_tokens = j["usage"]["total_tokens"].get<long long>();
  }
  return c;
}

// One message per line, in wire form.
inline std::string transcript_jsonl(const std::vector<ChatMessage>& transcript) {
  std::string out;
  for (const auto& m : transcript) out += to_wire(m).dump() + "\n";
  return out;
}

}  // namespace helios::llm
