#pragma once

#include <fstream>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "helios/llm/transport.hpp"

namespace helios::llm {

inline constexpr const char* kScriptSchema = "helios-llm-script/1";

// Replays an ordered list of canned replies, one per request.
//
// Script document:
//   {"schema": "helios-llm-script/1",
//    "responses": [ {"status": 429, "retry_after": 0.5},
//                   {"tool_calls": [{"id": "call_1", "name": "CLRGB", "arguments": {"G": 0.5}}]},
//                   {"content": "the count is {{last_tool}}"},
//                   {"body": "<raw body text>"} ]}
//
// content may use {{system}}, {{last_user}} and {{last_tool}}, substituted from
// the request being answered.
class ScriptedProvider : public ChatTransport {
 public:
  explicit ScriptedProvider(nlohmann::json script) {
    if (!script.is_object() || script.value("schema", std::string()) != kScriptSchema) {
      throw std::invalid_argument(std::string("provider script must carry schema ") + kScriptSchema);
    }
    if (!script.contains("responses") || !script["responses"].is_array()) {
      throw std::invalid_argument("provider script needs a responses array");
    }
    for (const auto& r : script["responses"]) {
      if (!r.is_object()) throw std::invalid_argument("provider script entries must be objects");
      if (r.contains("status") && !r["status"].is_number_integer()) throw std::invalid_argument("script status must be an integer");
      if (r.contains("tool_calls")) {
        if (!r["tool_calls"].is_array()) throw std::invalid_argument("script tool_calls must be an array");
        for (const auto& c : r["tool_calls"]) {
          if (!c.is_object() || !c.contains("id") || !c.contains("name")) throw std::invalid_argument("script tool call needs id and name");
        }
      }
      entries_.push_back(r);
    }
    model_ = script.value("model", std::string("scripted"));
  }

  static nlohmann::json load_script(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open provider script " + path);
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument("provider script " + path + " is not valid JSON: " + e.what());
    }
  }

  ProviderReply post(const nlohmann::ordered_json& request) override {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    if (next_ >= entries_.size()) throw TransportFailure("provider script exhausted after " + std::to_string(entries_.size()) + " replies");
    const nlohmann::json& e = entries_[next_++];
    ProviderReply r;
    r.status = e.value("status", 200);
    if (e.contains("retry_after")) r.retry_after_s = e["retry_after"].get<double>();
    if (e.contains("body")) {
      r.body = e["body"].get<std::string>();
      return r;
    }
    if (r.status != 200) {
      r.body = nlohmann::json{{"error", {{"message", e.value("error", std::string("scripted status"))}}}}.dump();
      return r;
    }
    nlohmann::ordered_json msg{{"role", "assistant"}};
    std::string content_text;
    if (e.contains("content")) {
      content_text = substitute(e["content"].get<std::string>(), request);
      msg["content"] = content_text;
    } else {
      msg["content"] = nullptr;
    }
    if (e.contains("tool_calls")) {
      auto calls = nlohmann::ordered_json::array();
      for (const auto& c : e["tool_calls"]) {
        const auto& args = c.contains("arguments") ? c["arguments"] : nlohmann::json::object();
        calls.push_back({{"id", c["id"]},
                         {"type", "function"},
                         {"function", {{"name", c["name"]}, {"arguments", args.is_string() ? args.get<std::string>() : args.dump()}}}});
      }
      msg["tool_calls"] = calls;
    }
    const long long prompt_tokens = static_cast<long long>(request.dump().size() / 4);
    const long long completion_tokens = static_cast<long long>(msg.dump().size() / 4);
    nlohmann::ordered_json body{{"id", "scripted-" + std::to_string(next_)},
                                {"object", "chat.completion"},
                                {"model", model_},
                                {"choices", nlohmann::ordered_json::array({{{"index", 0}, {"message", msg}, {"finish_reason", "stop"}}})},
                                {"usage", {{"prompt_tokens", prompt_tokens},
                                           {"completion_tokens", completion_tokens},
                                           {"total_tokens", e.contains("total_tokens") ? e["total_tokens"].get<long long>()
                                                                                      : prompt_tokens + completion_tokens}}}};
    r.body = body.dump();
    return r;
  }

  std::vector<nlohmann::ordered_json> requests() const {
    std::lock_guard lock(mu_);
    return requests_;
  }
  std::size_t remaining() const {
    std::lock_guard lock(mu_);
    return entries_.size() - next_;
  }

 private:
  static std::string last_content(const nlohmann::ordered_json& request, const char* role) {
    std::string out;
    for (const auto& m : request.at("messages")) {
      if (m.at("role") == role && m.at("content").is_string()) out = m["content"].get<std::string>();
    }
    return out;
  }

  static std::string substitute(std::string text, const nlohmann::ordered_json& request) {
    const std::pair<const char*, const char*> keys[] = {{"{{system}}", "system"}, {"{{last_user}}", "user"}, {"{{last_tool}}", "tool"}};
    for (const auto& [token, role] : keys) {
      for (auto pos = text.find(token); pos != std::string::npos; pos = text.find(token, pos)) {
        const std::string value = last_content(request, role);
        text.replace(pos, std::string_view(token).size(), value);
        pos += value.size();
      }
    }
    return text;
  }

  std::vector<nlohmann::json> entries_;
  std::size_t next_ = 0;
  std::string model_;
  mutable std::mutex mu_;
  std::vector<nlohmann::ordered_json> requests_;
};

}  // namespace helios::llm
