#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "helios/client/client.hpp"
#include "helios/client/instruments.hpp"
#include "helios/llm/session.hpp"
#include "helios/time_format.hpp"

namespace helios::llm {

// ---- instrument selection ----

inline std::string selection_system_prompt(const std::vector<client::CatalogEntry>& catalog) {
  if (catalog.empty()) throw std::invalid_argument("instrument catalog is empty");
  std::string s =
      "You are an expert lab assistant that selects the best instrument for the user's request. "
      "Name exactly one instrument from the list below and give a short reason.\n\n"
      "Available instruments:\n";
  for (const auto& e : catalog) s += "- " + e.description + "\n";
  return s;
}

inline std::string select_instrument(Session& session, const std::vector<client::CatalogEntry>& catalog, const std::string& need) {
  if (need.find_first_not_of(" \t\r\n") == std::string::npos) throw std::invalid_argument("select_instrument: need text is empty");
  const ChatMessage reply = session.complete({ChatMessage::system(selection_system_prompt(catalog)), ChatMessage::user(need)});
  if (!reply.content) throw ProtocolError("provider returned no text for instrument selection");
  return *reply.content;
}

// ---- structured RGB extraction ----

inline constexpr const char* kRgbExtractionPrompt =
    "Read the user's request and pull out the red, green and blue LED settings. "
    "Reply with a JSON object and nothing else, shaped exactly like "
    "{\"R\": <R>, \"G\": <G>, \"B\": <B>}. Use 0.0 for any value the request does not give.";

// Strict reading of an assistant reply: a JSON object whose keys are a subset
// of R, G, B with numeric values. Missing keys are 0; values clamp to [0,1].
inline RgbExtraction parse_rgb_object(const std::string& content) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::exception&) {  // also number overflow
    throw ExtractionError("reply is not a JSON object", content);
  }
  if (!j.is_object()) throw ExtractionError("reply is not a JSON object", content);
  RgbExtraction out;
  for (const auto& [key, value] : j.items()) {
    if (key != "R" && key != "G" && key != "B") throw ExtractionError("unexpected field \"" + key + "\"", content);
    if (!value.is_number()) throw ExtractionError("field \"" + key + "\" is not a number", content);
    const double v = value.get<double>();
    if (!std::isfinite(v)) throw ExtractionError("field \"" + key + "\" is not finite", content);
    const double c = RgbSetting::clamp_fraction(v);
    (key == "R" ? out.R : key == "G" ? out.G : out.B) = c;
  }
  out.raw = content;
  return out;
}

// One re-ask carrying the validation error, then give up.
inline RgbExtraction extract_rgb(Session& session, const std::string& prompt) {
  std::vector<ChatMessage> messages{ChatMessage::system(kRgbExtractionPrompt), ChatMessage::user(prompt)};
  const RequestOptions json_mode{true};
  ChatMessage reply = session.complete(messages, {}, json_mode);
  const std::string first = reply.content.value_or("");
  try {
    return parse_rgb_object(first);
  } catch (const ExtractionError& e) {
    messages.push_back(ChatMessage::assistant(first));
    messages.push_back(ChatMessage::user(std::string("That reply was not valid: ") + e.what() +
                                         ". Answer again with only the JSON object {\"R\": <R>, \"G\": <G>, \"B\": <B>}."));
  }
  reply = session.complete(messages, {}, json_mode);
  const std::string second = reply.content.value_or("");
  try {
    RgbExtraction out = parse_rgb_object(second);
    out.attempts = 2;
    return out;
  } catch (const ExtractionError& e) {
    throw ExtractionError(std::string("extraction failed after re-ask: ") + e.what(), second);
  }
}

// ---- tool calling ----

using ToolFn = std::function<nlohmann::json(const nlohmann::json& arguments)>;
using ToolRegistry = std::map<std::string, ToolFn>;

// Argument problems a tool reports back to the model rather than aborting.
class ToolArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline ToolSpec build_tool_spec(client::InstrumentKind kind) {
  const auto& i = client::info(kind);
  ToolSpec s{std::string(i.name), std::string(i.description), {}, {}};
  for (char c : i.inputs) {
    const char* colour = c == 'R' ? "Red" : c == 'G' ? "Green" : "Blue";
    s.properties.push_back({std::string(1, c), "number", std::string("The ") + colour + " channel setting"});
  }
  return s;
}

// Wraps an instrument as a tool; missing numeric arguments are 0.0.
inline ToolFn instrument_tool(client::Instrument instrument) {
  return [instrument = std::move(instrument)](const nlohmann::json& args) -> nlohmann::json {
    double v[3] = {0.0, 0.0, 0.0};
    const char* names[3] = {"R", "G", "B"};
    for (int k = 0; k < 3; ++k) {
      if (!args.contains(names[k])) continue;
      const auto& a = args[names[k]];
      if (!a.is_number()) throw ToolArgumentError(std::string("argument ") + names[k] + " must be a number");
      v[k] = a.get<double>();
    }
    return instrument(v[0], v[1], v[2]);
  };
}

// Python-list style rendering for integer arrays ("[5995, 34212, 1663]").
inline std::string stringify_result(const nlohmann::json& result) {
  if (result.is_string()) return result.get<std::string>();
  if (result.is_array()) {
    std::string s = "[";
    for (std::size_t i = 0; i < result.size(); ++i) {
      if (i) s += ", ";
      s += result[i].is_string() ? result[i].get<std::string>() : result[i].dump();
    }
    return s + "]";
  }
  return result.dump();
}

struct LoopResult {
  ChatMessage final;
  std::vector<ChatMessage> transcript;
  int rounds = 0;
};

inline LoopResult tool_call_loop(Session& session, std::vector<ChatMessage> messages, const ToolRegistry& registry,
                                 const std::vector<ToolSpec>& specs, int max_rounds = 4) {
  if (max_rounds < 1) throw std::invalid_argument("tool_call_loop: max_rounds must be >= 1");
  for (const auto& s : specs) {
    s.validate();
    if (!registry.count(s.name)) throw std::invalid_argument("tool spec " + s.name + " has no registry entry");
  }
  std::vector<ChatMessage>& transcript = messages;
  for (int round = 1; round <= max_rounds; ++round) {
    ChatMessage reply = session.complete(transcript, specs);
    transcript.push_back(reply);
    if (reply.tool_calls.empty()) return LoopResult{reply, transcript, round};

    for (const auto& call : reply.tool_calls) {
      const auto it = registry.find(call.name);
      if (it == registry.end()) {
        transcript.push_back(ChatMessage::tool(call.id, "error: unknown tool " + call.name));
        throw LoopError("model called unknown tool " + call.name, transcript);
      }
      nlohmann::json args;
      try {
        args = call.arguments.empty() ? nlohmann::json::object() : nlohmann::json::parse(call.arguments);
        if (!args.is_object()) throw ToolArgumentError("arguments must be a JSON object");
      } catch (const nlohmann::json::exception&) {
        transcript.push_back(ChatMessage::tool(call.id, "error: arguments are not valid JSON: " + call.arguments));
        continue;
      } catch (const ToolArgumentError& e) {
        transcript.push_back(ChatMessage::tool(call.id, std::string("error: ") + e.what()));
        continue;
      }
      try {
        transcript.push_back(ChatMessage::tool(call.id, stringify_result(it->second(args))));
      } catch (const std::exception& e) {
        transcript.push_back(ChatMessage::tool(call.id, std::string("error: ") + e.what()));
      }
    }
  }
  throw LoopError("no final answer after " + std::to_string(max_rounds) + " rounds", transcript);
}

// ---- code extraction ----

struct AuditEntry {
  std::string kind;
  std::string detail;
};

// Records every side effect the bridge performs on behalf of extract_code.
class AuditLog {
 public:
  void record(std::string kind, std::string detail) {
    std::lock_guard lock(mu_);
    entries_.push_back({std::move(kind), std::move(detail)});
  }
  std::vector<AuditEntry> entries() const {
    std::lock_guard lock(mu_);
    return entries_;
  }

 private:
  mutable std::mutex mu_;
  std::vector<AuditEntry> entries_;
};

struct CodeProvenance {
  std::string prompt;
  std::string model;
  std::string timestamp;
};

struct CodeExtraction {
  std::string code;  // returned as text only
  CodeProvenance provenance;
};

inline constexpr const char* kCodeExtractionPrompt =
    "Write the requested program. Reply with a JSON object and nothing else, with a single field: {\"code\": <code>}.";

// The bridge has no way to run what comes back: this function only parses
// text and appends one provenance entry to the audit log.
inline CodeExtraction extract_code(Session& session, const std::string& prompt, AuditLog* audit = nullptr) {
  const ChatMessage reply =
      session.complete({ChatMessage::system(kCodeExtractionPrompt), ChatMessage::user(prompt)}, {}, RequestOptions{true});
  const std::string content = reply.content.value_or("");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::exception&) {
    throw ExtractionError("code reply is not JSON", content);
  }
  if (!j.is_object() || j.size() != 1 || !j.contains("code")) throw ExtractionError("code reply must be an object with a single \"code\" field", content);
  if (!j["code"].is_string()) throw ExtractionError("\"code\" field is not text", content);
  CodeExtraction out{j["code"].get<std::string>(),
                     CodeProvenance{prompt, session.config().model, format_timestamp(std::chrono::system_clock::now())}};
  if (audit) {
    audit->record("provenance", nlohmann::ordered_json{{"prompt", out.provenance.prompt},
                                                       {"model", out.provenance.model},
                                                       {"timestamp", out.provenance.timestamp},
                                                       {"code_bytes", out.code.size()}}
                                    .dump());
  }
  return out;
}

}  // namespace helios::llm
