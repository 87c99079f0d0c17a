#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "helios/detail/httplib.hpp"
#include <nlohmann/json.hpp>

#include "helios/env.hpp"
#include "helios/llm/types.hpp"

namespace helios::llm {

struct ProviderReply {
  int status = 0;
  std::string body;
  std::optional<double> retry_after_s;
};

// Thrown by a transport when no HTTP reply was obtained.
class TransportFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  virtual ProviderReply post(const nlohmann::ordered_json& request) = 0;
};

// Chat-completions over HTTP(S). The credential is looked up on every request
// and never stored.
class HttpChatTransport : public ChatTransport {
 public:
  explicit HttpChatTransport(ProviderConfig cfg, EnvLookup env = process_env()) : cfg_(std::move(cfg)), env_(std::move(env)) {
    const auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("provider endpoint must be an absolute URL");
    const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    origin_ = cfg_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
  }

  ProviderReply post(const nlohmann::ordered_json& request) override {
    const auto key = env_(cfg_.credential_env.c_str());
    if (!key || key->empty()) throw ProviderError("credential variable " + cfg_.credential_env + " is not set");
    httplib::Client cli(origin_);
    if (!cli.is_valid()) throw ProviderError("unsupported provider endpoint " + cfg_.endpoint);
    const auto us = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout).count();
    cli.set_connection_timeout(us / 1'000'000, us % 1'000'000);
    cli.set_read_timeout(us / 1'000'000, us % 1'000'000);
    httplib::Headers headers{{"Authorization", "Bearer " + *key}};
    auto res = cli.Post(path_, headers, request.dump(), "application/json");
    if (!res) throw TransportFailure("provider request failed: " + httplib::to_string(res.error()));
    ProviderReply r{res->status, res->body, std::nullopt};
    if (res->has_header("Retry-After")) {
      try {
        r.retry_after_s = std::stod(res->get_header_value("Retry-After"));
      } catch (const std::exception&) {
      }
    }
    return r;
  }

 private:
  ProviderConfig cfg_;
  EnvLookup env_;
  std::string origin_;
  std::string path_;
};

}  // namespace helios::llm
