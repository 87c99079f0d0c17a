#pragma once

#include <charconv>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "helios/detail/httplib.hpp"
#include <nlohmann/json.hpp>

#include "helios/client/instruments.hpp"
#include "helios/env.hpp"
#include "helios/sim/rgb_setting.hpp"

namespace helios::client {

class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(int status, std::string body, const std::string& what)
      : std::runtime_error(what), status_(status), body_(std::move(body)) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

struct HttpReply {
  int status = 0;
  std::string body;
};

// GET of a path+query relative to the base URL. Throws TransportError when no
// HTTP response was received.
using Transport = std::function<HttpReply(const std::string& path_and_query)>;
using Sleeper = std::function<void(std::chrono::duration<double>)>;

struct ClientConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::chrono::duration<double> timeout{10.0};
  int retries = 2;
  std::chrono::duration<double> backoff_base{0.25};
  Sleeper sleep;  // defaults to std::this_thread::sleep_for

  void validate() const {
    if (retries < 0) throw std::invalid_argument("ClientConfig: retries must be >= 0");
    if (!(timeout.count() > 0)) throw std::invalid_argument("ClientConfig: timeout must be > 0");
    if (backoff_base.count() < 0) throw std::invalid_argument("ClientConfig: backoff_base must be >= 0");
  }

  // HELIOS_BASE_URL overrides base_url.
  ClientConfig& apply_env(const EnvLookup& env = process_env()) {
    if (auto v = env("HELIOS_BASE_URL")) base_url = *v;
    return *this;
  }
  static ClientConfig from_env(const EnvLookup& env = process_env()) { return ClientConfig{}.apply_env(env); }
};

inline std::string format_number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline Transport http_transport(const ClientConfig& config) {
  std::string url = config.base_url;
  while (!url.empty() && url.back() == '/') url.pop_back();
  // split "scheme://host:port/prefix"
  std::string prefix;
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (path_start != std::string::npos) {
    prefix = url.substr(path_start);
    url = url.substr(0, path_start);
  }
  const auto secs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout).count();
  return [url, prefix, secs](const std::string& path_and_query) {
    httplib::Client cli(url);
    if (!cli.is_valid()) throw TransportError("invalid base URL: " + url);
    cli.set_connection_timeout(secs / 1'000'000, secs % 1'000'000);
    cli.set_read_timeout(secs / 1'000'000, secs % 1'000'000);
    auto res = cli.Get(prefix + path_and_query);
    if (!res) throw TransportError("request to " + url + prefix + path_and_query + " failed: " + httplib::to_string(res.error()));
    return HttpReply{res->status, res->body};
  };
}

// Thin callable wrapper around GET /api for one of the four instruments.
class Instrument {
 public:
  Instrument(InstrumentKind kind, ClientConfig config, Transport transport = {})
      : info_(&client::info(kind)), config_(std::move(config)), transport_(std::move(transport)) {
    config_.validate();
    if (!transport_) transport_ = http_transport(config_);
    if (!config_.sleep) config_.sleep = [](std::chrono::duration<double> d) { std::this_thread::sleep_for(d); };
  }

  const InstrumentInfo& info() const { return *info_; }

  // Inputs the instrument does not take are sent as 0.
  std::vector<int> operator()(double R = 0.0, double G = 0.0, double B = 0.0) const {
    return measure(RgbSetting(R, G, B));
  }

  std::vector<int> measure(const RgbSetting& x) const {
    const RgbSetting sent(takes('R') ? x.r() : 0.0, takes('G') ? x.g() : 0.0, takes('B') ? x.b() : 0.0);
    const std::string path = "/api?R=" + format_number(sent.r()) + "&G=" + format_number(sent.g()) + "&B=" + format_number(sent.b());
    const HttpReply reply = get_with_retries(path);
    return project(reply);
  }

  // Exponential backoff: attempt k (0-based) waits backoff_base * 2^k.
  std::chrono::duration<double> backoff_delay(int attempt) const { return config_.backoff_base * static_cast<double>(1ull << attempt); }

 private:
  bool takes(char c) const {
    for (char i : info_->inputs) {
      if (i == c) return true;
    }
    return false;
  }

  HttpReply get_with_retries(const std::string& path) const {
    for (int attempt = 0;; ++attempt) {
      const bool last = attempt >= config_.retries;
      try {
        HttpReply r = transport_(path);
        if (r.status == 200) return r;
        if (r.status != 503 || last) {
          throw ProtocolError(r.status, r.body, "server returned HTTP " + std::to_string(r.status) + ": " + r.body);
        }
      } catch (const TransportError&) {
        if (last) throw;
      }
      config_.sleep(backoff_delay(attempt));
    }
  }

  std::vector<int> project(const HttpReply& reply) const {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(reply.body);
    } catch (const nlohmann::json::exception&) {
      throw ProtocolError(reply.status, reply.body, "response body is not JSON");
    }
    if (!j.is_object() || !j.contains("out") || !j["out"].is_object()) {
      throw ProtocolError(reply.status, reply.body, "response has no 'out' object");
    }
    std::vector<int> out;
    for (Channel c : info_->outputs) {
      const std::string key(wire_name(c));
      const auto& v = j["out"];
      if (!v.contains(key) || !v[key].is_number_integer()) throw ProtocolError(reply.status, reply.body, "response lacks integer out." + key);
      const auto n = v[key].get<std::int64_t>();
      if (n < 0 || n > 65535) throw ProtocolError(reply.status, reply.body, "out." + key + " outside 0..65535");
      out.push_back(static_cast<int>(n));
    }
    return out;
  }

  const InstrumentInfo* info_;
  ClientConfig config_;
  Transport transport_;
};

inline std::vector<int> measure(InstrumentKind kind, const RgbSetting& x, const ClientConfig& config, Transport transport = {}) {
  return Instrument(kind, config, std::move(transport)).measure(x);
}

}  // namespace helios::client
