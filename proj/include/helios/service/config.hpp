#pragma once

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "helios/env.hpp"

namespace helios::service {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kRealisticLatencySeconds = 1.5;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string calibration_path;  // empty: built-in default calibration
  double latency_s = 0.0;
  double queue_timeout_s = 30.0;
  std::string log_path = "helios-experiments.jsonl";
  std::uint64_t log_max_bytes = 64ull << 20;
  std::string static_dir;        // empty: built-in index page at /
  std::string auth_token;        // empty: open access
  std::string client_salt = "helios";
  std::optional<std::uint64_t> seed;  // overrides the calibration seed
  bool daylight = false;
};

namespace detail {

inline double parse_env_double(const std::string& name, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(name + ": not a number: '" + v + "'");
  }
}

inline std::uint64_t parse_env_uint(const std::string& name, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto u = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return u;
  } catch (const std::exception&) {
    throw ConfigError(name + ": not a non-negative integer: '" + v + "'");
  }
}

inline bool parse_bool(const std::string& name, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(name + ": not a boolean: '" + v + "'");
}

}  // namespace detail

inline void validate(const ServiceConfig& c) {
  if (c.port < 0 || c.port > 65535) throw ConfigError("port out of range: " + std::to_string(c.port));
  if (!(c.latency_s >= 0.0)) throw ConfigError("latency_s must be >= 0");
  if (!(c.queue_timeout_s >= 0.0)) throw ConfigError("queue_timeout_s must be >= 0");
  if (c.log_path.empty()) throw ConfigError("log_path must not be empty");
  if (c.log_max_bytes == 0) throw ConfigError("log_max_bytes must be > 0");
}

// Fields present in the "service" object (or at top level) replace defaults.
inline void apply_json(ServiceConfig& c, const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("config document must be an object");
  const nlohmann::json& j = doc.contains("service") ? doc.at("service") : doc;
  try {
    if (j.contains("host")) c.host = j.at("host").get<std::string>();
    if (j.contains("port")) c.port = j.at("port").get<int>();
    if (j.contains("calibration")) c.calibration_path = j.at("calibration").get<std::string>();
    if (j.contains("latency_s")) c.latency_s = j.at("latency_s").get<double>();
    if (j.contains("queue_timeout_s")) c.queue_timeout_s = j.at("queue_timeout_s").get<double>();
    if (j.contains("log_path")) c.log_path = j.at("log_path").get<std::string>();
    if (j.contains("log_max_bytes")) c.log_max_bytes = j.at("log_max_bytes").get<std::uint64_t>();
    if (j.contains("static_dir")) c.static_dir = j.at("static_dir").get<std::string>();
    if (j.contains("auth_token")) c.auth_token = j.at("auth_token").get<std::string>();
    if (j.contains("client_salt")) c.client_salt = j.at("client_salt").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("daylight")) c.daylight = j.at("daylight").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

inline nlohmann::json read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

// HELIOS_HOST, HELIOS_PORT, HELIOS_CALIBRATION, HELIOS_LATENCY, HELIOS_QUEUE_TIMEOUT,
// HELIOS_LOG, HELIOS_STATIC_DIR, HELIOS_TOKEN, HELIOS_SEED, HELIOS_DAYLIGHT
inline void apply_env(ServiceConfig& c, const EnvLookup& env) {
  if (auto v = env("HELIOS_HOST")) c.host = *v;
  if (auto v = env("HELIOS_PORT")) c.port = static_cast<int>(detail::parse_env_uint("HELIOS_PORT", *v));
  if (auto v = env("HELIOS_CALIBRATION")) c.calibration_path = *v;
  if (auto v = env("HELIOS_LATENCY")) c.latency_s = detail::parse_env_double("HELIOS_LATENCY", *v);
  if (auto v = env("HELIOS_QUEUE_TIMEOUT")) c.queue_timeout_s = detail::parse_env_double("HELIOS_QUEUE_TIMEOUT", *v);
  if (auto v = env("HELIOS_LOG")) c.log_path = *v;
  if (auto v = env("HELIOS_STATIC_DIR")) c.static_dir = *v;
  if (auto v = env("HELIOS_TOKEN")) c.auth_token = *v;
  if (auto v = env("HELIOS_SEED")) c.seed = detail::parse_env_uint("HELIOS_SEED", *v);
  if (auto v = env("HELIOS_DAYLIGHT")) c.daylight = detail::parse_bool("HELIOS_DAYLIGHT", *v);
}

}  // namespace helios::service
