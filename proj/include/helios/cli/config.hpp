#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "helios/env.hpp"
#include "helios/llm/types.hpp"
#include "helios/service/config.hpp"

namespace helios::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Everything a command may need, after merging all sources.
struct CliConfig {
  service::ServiceConfig service;
  std::string base_url = "http://127.0.0.1:8080";
  int client_retries = 1;
  double client_backoff_s = 0.1;
  double client_timeout_s = 10.0;
  std::uint64_t seed = 42;
  bool seed_explicit = false;  // a seed came from file, env or flag
  llm::ProviderConfig provider;
  std::string provider_script;  // scripted provider; takes priority over live
  bool provider_live = false;   // opt-in for real network providers
  std::string audit_log = "helios-llm-audit.jsonl";
  bool json = false;
};

// Values given on the command line; unset means "not given".
struct CliFlags {
  std::optional<std::string> config_path;
  std::optional<std::string> base_url;
  std::optional<std::uint64_t> seed;
  std::optional<double> latency;
  std::optional<std::string> calibration;
  std::optional<std::string> provider_script;
  std::optional<bool> json;
  std::optional<std::string> host;
  std::optional<int> port;
  std::optional<std::string> log_path;
  std::optional<std::string> static_dir;
  std::optional<bool> provider_live;
  std::optional<std::string> audit_log;
};

namespace detail {

inline void apply_file(CliConfig& c, const nlohmann::json& doc) {
  if (!doc.is_object()) throw service::ConfigError("config document must be an object");
  if (doc.contains("service")) service::apply_json(c.service, doc);
  try {
    if (doc.contains("base_url")) c.base_url = doc.at("base_url").get<std::string>();
    if (doc.contains("seed")) {
      c.seed = doc.at("seed").get<std::uint64_t>();
      c.seed_explicit = true;
    }
    if (doc.contains("audit_log")) c.audit_log = doc.at("audit_log").get<std::string>();
    if (doc.contains("json")) c.json = doc.at("json").get<bool>();
    if (doc.contains("provider")) {
      const auto& p = doc.at("provider");
      if (p.contains("endpoint")) c.provider.endpoint = p.at("endpoint").get<std::string>();
      if (p.contains("model")) c.provider.model = p.at("model").get<std::string>();
      if (p.contains("credential_env")) c.provider.credential_env = p.at("credential_env").get<std::string>();
      if (p.contains("temperature")) c.provider.temperature = p.at("temperature").get<double>();
      if (p.contains("timeout_s")) c.provider.timeout = std::chrono::duration<double>(p.at("timeout_s").get<double>());
      if (p.contains("rate_limit_requests")) c.provider.rate_limit_requests = p.at("rate_limit_requests").get<int>();
      if (p.contains("rate_limit_interval_s")) {
        c.provider.rate_limit_interval = std::chrono::duration<double>(p.at("rate_limit_interval_s").get<double>());
      }
      if (p.contains("max_requests")) c.provider.max_requests = p.at("max_requests").get<int>();
      if (p.contains("max_total_tokens")) c.provider.max_total_tokens = p.at("max_total_tokens").get<long long>();
      if (p.contains("max_retries")) c.provider.max_retries = p.at("max_retries").get<int>();
      if (p.contains("script")) c.provider_script = p.at("script").get<std::string>();
      if (p.contains("live")) c.provider_live = p.at("live").get<bool>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw service::ConfigError(std::string("bad config value: ") + e.what());
  }
}

}  // namespace detail

// Precedence: flags > environment > config file > defaults. The file comes
// from --config, else HELIOS_CONFIG.
inline CliConfig resolve_config(const CliFlags& flags, const EnvLookup& env) {
  CliConfig c;
  std::optional<std::string> file = flags.config_path;
  if (!file) file = env("HELIOS_CONFIG");
  if (file && !file->empty()) detail::apply_file(c, service::read_config_file(*file));

  service::apply_env(c.service, env);
  if (auto v = env("HELIOS_BASE_URL")) c.base_url = *v;
  if (c.service.seed) {
    c.seed = *c.service.seed;
    c.seed_explicit = true;
  }
  if (auto v = env("HELIOS_PROVIDER_SCRIPT")) c.provider_script = *v;
  if (auto v = env("HELIOS_AUDIT_LOG")) c.audit_log = *v;

  if (flags.base_url) c.base_url = *flags.base_url;
  if (flags.seed) {
    c.seed = *flags.seed;
    c.seed_explicit = true;
  }
  if (flags.latency) c.service.latency_s = *flags.latency;
  if (flags.calibration) c.service.calibration_path = *flags.calibration;
  if (flags.provider_script) c.provider_script = *flags.provider_script;
  if (flags.json) c.json = *flags.json;
  if (flags.host) c.service.host = *flags.host;
  if (flags.port) c.service.port = *flags.port;
  if (flags.log_path) c.service.log_path = *flags.log_path;
  if (flags.static_dir) c.service.static_dir = *flags.static_dir;
  if (flags.provider_live) c.provider_live = *flags.provider_live;
  if (flags.audit_log) c.audit_log = *flags.audit_log;

  if (c.seed_explicit) c.service.seed = c.seed;
  service::validate(c.service);
  c.provider.validate();
  return c;
}

}  // namespace helios::cli
