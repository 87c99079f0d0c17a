#pragma once

#include <cstdlib>
#include <functional>
#include <optional>
#include <string>

namespace helios {

// Environment access goes through this so tests can inject a fake table.
using EnvLookup = std::function<std::optional<std::string>(const char*)>;

inline EnvLookup process_env() {
  return [](const char* name) -> std::optional<std::string> {
    const char* v = std::getenv(name);
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
}

}  // namespace helios
