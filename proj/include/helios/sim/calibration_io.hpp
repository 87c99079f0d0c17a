#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "helios/sim/response_model.hpp"

namespace helios {

inline constexpr const char* kCalibrationSchema = "helios-cal/1";

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline Spectrum spectrum_from_json(const nlohmann::json& j, const std::string& field) {
  if (!j.is_array() || j.size() != kChannelCount) {
    throw CalibrationError(field + ": expected an array of " + std::to_string(kChannelCount) + " numbers");
  }
  Spectrum out{};
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (!j[i].is_number()) throw CalibrationError(field + ": element " + std::to_string(i) + " is not a number");
    out[i] = j[i].get<double>();
  }
  return out;
}

inline const nlohmann::json& require(const nlohmann::json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) throw CalibrationError("missing field " + where + key);
  return *it;
}

}  // namespace detail

inline nlohmann::ordered_json calibration_to_json(const ResponseModel& m) {
  nlohmann::ordered_json j;
  j["schema"] = kCalibrationSchema;
  auto gain = nlohmann::ordered_json::array();
  for (const auto& row : m.gain) gain.push_back(row);
  j["gain"] = gain;
  j["dark"] = m.dark;
  j["noise_std"] = m.noise_std;
  j["ambient"] = {{"amplitude", m.ambient.amplitude},
                  {"constant", m.ambient.constant},
                  {"period_s", m.ambient.period.count()},
                  {"phase", m.ambient.phase}};
  j["seed"] = m.seed;
  return j;
}

inline ResponseModel calibration_from_json(const nlohmann::json& j) {
  using detail::require;
  if (!j.is_object()) throw CalibrationError("calibration document must be an object");
  const auto& schema = require(j, "schema", "");
  if (!schema.is_string() || schema.get<std::string>() != kCalibrationSchema) {
    throw CalibrationError(std::string("unsupported schema, expected ") + kCalibrationSchema);
  }
  ResponseModel m;
  const auto& gain = require(j, "gain", "");
  if (!gain.is_array() || gain.size() != kChannelCount) throw CalibrationError("gain: expected 10 rows");
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    if (!gain[c].is_array() || gain[c].size() != 3) throw CalibrationError("gain: each row needs 3 numbers (R, G, B)");
    for (std::size_t k = 0; k < 3; ++k) {
      if (!gain[c][k].is_number()) throw CalibrationError("gain: non-numeric entry");
      m.gain[c][k] = gain[c][k].get<double>();
    }
  }
  m.dark = detail::spectrum_from_json(require(j, "dark", ""), "dark");
  m.noise_std = detail::spectrum_from_json(require(j, "noise_std", ""), "noise_std");
  const auto& amb = require(j, "ambient", "");
  m.ambient.amplitude = detail::spectrum_from_json(require(amb, "amplitude", "ambient."), "ambient.amplitude");
  m.ambient.constant = detail::spectrum_from_json(require(amb, "constant", "ambient."), "ambient.constant");
  const auto& period = require(amb, "period_s", "ambient.");
  const auto& phase = require(amb, "phase", "ambient.");
  if (!period.is_number() || !phase.is_number()) throw CalibrationError("ambient.period_s/phase must be numbers");
  m.ambient.period = Seconds{period.get<double>()};
  m.ambient.phase = phase.get<double>();
  const auto& seed = require(j, "seed", "");
  if (!seed.is_number_unsigned()) throw CalibrationError("seed must be a non-negative integer");
  m.seed = seed.get<std::uint64_t>();
  try {
    m.validate();
  } catch (const ModelError& e) {
    throw CalibrationError(e.what());
  }
  return m;
}

inline ResponseModel load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CalibrationError("cannot open calibration file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw CalibrationError("calibration file " + path + " is not valid JSON: " + e.what());
  }
  return calibration_from_json(j);
}

inline void save_calibration(const ResponseModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw CalibrationError("cannot write calibration file " + path);
  out << calibration_to_json(m).dump(2) << '\n';
}

}  // namespace helios
