#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "helios/sim/channel.hpp"
#include "helios/time_format.hpp"
#include "helios/sim/response_model.hpp"
#include "helios/sim/rgb_setting.hpp"

namespace helios::service {

using Json = nlohmann::ordered_json;

inline Json rgb_to_json(const RgbSetting& x) { return Json{{"R", x.r()}, {"G", x.g()}, {"B", x.b()}}; }

inline Json counts_to_json(const Reading& r) {
  Json out = Json::object();
  for (std::size_t c = 0; c < kChannelCount; ++c) out[std::string(kWireNames[c])] = r.counts[c];
  return out;
}

inline Json api_body(const RgbSetting& x, const Reading& r) { return Json{{"in", rgb_to_json(x)}, {"out", counts_to_json(r)}}; }

inline Json gm_body(const RgbSetting& x, const Reading& r) {
  return Json{{"in", Json{{"G", x.g()}}}, {"out", Json{{"515nm", r[Channel::W515]}}}};
}

inline Json error_body(const std::string& message) { return Json{{"error", message}}; }

using helios::format_timestamp;
using helios::parse_timestamp;

}  // namespace helios::service
