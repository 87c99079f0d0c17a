#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace helios {

// Photometer bands in canonical order: ascending wavelength, then clear, then
// near-IR. All per-channel arrays in the library use this order.
enum class Channel : std::uint8_t { W415, W445, W480, W515, W555, W590, W630, W680, Clear, Nir };

inline constexpr std::size_t kChannelCount = 10;

inline constexpr std::array<Channel, kChannelCount> kChannels{
    Channel::W415, Channel::W445, Channel::W480, Channel::W515, Channel::W555,
    Channel::W590, Channel::W630, Channel::W680, Channel::Clear, Channel::Nir};

inline constexpr std::array<std::string_view, kChannelCount> kWireNames{
    "415nm", "445nm", "480nm", "515nm", "555nm", "590nm", "630nm", "680nm", "clear", "nir"};

constexpr std::size_t index_of(Channel c) { return static_cast<std::size_t>(c); }

constexpr std::string_view wire_name(Channel c) { return kWireNames[index_of(c)]; }

constexpr std::optional<Channel> channel_from_wire(std::string_view name) {
  for (std::size_t i = 0; i < kChannelCount; ++i) {
    if (kWireNames[i] == name) return kChannels[i];
  }
  return std::nullopt;
}

// Per-channel real values (expected counts, offsets, noise levels).
using Spectrum = std::array<double, kChannelCount>;

}  // namespace helios
