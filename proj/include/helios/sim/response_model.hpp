#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

#include "helios/sim/channel.hpp"
#include "helios/sim/rgb_setting.hpp"

namespace helios {

using Instant = std::chrono::system_clock::time_point;
using Seconds = std::chrono::duration<double>;

inline constexpr int kMaxCount = 65535;

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One photometer sample: a 16-bit count per channel plus the time it was taken.
struct Reading {
  std::array<std::uint16_t, kChannelCount> counts{};
  Instant timestamp{};

  std::uint16_t operator[](Channel c) const { return counts[index_of(c)]; }
  friend bool operator==(const Reading&, const Reading&) = default;
};

// Background light: a constant floor plus a half-wave rectified sine over the
// period (daylight). phase is a fraction of the period.
struct AmbientModel {
  Spectrum amplitude{};
  Spectrum constant{};
  Seconds period{86400.0};
  double phase = 0.0;
};

struct ResponseModel {
  // counts per unit input; rows follow kChannels, columns are R, G, B
  std::array<std::array<double, 3>, kChannelCount> gain{};
  Spectrum dark{};
  AmbientModel ambient{};
  Spectrum noise_std{};
  std::uint64_t seed = 0;

  void validate() const;
};

namespace detail {

inline void require_finite_nonnegative(const Spectrum& values, const char* field) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]) || values[i] < 0.0) {
      throw ModelError(std::string(field) + "[" + std::string(kWireNames[i]) + "] must be finite and >= 0");
    }
  }
}

}  // namespace detail

inline void ResponseModel::validate() const {
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    for (double g : gain[c]) {
      if (!std::isfinite(g) || g < 0.0) {
        throw ModelError("gain[" + std::string(kWireNames[c]) + "] must be finite and >= 0");
      }
    }
  }
  detail::require_finite_nonnegative(dark, "dark");
  detail::require_finite_nonnegative(noise_std, "noise_std");
  detail::require_finite_nonnegative(ambient.amplitude, "ambient.amplitude");
  detail::require_finite_nonnegative(ambient.constant, "ambient.constant");
  if (!(ambient.period.count() > 0.0) || !std::isfinite(ambient.period.count())) {
    throw ModelError("ambient.period_s must be finite and > 0");
  }
  if (!std::isfinite(ambient.phase)) throw ModelError("ambient.phase must be finite");
}

inline Spectrum ambient_counts(const AmbientModel& model, Instant t) {
  const double period = model.period.count();
  const double since_epoch = std::chrono::duration<double>(t.time_since_epoch()).count();
  double cycle = std::fmod(since_epoch, period) / period;
  if (cycle < 0.0) cycle += 1.0;
  const double wave = std::max(0.0, std::sin(2.0 * std::numbers::pi * (cycle - model.phase)));
  Spectrum out{};
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    out[c] = model.constant[c] + model.amplitude[c] * wave;
  }
  return out;
}

// Noise-free response: gain * rgb + dark + ambient(t). Not rounded or clamped.
inline Spectrum expected_counts(const ResponseModel& model, const RgbSetting& x, Instant t) {
  const auto in = x.values();
  const Spectrum ambient = ambient_counts(model.ambient, t);
  Spectrum out{};
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    const auto& g = model.gain[c];
    out[c] = g[0] * in[0] + g[1] * in[1] + g[2] * in[2] + model.dark[c] + ambient[c];
  }
  return out;
}

// Gaussian draw source for measurement noise. One stream per measurement
// sequence; the same seed reproduces the same sequence of draws.
class NoiseStream {
 public:
  explicit NoiseStream(std::uint64_t seed) : engine_(seed) {}

  double standard_normal() {
    ++draws_;
    return normal_(engine_);
  }
  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uint64_t draws_ = 0;
};

// Rounds half away from zero, then clamps to the 16-bit range.
inline std::uint16_t to_count(double value) {
  if (std::isnan(value)) return 0;
  const double rounded = std::round(value);
  return static_cast<std::uint16_t>(std::clamp(rounded, 0.0, static_cast<double>(kMaxCount)));
}

inline Reading measure(const ResponseModel& model, const RgbSetting& x, Instant t, NoiseStream& noise) {
  const Spectrum mean = expected_counts(model, x, t);
  Reading r;
  r.timestamp = t;
  for (std::size_t c = 0; c < kChannelCount; ++c) {
    // one draw per channel even when noise_std is 0, so draw indices stay aligned
    const double eps = model.noise_std[c] * noise.standard_normal();
    r.counts[c] = to_count(mean[c] + eps);
  }
  return r;
}

}  // namespace helios
