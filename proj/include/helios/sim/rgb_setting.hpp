#pragma once

#include <algorithm>
#include <array>
#include <cmath>

namespace helios {

// LED drive levels. Construction clamps every component into [0,1]; NaN maps
// to 0 so a setting is always physically valid.
class RgbSetting {
 public:
  constexpr RgbSetting() = default;
  RgbSetting(double r, double g, double b) : r_(clamp_fraction(r)), g_(clamp_fraction(g)), b_(clamp_fraction(b)) {}

  static double clamp_fraction(double v) {
    if (std::isnan(v)) return 0.0;
    return std::clamp(v, 0.0, 1.0);
  }

  double r() const { return r_; }
  double g() const { return g_; }
  double b() const { return b_; }
  std::array<double, 3> values() const { return {r_, g_, b_}; }

  friend bool operator==(const RgbSetting&, const RgbSetting&) = default;

 private:
  double r_ = 0.0;
  double g_ = 0.0;
  double b_ = 0.0;
};

}  // namespace helios
