#pragma once

#include "helios/sim/response_model.hpp"

namespace helios {

inline constexpr const char* kCalibrationVersion = "helios-default-2026.1";
inline constexpr double kDefaultNoiseStd = 70.0;

// Default calibration of the LED + photometer twin.
//
// The 445, 515 and 630 nm rows and their dark offsets come from a constrained
// least-squares fit to reference readings of the physical device
// (tools/calibration/fit_default_calibration.py). The 515 nm green response is
// pinned to the measured line: 62466.40 counts per unit G, 3110.20 offset.
// The remaining rows are interpolated in wavelength and are uncalibrated.
inline ResponseModel default_model() {
  ResponseModel m;
  //            R          G          B
  m.gain = {{
      {0.00, 1088.38, 17115.31},      // 415nm  (uncalibrated)
      {0.00, 2176.76, 34230.62},      // 445nm
      {1960.48, 32321.58, 17115.31},  // 480nm  (uncalibrated)
      {3920.96, 62466.40, 0.00},      // 515nm
      {18847.94, 42826.76, 1606.00},  // 555nm  (uncalibrated)
      {31909.05, 25642.08, 3011.26},  // 590nm  (uncalibrated)
      {46836.03, 6002.44, 4617.26},   // 630nm
      {23418.01, 3001.22, 2308.63},   // 680nm  (uncalibrated)
      {44412.36, 61433.97, 28001.53}, // clear  (uncalibrated)
      {1873.44, 240.10, 184.69},      // nir    (uncalibrated)
  }};
  m.dark = {574.49, 574.49, 1842.34, 3110.20, 3067.77, 3030.64, 2988.21, 2988.21, 6361.72, 239.06};
  m.noise_std.fill(kDefaultNoiseStd);
  m.seed = 42;
  return m;
}

// Half-sine day cycle peaking at 12:00 UTC; strong enough to saturate the
// clear channel at noon.
inline AmbientModel daylight_ambient() {
  AmbientModel a;
  for (std::size_t c = 0; c < 8; ++c) a.amplitude[c] = 24000.0;
  a.amplitude[index_of(Channel::Clear)] = 67200.0;
  a.amplitude[index_of(Channel::Nir)] = 12000.0;
  a.period = Seconds{86400.0};
  a.phase = 0.25;
  return a;
}

inline ResponseModel noiseless(ResponseModel m) {
  m.noise_std.fill(0.0);
  return m;
}

}  // namespace helios
