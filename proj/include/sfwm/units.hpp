#pragma once

#include <numbers>

// Internal unit system: lengths in micrometres, times in picoseconds,
// angular frequencies in rad/ps. Wavelengths at the API surface are in nm.
namespace sfwm::units {

inline constexpr double kSpeedOfLight = 299.792458;  // um/ps
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline constexpr double omega_from_nm(double wavelength_nm) {
  return kTwoPi * kSpeedOfLight / (wavelength_nm * 1e-3);
}

inline constexpr double nm_from_omega(double omega) {
  return kTwoPi * kSpeedOfLight / omega * 1e3;
}

inline constexpr double um_from_cm(double cm) { return cm * 1e4; }

}  // namespace sfwm::units
