#pragma once

#include <numbers>

// Unit conventions: every rate and frequency inside the library is an
// angular frequency in rad/s.  Configuration files, CSV columns and fit
// reports use ordinary frequency in Hz (values quoted as X/2pi) and
// angles in degrees; conversion happens once at the I/O boundary.

namespace optospec {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double hz_to_rad(double f_hz) { return two_pi * f_hz; }
constexpr double rad_to_hz(double w) { return w / two_pi; }
constexpr double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

} // namespace optospec
