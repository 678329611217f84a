#pragma once

#include <string>
#include <vector>

#include "optospec/units.hpp"

namespace optospec {

// Physical rates and angles defining one experimental configuration.
// All rates are angular frequencies in rad/s, theta in radians.
struct SystemParams {
    double kappa = 0.0;    // cavity amplitude decay rate
    double delta = 0.0;    // laser-cavity detuning (negative = red-detuned)
    double omega_x = 0.0;  // bare mechanical frequency, X mode
    double omega_y = 0.0;  // bare mechanical frequency, Y mode
    double gamma_x = 0.0;  // gas damping rate, X
    double gamma_y = 0.0;  // gas damping rate, Y
    double Gamma_x = 0.0;  // total decoherence rate, X
    double Gamma_y = 0.0;  // total decoherence rate, Y
    double g_max = 0.0;    // maximal optomechanical coupling
    double theta = 0.0;    // polarization angle, [0, pi/2]
    double eta = 1.0;      // overall detection efficiency, (0, 1]
};

// Gas damping below this floor is clamped (with a warning) so the bare
// susceptibilities stay pole-free on the real axis.
inline constexpr double gamma_floor = hz_to_rad(1e-3);

// Validates all SystemParams invariants, clamping sub-floor gamma_j up to
// gamma_floor.  Returns warning messages for each clamped field; throws
// std::invalid_argument naming the offending field on a hard violation.
std::vector<std::string> validate_params(SystemParams& p);

// True iff p passes validate_params without modification or warning.
bool params_valid(const SystemParams& p);

// Couplings and cavity-frame mode frequencies computed from SystemParams.
struct DerivedCouplings {
    double g_x = 0.0;      // g_max sin^2(theta)
    double g_y = 0.0;      // g_max sqrt(omega_x/omega_y) sin(theta) cos(theta)
    double g_b = 0.0;      // coupling to the geometric bright mode
    double omega_b = 0.0;  // bright mode frequency
    double omega_d = 0.0;  // dark mode frequency
    double c_q = 0.0;      // quantum cooperativity 4 g_b^2 / (kappa Gamma_eff)
};

DerivedCouplings derive_couplings(const SystemParams& p);

// Inverse of the coupling relations: recovers (g_max, theta) from a
// (g_x, g_y) pair quoted directly, as in fit reports.  Requires g_x > 0.
struct Polarization {
    double g_max;
    double theta;
};
Polarization couplings_to_polarization(double g_x, double g_y,
                                       double omega_x, double omega_y);

} // namespace optospec
