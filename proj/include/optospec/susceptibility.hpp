#pragma once

#include <complex>

#include "optospec/params.hpp"

namespace optospec {

using complexd = std::complex<double>;

enum class Axis { x, y };

// Optical amplitude response, chi_c(w) = [-i(delta + w) + kappa/2]^-1.
inline complexd chi_cavity(const SystemParams& p, double omega) {
    return 1.0 / complexd(p.kappa / 2.0, -(p.delta + omega));
}

// Mechanical amplitude response, chi_j(w) = [i(Omega_j - w) + gamma_j/2]^-1.
inline complexd chi_mech(const SystemParams& p, Axis axis, double omega) {
    const double Omega = (axis == Axis::x) ? p.omega_x : p.omega_y;
    const double gamma = (axis == Axis::x) ? p.gamma_x : p.gamma_y;
    return 1.0 / complexd(gamma / 2.0, Omega - omega);
}

// chi^-(w) = chi(w) - chi*(-w), the response difference that weights the
// common optical force.  Applies to any of the susceptibility families.
inline complexd chi_minus(complexd chi_pos, complexd chi_neg) {
    return chi_pos - std::conj(chi_neg);
}

inline complexd chi_cavity_minus(const SystemParams& p, double omega) {
    return chi_minus(chi_cavity(p, omega), chi_cavity(p, -omega));
}

inline complexd chi_mech_minus(const SystemParams& p, Axis axis, double omega) {
    return chi_minus(chi_mech(p, axis, omega), chi_mech(p, axis, -omega));
}

} // namespace optospec
