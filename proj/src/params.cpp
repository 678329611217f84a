#include "optospec/params.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace optospec {

namespace {

void require(bool ok, const char* field, const char* what) {
    if (!ok) throw std::invalid_argument(std::string(field) + ": " + what);
}

void check_finite(double v, const char* field) {
    require(std::isfinite(v), field, "must be finite");
}

} // namespace

std::vector<std::string> validate_params(SystemParams& p) {
    check_finite(p.kappa, "kappa");
    check_finite(p.delta, "delta");
    check_finite(p.omega_x, "omega_x");
    check_finite(p.omega_y, "omega_y");
    check_finite(p.gamma_x, "gamma_x");
    check_finite(p.gamma_y, "gamma_y");
    check_finite(p.Gamma_x, "Gamma_x");
    check_finite(p.Gamma_y, "Gamma_y");
    check_finite(p.g_max, "g_max");
    check_finite(p.theta, "theta");
    check_finite(p.eta, "eta");

    require(p.kappa > 0.0, "kappa", "must be > 0");
    require(p.omega_x > 0.0, "omega_x", "must be > 0");
    require(p.omega_y > 0.0, "omega_y", "must be > 0");
    require(p.gamma_x > 0.0, "gamma_x", "must be > 0");
    require(p.gamma_y > 0.0, "gamma_y", "must be > 0");
    require(p.Gamma_x >= 0.0, "Gamma_x", "must be >= 0");
    require(p.Gamma_y >= 0.0, "Gamma_y", "must be >= 0");
    require(p.g_max >= 0.0, "g_max", "must be >= 0");
    require(p.theta >= 0.0 && p.theta <= std::numbers::pi / 2.0 + 1e-12,
            "theta", "must lie in [0, pi/2]");
    require(p.eta > 0.0 && p.eta <= 1.0, "eta", "must lie in (0, 1]");

    std::vector<std::string> warnings;
    if (p.gamma_x < gamma_floor) {
        p.gamma_x = gamma_floor;
        warnings.push_back("gamma_x below 2pi*1e-3 Hz floor; clamped");
    }
    if (p.gamma_y < gamma_floor) {
        p.gamma_y = gamma_floor;
        warnings.push_back("gamma_y below 2pi*1e-3 Hz floor; clamped");
    }
    return warnings;
}

bool params_valid(const SystemParams& p) {
    SystemParams copy = p;
    try {
        return validate_params(copy).empty();
    } catch (const std::invalid_argument&) {
        return false;
    }
}

DerivedCouplings derive_couplings(const SystemParams& p) {
    const double s = std::sin(p.theta);
    const double c = std::cos(p.theta);

    DerivedCouplings d;
    d.g_x = p.g_max * s * s;
    d.g_y = p.g_max * std::sqrt(p.omega_x / p.omega_y) * s * c;
    d.omega_b = std::sqrt(s * s * p.omega_x * p.omega_x + c * c * p.omega_y * p.omega_y);
    d.omega_d = std::sqrt(c * c * p.omega_x * p.omega_x + s * s * p.omega_y * p.omega_y);
    d.g_b = p.g_max * s * std::sqrt(p.omega_x / d.omega_b);

    // Quantum cooperativity with the coupling-weighted decoherence rate;
    // reduces to 4 g^2 / (kappa Gamma_x) at theta = pi/2.
    const double gb2 = d.g_b * d.g_b;
    if (gb2 > 0.0) {
        const double gamma_eff =
            (d.g_x * d.g_x * p.Gamma_x + d.g_y * d.g_y * p.Gamma_y) / gb2;
        d.c_q = (gamma_eff > 0.0) ? 4.0 * gb2 / (p.kappa * gamma_eff) : 0.0;
    }
    return d;
}

Polarization couplings_to_polarization(double g_x, double g_y,
                                       double omega_x, double omega_y) {
    if (!(g_x > 0.0))
        throw std::invalid_argument("couplings_to_polarization: g_x must be > 0");
    if (g_y < 0.0)
        throw std::invalid_argument("couplings_to_polarization: g_y must be >= 0");
    // g_y/g_x = sqrt(omega_x/omega_y) cot(theta)
    const double cot = (g_y / g_x) / std::sqrt(omega_x / omega_y);
    const double theta = std::atan2(1.0, cot);
    const double s = std::sin(theta);
    return Polarization{g_x / (s * s), theta};
}

} // namespace optospec
