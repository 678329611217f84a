#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "optospec/params.hpp"
#include "optospec/susceptibility.hpp"
#include "test_helpers.hpp"

using namespace optospec;
using optospec::testing::reference_params;

TEST_SUITE_BEGIN("model");

TEST_CASE("derive_couplings at theta = pi/2 reduces to the 1D limit") {
    SystemParams p = reference_params();
    p.theta = std::numbers::pi / 2.0;
    const DerivedCouplings d = derive_couplings(p);
    CHECK(d.g_x == doctest::Approx(p.g_max).epsilon(1e-14));
    CHECK(std::abs(d.g_y) < 1e-12 * p.g_max);
    CHECK(d.omega_b == doctest::Approx(p.omega_x).epsilon(1e-14));
    CHECK(d.omega_d == doctest::Approx(p.omega_y).epsilon(1e-14));
    // C_Q reduces to 4 g^2 / (kappa Gamma_x)
    const double cq = 4.0 * p.g_max * p.g_max / (p.kappa * p.Gamma_x);
    CHECK(d.c_q == doctest::Approx(cq).epsilon(1e-12));
}

TEST_CASE("derive_couplings, theta = 81 deg reference values") {
    // frozen from a closed-form evaluation independent of this code
    SystemParams p = reference_params();
    p.theta = deg_to_rad(81.0);
    const DerivedCouplings d = derive_couplings(p);
    CHECK(rad_to_hz(d.g_x) == doctest::Approx(22924.914066468).epsilon(1e-10));
    CHECK(rad_to_hz(d.g_y) == doctest::Approx(3793.719837359).epsilon(1e-10));
    CHECK(rad_to_hz(d.omega_b) == doctest::Approx(130741.858334450).epsilon(1e-10));
    CHECK(rad_to_hz(d.omega_d) == doctest::Approx(120281.197530015).epsilon(1e-10));
}

TEST_CASE("degenerate mechanical frequencies give omega_b = omega_d = omega_x") {
    SystemParams p = reference_params();
    p.omega_y = p.omega_x;
    for (double th : {0.1, 0.7, 1.2}) {
        p.theta = th;
        const DerivedCouplings d = derive_couplings(p);
        CHECK(d.omega_b == doctest::Approx(p.omega_x).epsilon(1e-14));
        CHECK(d.omega_d == doctest::Approx(p.omega_x).epsilon(1e-14));
    }
}

TEST_CASE("sum rule and dark-direction null over random configurations") {
    std::mt19937_64 rng(2024);
    auto uni = [&](double lo, double hi) {
        return lo + (hi - lo) * std::generate_canonical<double, 53>(rng);
    };
    for (int k = 0; k < 1000; ++k) {
        SystemParams p = reference_params();
        p.theta = uni(0.0, std::numbers::pi / 2.0);
        p.omega_x = hz_to_rad(uni(50e3, 200e3));
        p.omega_y = hz_to_rad(uni(50e3, 200e3));
        const DerivedCouplings d = derive_couplings(p);

        const double lhs = d.omega_b * d.omega_b + d.omega_d * d.omega_d;
        const double rhs = p.omega_x * p.omega_x + p.omega_y * p.omega_y;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));

        // coupling to the dark direction vanishes (ladder units: zpf
        // ratios reduce to sqrt(Omega) ratios)
        const double null = std::sin(p.theta) * d.g_y * std::sqrt(p.omega_y) -
                            std::cos(p.theta) * d.g_x * std::sqrt(p.omega_x);
        CHECK(std::abs(null) <= 1e-12 * (p.g_max + 1.0) * std::sqrt(p.omega_x));
    }
}

TEST_CASE("chi_cavity on cavity resonance and filter ratio") {
    SystemParams p = reference_params();  // kappa/2pi = 57 kHz, delta/2pi = -130 kHz
    const double at_res = std::norm(chi_cavity(p, -p.delta));
    CHECK(at_res == doctest::Approx(4.0 / (p.kappa * p.kappa)).epsilon(1e-14));
    CHECK(at_res == doctest::Approx(3.118534430358e-11).epsilon(1e-10));

    const double ratio = std::norm(chi_cavity(p, p.delta)) / std::norm(chi_cavity(p, -p.delta));
    CHECK(ratio == doctest::Approx(0.011872873644705).epsilon(1e-12));
    // paper quotes the same ratio as ~0.01
    CHECK(ratio > 0.005);
    CHECK(ratio < 0.02);
}

TEST_CASE("chi_cavity conjugate consistency") {
    SystemParams p = reference_params();
    for (double f : {-250e3, -37e3, 0.0, 11e3, 131e3}) {
        const complexd c = chi_cavity(p, hz_to_rad(f));
        CHECK((c + std::conj(c)).real() ==
              doctest::Approx(p.kappa * std::norm(c)).epsilon(1e-13));
    }
}

TEST_CASE("chi_mech at resonance, static limit and off resonance") {
    SystemParams p = reference_params();
    const complexd at_res = chi_mech(p, Axis::x, p.omega_x);
    CHECK(at_res.real() == doctest::Approx(2.0 / p.gamma_x).epsilon(1e-14));
    CHECK(std::abs(at_res.imag()) < 1e-9 * std::abs(at_res.real()));

    // static limit: gamma tiny, chi(0) -> -i/Omega
    const complexd at_zero = chi_mech(p, Axis::x, 0.0);
    CHECK(at_zero.imag() == doctest::Approx(-1.0 / p.omega_x).epsilon(1e-6));

    // off-resonant magnitude, gamma_y/2pi = 1 Hz, detuned by 1 kHz
    SystemParams q = p;
    q.gamma_y = hz_to_rad(1.0);
    const double mag = std::abs(chi_mech(q, Axis::y, hz_to_rad(119e3)));
    CHECK(mag == doctest::Approx(1.591549231975e-4).epsilon(1e-9));
}

TEST_CASE("chi_minus definition, symmetric-cavity case and resonant dominance") {
    SystemParams p = reference_params();
    // at omega = 0 the difference is 2i Im chi(0)
    const complexd c0 = chi_mech(p, Axis::x, 0.0);
    const complexd d0 = chi_mech_minus(p, Axis::x, 0.0);
    CHECK(d0.real() == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(d0.imag() == doctest::Approx(2.0 * c0.imag()).epsilon(1e-14));

    // delta = 0 makes chi_c^- purely imaginary everywhere
    SystemParams q = p;
    q.delta = 0.0;
    for (double f : {-200e3, -50e3, 1e3, 90e3})
        CHECK(std::abs(chi_cavity_minus(q, hz_to_rad(f)).real()) < 1e-18);

    // resonant term dominates chi_x^- at omega = Omega_x for high Q
    const complexd on = chi_mech(p, Axis::x, p.omega_x);
    const complexd off = chi_mech(p, Axis::x, -p.omega_x);
    CHECK(std::abs(on) / std::abs(off) > 1e6);
    CHECK(std::abs(chi_mech_minus(p, Axis::x, p.omega_x)) ==
          doctest::Approx(std::abs(on)).epsilon(1e-6));
}

TEST_CASE("chi_minus antisymmetry across susceptibility families") {
    SystemParams p = reference_params();
    for (double f : {-222e3, -131e3, -10e3, 5e3, 120e3, 288e3}) {
        const double w = hz_to_rad(f);
        const complexd cav = chi_cavity_minus(p, -w) + std::conj(chi_cavity_minus(p, w));
        const complexd mx = chi_mech_minus(p, Axis::x, -w) + std::conj(chi_mech_minus(p, Axis::x, w));
        const complexd my = chi_mech_minus(p, Axis::y, -w) + std::conj(chi_mech_minus(p, Axis::y, w));
        CHECK(std::abs(cav) < 1e-16);
        CHECK(std::abs(mx) < 1e-12 * std::abs(chi_mech_minus(p, Axis::x, w)));
        CHECK(std::abs(my) < 1e-12 * std::abs(chi_mech_minus(p, Axis::y, w)));
    }
}

TEST_CASE("parameter validation names the offending field") {
    SystemParams p = reference_params();
    p.kappa = -1.0;
    CHECK_THROWS_WITH_AS(validate_params(p), "kappa: must be > 0", std::invalid_argument);

    p = reference_params();
    p.eta = 1.5;
    CHECK_THROWS_WITH_AS(validate_params(p), "eta: must lie in (0, 1]", std::invalid_argument);

    p = reference_params();
    p.theta = 2.0;
    CHECK_THROWS_AS(validate_params(p), std::invalid_argument);

    p = reference_params();
    p.gamma_x = 0.0;
    CHECK_THROWS_AS(validate_params(p), std::invalid_argument);
}

TEST_CASE("gas damping below the floor is clamped with a warning") {
    SystemParams p = reference_params();
    p.gamma_x = gamma_floor / 10.0;
    const auto warnings = validate_params(p);
    REQUIRE(warnings.size() == 1);
    CHECK(p.gamma_x == gamma_floor);
    CHECK(params_valid(p));
}

TEST_CASE("coupling inversion round trip") {
    const SystemParams p = reference_params();
    const DerivedCouplings d = derive_couplings(p);
    const Polarization pol = couplings_to_polarization(d.g_x, d.g_y, p.omega_x, p.omega_y);
    CHECK(pol.theta == doctest::Approx(p.theta).epsilon(1e-12));
    CHECK(pol.g_max == doctest::Approx(p.g_max).epsilon(1e-12));

    // balanced-coupling reference values
    const Polarization f3 = couplings_to_polarization(hz_to_rad(14e3), hz_to_rad(11e3),
                                                      hz_to_rad(131e3), hz_to_rad(120e3));
    CHECK(rad_to_deg(f3.theta) == doctest::Approx(53.0567).epsilon(1e-4));
    SystemParams q = p;
    q.g_max = f3.g_max;
    q.theta = f3.theta;
    const DerivedCouplings dq = derive_couplings(q);
    CHECK(rad_to_hz(dq.g_x) == doctest::Approx(14e3).epsilon(1e-12));
    CHECK(rad_to_hz(dq.g_y) == doctest::Approx(11e3).epsilon(1e-12));
}

TEST_SUITE_END();
