#include "optospec/dynamics.hpp"

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Eigenvalues>

namespace optospec {

DriftMatrix build_drift(const SystemParams& p) {
    const DerivedCouplings d = derive_couplings(p);
    Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();

    // cavity quadratures
    a(0, 0) = -p.kappa / 2.0;
    a(0, 1) = -p.delta;
    a(1, 0) = p.delta;
    a(1, 1) = -p.kappa / 2.0;
    a(1, 2) = 2.0 * d.g_x;
    a(1, 4) = 2.0 * d.g_y;

    // x mode
    a(2, 2) = -p.gamma_x / 2.0;
    a(2, 3) = p.omega_x;
    a(3, 0) = 2.0 * d.g_x;
    a(3, 2) = -p.omega_x;
    a(3, 3) = -p.gamma_x / 2.0;

    // y mode
    a(4, 4) = -p.gamma_y / 2.0;
    a(4, 5) = p.omega_y;
    a(5, 0) = 2.0 * d.g_y;
    a(5, 4) = -p.omega_y;
    a(5, 5) = -p.gamma_y / 2.0;

    return DriftMatrix{a};
}

std::vector<EigenMode> eigenmodes(const DriftMatrix& d) {
    Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> solver(d.entries, false);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("eigenmodes: eigenvalue iteration failed");

    std::vector<std::complex<double>> ev(solver.eigenvalues().data(),
                                         solver.eigenvalues().data() + 6);
    const double tol = 1e-8 * d.entries.norm();

    // Oscillatory eigenvalues must pair with their conjugates within
    // tolerance; real (overdamped) ones pair among themselves, adjacent in
    // sorted order, reported as zero-frequency modes.
    std::vector<std::complex<double>> osc;
    std::vector<double> reals;
    for (const auto& v : ev) {
        if (std::abs(v.imag()) > tol)
            osc.push_back(v);
        else
            reals.push_back(v.real());
    }
    if (osc.size() % 2 != 0)
        throw std::runtime_error("eigenmodes: conjugate pairing failed (odd oscillatory set)");

    std::vector<EigenMode> modes;
    std::vector<bool> used(osc.size(), false);
    for (std::size_t i = 0; i < osc.size(); ++i) {
        if (used[i] || osc[i].imag() < 0.0) continue;
        std::size_t j_best = osc.size();
        double err_best = 0.0;
        for (std::size_t j = 0; j < osc.size(); ++j) {
            if (used[j] || j == i) continue;
            const double err = std::abs(osc[j] - std::conj(osc[i]));
            if (j_best == osc.size() || err < err_best) {
                j_best = j;
                err_best = err;
            }
        }
        if (j_best == osc.size() || err_best > tol)
            throw std::runtime_error("eigenmodes: conjugate pairing residual exceeds tolerance");
        used[i] = used[j_best] = true;
        modes.push_back(EigenMode{std::abs(osc[i].imag()),
                                  -(osc[i].real() + osc[j_best].real())});
    }
    std::sort(reals.begin(), reals.end());
    for (std::size_t i = 0; i + 1 < reals.size(); i += 2)
        modes.push_back(EigenMode{0.0, -(reals[i] + reals[i + 1])});

    std::sort(modes.begin(), modes.end(), [](const EigenMode& a, const EigenMode& b) {
        if (a.frequency != b.frequency) return a.frequency < b.frequency;
        return a.decay < b.decay;
    });
    return modes;
}

bool is_stable(const DriftMatrix& d) {
    Eigen::EigenSolver<Eigen::Matrix<double, 6, 6>> solver(d.entries, false);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("is_stable: eigenvalue iteration failed");
    return (solver.eigenvalues().real().array() < 0.0).all();
}

} // namespace optospec
