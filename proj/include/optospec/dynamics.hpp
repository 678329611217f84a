#pragma once

#include <Eigen/Dense>

#include "optospec/params.hpp"

namespace optospec {

// Generator of the linear quadrature dynamics (X_c, P_c, x, p_x, y, p_y).
// trace = -(kappa + gamma_x + gamma_y); eigenvalues come in conjugate pairs.
struct DriftMatrix {
    Eigen::Matrix<double, 6, 6> entries;
};

// One conjugate eigenvalue pair: frequency |Im lambda| >= 0 and energy
// linewidth -2 Re lambda.
struct EigenMode {
    double frequency;
    double decay;
};

DriftMatrix build_drift(const SystemParams& p);

// Pairs the six eigenvalues into three modes sorted by frequency
// ascending (ties broken by decay ascending).  Throws std::runtime_error
// if conjugate pairing fails beyond 1e-8 * ||d||.
std::vector<EigenMode> eigenmodes(const DriftMatrix& d);

// True iff all eigenvalues have strictly negative real part.
bool is_stable(const DriftMatrix& d);

} // namespace optospec
