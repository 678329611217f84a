#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "optospec/dynamics.hpp"
#include "optospec/params.hpp"
#include "optospec/spectrum.hpp"

namespace optospec {

// ------------------------------------------------------------------
// Frequency-domain validator: solves the doubled-basis linear system
// (a, a^dag, b_x, b_x^dag, b_y, b_y^dag) per frequency and contracts the
// transfer row with the input-noise spectral matrix.  With nonsymmetrized
// noise this reproduces the closed-form bright-mode PSD; with symmetrized
// noise it gives [S(w) + S(-w)]/2.

enum class NoiseOrdering { nonsymmetrized, symmetrized };

struct NoiseModel {
    NoiseOrdering ordering = NoiseOrdering::nonsymmetrized;

    // 6x6 spectral density matrix of the input operators, basis
    // (a_in, a_in^dag, b_x, b_x^dag, b_y, b_y^dag).
    Eigen::Matrix<double, 6, 6> spectral_matrix() const;
};

double frequency_domain_psd_at(const SystemParams& p, double omega, const NoiseModel& noise);
Spectrum frequency_domain_psd(const SystemParams& p, const FrequencyGrid& grid,
                              const NoiseModel& noise);

// ------------------------------------------------------------------
// Time-domain validator: exact discretization of the linear quadrature
// SDE with symmetrized (classical) vacuum noise.

struct SimConfig {
    double dt = 0.0;               // step, s; must resolve the fastest rate
    double duration = 0.0;         // total simulated time, s
    std::uint64_t seed = 0;        // stream seed, recorded in outputs
    std::size_t segment_length = 0;  // Welch segment, samples
    double overlap = 0.5;          // Welch overlap fraction in [0, 1)
    bool noise_enabled = true;     // disable for deterministic response tests
    std::optional<std::array<double, 6>> initial_state;  // default: stationary sample
};

// Throws std::invalid_argument naming the violated constraint.
void validate_sim_config(const SimConfig& cfg, const SystemParams& p);

struct Trajectory {
    double dt = 0.0;
    std::uint64_t seed = 0;
    // column-major storage: state[k] is the 6-vector at time k*dt
    std::vector<std::array<double, 6>> states;
};

// Integrates the drift with exact exponential propagation per step and
// exact discrete noise covariance; requires a stable drift when noise is
// enabled (the stationary distribution seeds the initial state).
Trajectory simulate_trajectory(const SystemParams& p, const SimConfig& cfg);

// Same integration, storing only the bright-mode coordinate; identical
// draws, so it matches bright_mode_series(simulate_trajectory(...)) bit
// for bit at a sixth of the memory.
std::vector<double> simulate_bright_series(const SystemParams& p, const SimConfig& cfg);

// Bright-mode coordinate (g_x x + g_y y)/g_b extracted from a trajectory.
std::vector<double> bright_mode_series(const Trajectory& traj, const SystemParams& p);

// Steady-state covariance of the quadrature dynamics: solves
// A P + P A^T + D = 0 for the symmetrized diffusion D.
Eigen::Matrix<double, 6, 6> stationary_covariance(const SystemParams& p);

// ------------------------------------------------------------------
// Welch estimator: Hann-windowed, overlapped, averaged two-sided
// periodogram, normalized so the integral over frequency (Hz) equals the
// series variance.  Grid values are angular frequencies of the two-sided
// spectrum; the estimate of S(w) matches the analytic PSD convention
// where variance = integral S(w) dw / 2pi.
Spectrum welch_psd(const std::vector<double>& series, const SimConfig& cfg);

} // namespace optospec
