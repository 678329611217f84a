#pragma once

#include <optional>

#include "optospec/params.hpp"
#include "optospec/spectrum.hpp"
#include "optospec/susceptibility.hpp"

namespace optospec {

// ------------------------------------------------------------------
// Closed-form spectra of the two-dimensional coherent-scattering model.
// All scalar evaluators are pure; grid wrappers evaluate pointwise and
// are safe to run data-parallel.

// Stationary displacement PSD of the geometric bright mode at a single
// angular frequency (positive or negative).  Units: s.
double bright_mode_psd_at(const SystemParams& p, double omega);

// Thermal (flat force noise) and optical back-action contributions,
// summing exactly to bright_mode_psd_at.
struct PsdParts {
    double thermal;
    double backaction;
};
PsdParts bright_mode_psd_parts_at(const SystemParams& p, double omega);

Spectrum bright_mode_psd(const SystemParams& p, const FrequencyGrid& grid);

// One-dimensional limit: the full model evaluated with the Y mode
// decoupled (g_y = 0), so only x-axis quantities enter.
double one_d_psd_at(const SystemParams& p, double omega);
Spectrum one_d_psd(const SystemParams& p, const FrequencyGrid& grid);

// Effective (closed-loop) mechanical susceptibility of the 1D model;
// its modulus is even in omega.
complexd chi_mech_effective(const SystemParams& p, double omega);

// Total force PSD driving the 1D motion: the optical vacuum term
// kappa g^2 |chi_c(-w)|^2 plus the thermal force referred exactly
// through the bare response pair.  one_d_psd factorizes as
// |chi_mech_effective|^2 * force_psd_1d.
double force_psd_1d_at(const SystemParams& p, double omega);

// Model asymmetry A(w) = S(-w)/S(w) on a strictly positive grid.
Spectrum asymmetry_model(const SystemParams& p, const FrequencyGrid& grid);

// Shot-noise-normalized heterodyne output on a positive offset grid:
// upper branch S_out(W_LO + w), lower branch S_out(W_LO - w).
double heterodyne_psd_at(const SystemParams& p, double omega, Branch branch);
Spectrum heterodyne_psd(const SystemParams& p, const FrequencyGrid& grid, Branch branch);

// Corrected asymmetry recovered from two measured heterodyne branches:
// A = [(S_out(W_LO-w)-1)/(S_out(W_LO+w)-1)] * [((w-D)^2+(k/2)^2)/((w+D)^2+(k/2)^2)].
// Points whose anti-Stokes excess falls below `noise_floor` are flagged
// invalid instead of being dropped.
Spectrum asymmetry_from_data(const Spectrum& stokes, const Spectrum& antistokes,
                             const SystemParams& p, double noise_floor = 1e-12);

// Interference term I(w) = |g_x^2 chi_x^- + g_y^2 chi_y^-|^2 whose
// antiresonance sits at the bare dark-mode frequency.
double interference_term_at(const SystemParams& p, double omega);
Spectrum interference_term(const SystemParams& p, const FrequencyGrid& grid);

// Pointwise Stokes - anti-Stokes difference of two cavity-corrected
// displacement spectra (the quantum back-action contribution).
Spectrum backaction_spectrum(const Spectrum& stokes_corrected,
                             const Spectrum& antistokes_corrected);

// Converts a heterodyne branch back to a displacement spectrum by
// inverting the shot-noise normalization and cavity filter.
Spectrum heterodyne_to_displacement(const Spectrum& het, const SystemParams& p);

// ------------------------------------------------------------------
// Extremum localization with sub-bin accuracy: parabola through the
// extreme sample and its two neighbours.

struct Extremum {
    double omega;   // interpolated location, rad/s
    double value;   // interpolated value
    std::size_t index;  // grid index of the extreme sample
};

Extremum find_minimum(const Spectrum& s, double w_lo, double w_hi);
Extremum find_maximum(const Spectrum& s, double w_lo, double w_hi);

// Indices of strict local maxima of the values array (interior points).
std::vector<std::size_t> local_maxima(const Spectrum& s);

} // namespace optospec
