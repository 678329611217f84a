#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "optospec/grid.hpp"

namespace optospec {

enum class SpectrumKind {
    bright_mode_psd,  // displacement PSD of the bright mode, units s
    heterodyne,       // shot-noise-normalized output spectrum, dimensionless
    asymmetry,        // Stokes/anti-Stokes ratio, dimensionless
    interference,     // |g_x^2 chi_x^- + g_y^2 chi_y^-|^2, units s^2
    backaction,       // Stokes - anti-Stokes displacement difference, units s
};

enum class Branch { none, upper, lower };

std::string to_string(SpectrumKind k);
std::string to_string(Branch b);

// One real value per grid point, plus branch/normalization metadata.
// `valid` is empty when every point is valid; otherwise it flags points
// (kept, not dropped, so grids stay aligned for fitting).
struct Spectrum {
    FrequencyGrid grid;
    std::vector<double> values;
    SpectrumKind kind = SpectrumKind::bright_mode_psd;
    Branch branch = Branch::none;
    std::vector<std::uint8_t> valid;

    std::size_t size() const { return values.size(); }

    bool point_valid(std::size_t i) const {
        return valid.empty() || valid[i] != 0;
    }

    void require_same_grid(const Spectrum& other) const {
        if (grid.points != other.grid.points)
            throw std::invalid_argument("Spectrum: frequency grids do not match");
    }
};

} // namespace optospec
