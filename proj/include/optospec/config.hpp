#pragma once

#include <optional>
#include <string>
#include <vector>

#include "optospec/fitting.hpp"
#include "optospec/oracle.hpp"
#include "optospec/params.hpp"
#include "optospec/spectrum.hpp"

namespace optospec {

// Grid request in external units (Hz).
struct GridSpec {
    double f_min_hz = -300e3;
    double f_max_hz = 300e3;
    std::size_t points = 4001;

    FrequencyGrid to_grid() const {
        return FrequencyGrid::linspace(hz_to_rad(f_min_hz), hz_to_rad(f_max_hz), points);
    }
};

// Parsed configuration file: SystemParams in Hz/degrees plus optional
// grid, simulation and fit blocks.  Unknown keys are rejected unless
// lax = true (then they produce warnings).
struct ConfigFile {
    SystemParams params;            // already converted to rad/s
    GridSpec grid;                  // defaulted when absent
    bool grid_present = false;
    SimConfig sim;                  // defaulted when absent
    bool sim_present = false;
    FitConfig fit;                  // free set etc.; initial = params
    bool fit_present = false;
    std::vector<std::string> warnings;
};

// Throws std::invalid_argument naming the offending field.
ConfigFile load_config(const std::string& path, bool lax = false);
ConfigFile parse_config(const std::string& json_text, bool lax = false);

// Resolved configuration serialized back to external units; embedded in
// every output sidecar so results are self-describing.
std::string config_to_json(const ConfigFile& cfg);

// Shortest round-trip decimal representation (std::to_chars).
std::string format_double(double v);

// CSV with header `f_hz,<value_label>`; frequencies emitted in Hz.
// A `valid` column is appended when the spectrum carries flags.
void write_spectrum_csv(const std::string& path, const Spectrum& s,
                        const std::string& value_label);

// Sidecar `<path>.meta.json` with the resolved config and extras
// (key/value strings merged into the JSON object).
void write_sidecar(const std::string& csv_path, const ConfigFile& cfg,
                   const std::vector<std::pair<std::string, std::string>>& extras);

// Reads a spectrum CSV written by write_spectrum_csv; kind/branch are
// taken from the sidecar when present, else from the arguments.
Spectrum read_spectrum_csv(const std::string& path,
                           SpectrumKind kind = SpectrumKind::heterodyne,
                           Branch branch = Branch::none);

} // namespace optospec
