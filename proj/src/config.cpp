#include "optospec/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace optospec {

using nlohmann::ordered_json;

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return std::string(buf, ptr);
}

namespace {

double require_number(const ordered_json& j, const std::string& key) {
    if (!j.at(key).is_number())
        throw std::invalid_argument(key + ": must be a number");
    return j.at(key).get<double>();
}

const std::set<std::string> kParamKeys = {
    "kappa_hz", "delta_hz", "omega_x_hz", "omega_y_hz",
    "gamma_x_hz", "gamma_y_hz", "Gamma_x_hz", "Gamma_y_hz",
    "g_max_hz", "theta_deg", "eta",
};

const std::set<std::string> kTopKeys = {"grid", "sim", "fit"};

SystemParams parse_params(const ordered_json& j) {
    for (const auto& key : kParamKeys)
        if (!j.contains(key))
            throw std::invalid_argument(key + ": missing required field");
    SystemParams p;
    p.kappa = hz_to_rad(require_number(j, "kappa_hz"));
    p.delta = hz_to_rad(require_number(j, "delta_hz"));
    p.omega_x = hz_to_rad(require_number(j, "omega_x_hz"));
    p.omega_y = hz_to_rad(require_number(j, "omega_y_hz"));
    p.gamma_x = hz_to_rad(require_number(j, "gamma_x_hz"));
    p.gamma_y = hz_to_rad(require_number(j, "gamma_y_hz"));
    p.Gamma_x = hz_to_rad(require_number(j, "Gamma_x_hz"));
    p.Gamma_y = hz_to_rad(require_number(j, "Gamma_y_hz"));
    p.g_max = hz_to_rad(require_number(j, "g_max_hz"));
    p.theta = deg_to_rad(require_number(j, "theta_deg"));
    p.eta = require_number(j, "eta");
    return p;
}

GridSpec parse_grid(const ordered_json& j) {
    GridSpec g;
    const std::set<std::string> keys = {"f_min_hz", "f_max_hz", "points"};
    for (const auto& [key, val] : j.items())
        if (!keys.count(key))
            throw std::invalid_argument("grid." + key + ": unknown field");
    if (j.contains("f_min_hz")) g.f_min_hz = require_number(j, "f_min_hz");
    if (j.contains("f_max_hz")) g.f_max_hz = require_number(j, "f_max_hz");
    if (j.contains("points")) {
        if (!j.at("points").is_number_unsigned())
            throw std::invalid_argument("grid.points: must be a positive integer");
        g.points = j.at("points").get<std::size_t>();
    }
    return g;
}

SimConfig parse_sim(const ordered_json& j) {
    SimConfig s;
    s.dt = 5e-8;
    s.duration = 0.1;
    s.segment_length = 65536;
    const std::set<std::string> keys = {"dt_s", "duration_s", "seed", "segment_length",
                                        "overlap", "window", "noise_enabled",
                                        "initial_state"};
    for (const auto& [key, val] : j.items())
        if (!keys.count(key))
            throw std::invalid_argument("sim." + key + ": unknown field");
    if (j.contains("dt_s")) s.dt = require_number(j, "dt_s");
    if (j.contains("duration_s")) s.duration = require_number(j, "duration_s");
    if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("segment_length")) s.segment_length = j.at("segment_length").get<std::size_t>();
    if (j.contains("overlap")) s.overlap = require_number(j, "overlap");
    if (j.contains("window")) {
        if (j.at("window").get<std::string>() != "hann")
            throw std::invalid_argument("sim.window: only 'hann' is supported");
    }
    if (j.contains("noise_enabled")) s.noise_enabled = j.at("noise_enabled").get<bool>();
    if (j.contains("initial_state")) {
        const auto& arr = j.at("initial_state");
        if (!arr.is_array() || arr.size() != 6)
            throw std::invalid_argument("sim.initial_state: must be an array of 6 numbers");
        std::array<double, 6> init{};
        for (std::size_t i = 0; i < 6; ++i) init[i] = arr[i].get<double>();
        s.initial_state = init;
    }
    return s;
}

FitConfig parse_fit(const ordered_json& j, const SystemParams& initial) {
    FitConfig f;
    f.initial = initial;
    const std::set<std::string> keys = {"free", "shared", "bounds", "max_iterations",
                                        "tolerance"};
    for (const auto& [key, val] : j.items())
        if (!keys.count(key))
            throw std::invalid_argument("fit." + key + ": unknown field");
    auto parse_id = [](const std::string& name, const char* field) {
        const auto id = param_from_name(name);
        if (!id)
            throw std::invalid_argument(std::string(field) + ": unknown parameter '" +
                                        name + "'");
        return *id;
    };
    if (j.contains("free"))
        for (const auto& name : j.at("free"))
            f.free.push_back(parse_id(name.get<std::string>(), "fit.free"));
    if (j.contains("shared"))
        for (const auto& name : j.at("shared"))
            f.shared.push_back(parse_id(name.get<std::string>(), "fit.shared"));
    if (j.contains("bounds")) {
        for (const auto& [name, bound] : j.at("bounds").items()) {
            const ParamId id = parse_id(name, "fit.bounds");
            if (!bound.is_array() || bound.size() != 2)
                throw std::invalid_argument("fit.bounds." + name + ": must be [lo, hi]");
            double lo = bound[0].get<double>();
            double hi = bound[1].get<double>();
            // external units -> internal
            if (id == ParamId::theta) {
                lo = deg_to_rad(lo);
                hi = deg_to_rad(hi);
            } else if (id != ParamId::eta) {
                lo = hz_to_rad(lo);
                hi = hz_to_rad(hi);
            }
            f.bounds[id] = {lo, hi};
        }
    }
    if (j.contains("max_iterations")) f.max_iterations = j.at("max_iterations").get<int>();
    if (j.contains("tolerance")) f.tolerance = require_number(j, "tolerance");
    if (f.tolerance <= 0.0) throw std::invalid_argument("fit.tolerance: must be > 0");
    return f;
}

} // namespace

ConfigFile parse_config(const std::string& json_text, bool lax) {
    ordered_json j;
    try {
        j = ordered_json::parse(json_text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");

    try {
        ConfigFile cfg;
        for (const auto& [key, val] : j.items()) {
            if (kParamKeys.count(key) || kTopKeys.count(key)) continue;
            if (lax)
                cfg.warnings.push_back("unknown field ignored: " + key);
            else
                throw std::invalid_argument(key + ": unknown field (use --lax to ignore)");
        }

        cfg.params = parse_params(j);
        for (auto& w : validate_params(cfg.params)) cfg.warnings.push_back(w);

        if (j.contains("grid")) {
            cfg.grid = parse_grid(j.at("grid"));
            cfg.grid_present = true;
        }
        if (j.contains("sim")) {
            cfg.sim = parse_sim(j.at("sim"));
            cfg.sim_present = true;
        }
        if (j.contains("fit")) {
            cfg.fit = parse_fit(j.at("fit"), cfg.params);
            cfg.fit_present = true;
        }
        return cfg;
    } catch (const ordered_json::exception& e) {
        // wrong JSON types surface as config errors, not internal ones
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
}

ConfigFile load_config(const std::string& path, bool lax) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), lax);
}

std::string config_to_json(const ConfigFile& cfg) {
    const SystemParams& p = cfg.params;
    ordered_json j;
    j["kappa_hz"] = rad_to_hz(p.kappa);
    j["delta_hz"] = rad_to_hz(p.delta);
    j["omega_x_hz"] = rad_to_hz(p.omega_x);
    j["omega_y_hz"] = rad_to_hz(p.omega_y);
    j["gamma_x_hz"] = rad_to_hz(p.gamma_x);
    j["gamma_y_hz"] = rad_to_hz(p.gamma_y);
    j["Gamma_x_hz"] = rad_to_hz(p.Gamma_x);
    j["Gamma_y_hz"] = rad_to_hz(p.Gamma_y);
    j["g_max_hz"] = rad_to_hz(p.g_max);
    j["theta_deg"] = rad_to_deg(p.theta);
    j["eta"] = p.eta;
    j["grid"] = {{"f_min_hz", cfg.grid.f_min_hz},
                 {"f_max_hz", cfg.grid.f_max_hz},
                 {"points", cfg.grid.points}};
    if (cfg.sim_present) {
        ordered_json s;
        s["dt_s"] = cfg.sim.dt;
        s["duration_s"] = cfg.sim.duration;
        s["seed"] = cfg.sim.seed;
        s["segment_length"] = cfg.sim.segment_length;
        s["overlap"] = cfg.sim.overlap;
        s["window"] = "hann";
        s["noise_enabled"] = cfg.sim.noise_enabled;
        s["rng"] = "splitmix64-seeded mt19937_64, Box-Muller gaussians";
        j["sim"] = s;
    }
    if (cfg.fit_present) {
        ordered_json f;
        for (ParamId id : cfg.fit.free) f["free"].push_back(param_name(id));
        for (ParamId id : cfg.fit.shared) f["shared"].push_back(param_name(id));
        f["max_iterations"] = cfg.fit.max_iterations;
        f["tolerance"] = cfg.fit.tolerance;
        j["fit"] = f;
    }
    return j.dump(2);
}

void write_spectrum_csv(const std::string& path, const Spectrum& s,
                        const std::string& value_label) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    const bool flagged = !s.valid.empty();
    out << "f_hz," << value_label;
    if (flagged) out << ",valid";
    out << "\n";
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << format_double(rad_to_hz(s.grid.points[i])) << ","
            << format_double(s.values[i]);
        if (flagged) out << "," << (s.valid[i] ? 1 : 0);
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

void write_sidecar(const std::string& csv_path, const ConfigFile& cfg,
                   const std::vector<std::pair<std::string, std::string>>& extras) {
    ordered_json j = ordered_json::parse(config_to_json(cfg));
    for (const auto& [key, value] : extras) j[key] = value;
    std::ofstream out(csv_path + ".meta.json");
    if (!out) throw std::runtime_error("cannot open for writing: " + csv_path + ".meta.json");
    out << j.dump(2) << "\n";
}

Spectrum read_spectrum_csv(const std::string& path, SpectrumKind kind, Branch branch) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path);

    // pick up branch/kind from the sidecar when available
    {
        std::ifstream meta(path + ".meta.json");
        if (meta) {
            std::stringstream ss;
            ss << meta.rdbuf();
            try {
                const auto j = ordered_json::parse(ss.str());
                if (j.contains("kind")) {
                    const auto k = j.at("kind").get<std::string>();
                    if (k == "heterodyne-upper") { kind = SpectrumKind::heterodyne; branch = Branch::upper; }
                    else if (k == "heterodyne-lower") { kind = SpectrumKind::heterodyne; branch = Branch::lower; }
                    else if (k == "bright") kind = SpectrumKind::bright_mode_psd;
                    else if (k == "interference") kind = SpectrumKind::interference;
                    else if (k == "asymmetry") kind = SpectrumKind::asymmetry;
                }
            } catch (const std::exception&) {
                // ignore malformed sidecars; fall back to the arguments
            }
        }
    }

    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument(path + ": empty file");
    const bool has_valid = line.find(",valid") != std::string::npos;

    Spectrum s;
    s.kind = kind;
    s.branch = branch;
    std::vector<double> freqs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        if (!std::getline(ls, cell, ',')) break;
        freqs.push_back(hz_to_rad(std::stod(cell)));
        if (!std::getline(ls, cell, ','))
            throw std::invalid_argument(path + ": missing value column");
        s.values.push_back(std::stod(cell));
        if (has_valid) {
            if (!std::getline(ls, cell, ','))
                throw std::invalid_argument(path + ": missing valid column");
            s.valid.push_back(static_cast<std::uint8_t>(std::stoi(cell)));
        }
    }
    s.grid = FrequencyGrid(std::move(freqs));
    if (s.values.size() != s.grid.size())
        throw std::invalid_argument(path + ": ragged CSV");
    return s;
}

} // namespace optospec
