// optospec: batch evaluation of the two-mode coherent-scattering model.
// Subcommands emit plot-ready CSV/JSON; every output carries a sidecar
// with the fully resolved configuration.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "optospec/config.hpp"
#include "optospec/dynamics.hpp"
#include "optospec/oracle.hpp"
#include "optospec/spectra.hpp"

namespace {

using namespace optospec;
using nlohmann::ordered_json;

constexpr int kExitBadConfig = 2;
constexpr int kExitUnstable = 3;
constexpr int kExitNotConverged = 4;

struct CliError {
    int code;
    std::string message;
};

ConfigFile load_or_die(const std::string& path, bool lax) {
    try {
        ConfigFile cfg = load_config(path, lax);
        for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
        return cfg;
    } catch (const std::invalid_argument& e) {
        throw CliError{kExitBadConfig, e.what()};
    }
}

void require_stable(const SystemParams& p) {
    if (!is_stable(build_drift(p)))
        throw CliError{kExitUnstable, "parameters yield an unstable drift matrix"};
}

FrequencyGrid grid_for(const ConfigFile& cfg, bool positive) {
    try {
        if (cfg.grid_present) {
            if (positive && cfg.grid.f_min_hz <= 0.0)
                throw std::invalid_argument(
                    "grid.f_min_hz: must be > 0 for sideband-offset spectra");
            return cfg.grid.to_grid();
        }
        if (positive) return FrequencyGrid::linspace(hz_to_rad(1e3), hz_to_rad(300e3), 2991);
        return GridSpec{}.to_grid();
    } catch (const std::invalid_argument& e) {
        throw CliError{kExitBadConfig, e.what()};
    }
}

ordered_json params_json(const SystemParams& p) {
    ConfigFile tmp;
    tmp.params = p;
    return ordered_json::parse(config_to_json(tmp));
}

// ----------------------------------------------------------------
// spectrum

int cmd_spectrum(const std::string& config_path, const std::string& kind,
                 const std::string& out, bool lax) {
    ConfigFile cfg = load_or_die(config_path, lax);
    require_stable(cfg.params);

    Spectrum s;
    if (kind == "bright") {
        s = bright_mode_psd(cfg.params, grid_for(cfg, false));
    } else if (kind == "heterodyne-upper") {
        s = heterodyne_psd(cfg.params, grid_for(cfg, true), Branch::upper);
    } else if (kind == "heterodyne-lower") {
        s = heterodyne_psd(cfg.params, grid_for(cfg, true), Branch::lower);
    } else if (kind == "interference") {
        s = interference_term(cfg.params, grid_for(cfg, false));
    } else {
        throw CliError{kExitBadConfig, "kind: must be one of bright, heterodyne-upper, "
                                       "heterodyne-lower, interference"};
    }
    write_spectrum_csv(out, s, "value");
    write_sidecar(out, cfg, {{"command", "spectrum"}, {"kind", kind}});
    return 0;
}

// ----------------------------------------------------------------
// asymmetry

int cmd_asymmetry(const std::string& config_path, const std::string& out, bool lax) {
    ConfigFile cfg = load_or_die(config_path, lax);
    require_stable(cfg.params);
    const Spectrum a = asymmetry_model(cfg.params, grid_for(cfg, true));
    write_spectrum_csv(out, a, "A");
    write_sidecar(out, cfg, {{"command", "asymmetry"}, {"kind", "asymmetry"}});
    return 0;
}

// ----------------------------------------------------------------
// eigen

int cmd_eigen(const std::string& config_path, const std::string& out, bool lax) {
    ConfigFile cfg = load_or_die(config_path, lax);
    const DriftMatrix d = build_drift(cfg.params);
    const auto modes = eigenmodes(d);

    ordered_json j;
    j["config"] = params_json(cfg.params);
    j["stable"] = is_stable(d);
    j["modes"] = ordered_json::array();
    for (const auto& m : modes)
        j["modes"].push_back({{"frequency_hz", rad_to_hz(m.frequency)},
                              {"decay_hz", rad_to_hz(m.decay)}});
    std::ofstream f(out);
    if (!f) throw CliError{1, "cannot open for writing: " + out};
    f << j.dump(2) << "\n";
    return 0;
}

// ----------------------------------------------------------------
// simulate

int cmd_simulate(const std::string& config_path, std::uint64_t seed, bool seed_given,
                 bool zero_noise, std::size_t traj_stride, const std::string& out,
                 bool lax) {
    ConfigFile cfg = load_or_die(config_path, lax);
    if (!cfg.sim_present) {
        cfg.sim.dt = 5e-8;
        cfg.sim.duration = 0.1;
        cfg.sim.segment_length = 65536;
        cfg.sim_present = true;
    }
    if (seed_given) cfg.sim.seed = seed;
    if (zero_noise) cfg.sim.noise_enabled = false;
    if (cfg.sim.noise_enabled) require_stable(cfg.params);

    Trajectory traj;
    try {
        traj = simulate_trajectory(cfg.params, cfg.sim);
    } catch (const std::invalid_argument& e) {
        throw CliError{kExitBadConfig, e.what()};
    } catch (const std::runtime_error& e) {
        throw CliError{kExitUnstable, e.what()};
    }

    // decimated trajectory dump
    if (traj_stride == 0)
        traj_stride = std::max<std::size_t>(1, traj.states.size() / 200000);
    {
        std::ofstream f(out);
        if (!f) throw CliError{1, "cannot open for writing: " + out};
        f << "t,X_c,P_c,x,p_x,y,p_y\n";
        for (std::size_t k = 0; k < traj.states.size(); k += traj_stride) {
            f << format_double(static_cast<double>(k) * traj.dt);
            for (int c = 0; c < 6; ++c) f << "," << format_double(traj.states[k][c]);
            f << "\n";
        }
    }

    const std::vector<double> xb = bright_mode_series(traj, cfg.params);
    const Spectrum psd = welch_psd(xb, cfg.sim);
    const std::string psd_path = out + ".psd.csv";
    write_spectrum_csv(psd_path, psd, "value");

    write_sidecar(out, cfg,
                  {{"command", "simulate"},
                   {"kind", "trajectory"},
                   {"seed", std::to_string(cfg.sim.seed)},
                   {"trajectory_stride", std::to_string(traj_stride)},
                   {"psd_csv", psd_path}});
    write_sidecar(psd_path, cfg,
                  {{"command", "simulate"},
                   {"kind", "welch_psd"},
                   {"seed", std::to_string(cfg.sim.seed)}});
    return 0;
}

// ----------------------------------------------------------------
// fit

int cmd_fit(const std::string& config_path, const std::vector<std::string>& data_args,
            const std::vector<std::string>& panel_configs, const std::string& out,
            bool lax) {
    ConfigFile cfg = load_or_die(config_path, lax);
    if (!cfg.fit_present)
        throw CliError{kExitBadConfig, "fit: config has no fit block"};
    if (data_args.empty()) throw CliError{kExitBadConfig, "fit: no --data given"};
    if (!panel_configs.empty() && panel_configs.size() != data_args.size())
        throw CliError{kExitBadConfig, "fit: --panel-config count must match --data count"};

    std::vector<FitPanel> panels;
    for (std::size_t k = 0; k < data_args.size(); ++k) {
        FitPanel panel;
        panel.initial = panel_configs.empty()
                            ? cfg.params
                            : load_or_die(panel_configs[k], lax).params;
        std::stringstream ss(data_args[k]);
        std::string path;
        while (std::getline(ss, path, ',')) {
            try {
                panel.data.push_back(read_spectrum_csv(path));
            } catch (const std::invalid_argument& e) {
                throw CliError{kExitBadConfig, e.what()};
            }
        }
        panels.push_back(std::move(panel));
    }

    FitResult res;
    try {
        res = (panels.size() == 1) ? fit_heterodyne(panels[0].data, cfg.fit)
                                   : fit_heterodyne_joint(panels, cfg.fit);
    } catch (const std::invalid_argument& e) {
        throw CliError{kExitBadConfig, e.what()};
    }

    ordered_json j;
    j["config"] = ordered_json::parse(config_to_json(cfg));
    j["converged"] = res.converged;
    j["aborted_singular"] = res.aborted_singular;
    j["chi2"] = res.chi2;
    j["iterations"] = res.iterations;
    j["estimates"] = params_json(res.estimates);
    if (res.panel_estimates.size() > 1) {
        j["panel_estimates"] = ordered_json::array();
        for (const auto& p : res.panel_estimates) j["panel_estimates"].push_back(params_json(p));
    }
    ordered_json errs;
    for (const auto& [name, err] : res.std_errors) {
        // report in external units
        double scale = 1.0;
        if (name.rfind("theta", 0) == 0) scale = rad_to_deg(1.0);
        else if (name.rfind("eta", 0) != 0) scale = rad_to_hz(1.0);
        errs[name] = err * scale;
    }
    j["std_errors"] = errs;
    j["bound_hits"] = res.bound_hits;
    ordered_json cov = ordered_json::array();
    for (Eigen::Index r = 0; r < res.covariance.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < res.covariance.cols(); ++c)
            row.push_back(res.covariance(r, c));
        cov.push_back(row);
    }
    j["covariance"] = cov;

    std::ofstream f(out);
    if (!f) throw CliError{1, "cannot open for writing: " + out};
    f << j.dump(2) << "\n";
    return res.converged ? 0 : kExitNotConverged;
}

// ----------------------------------------------------------------
// sweep

int cmd_sweep(const std::string& config_path, const std::string& param, double from,
              double to, double step, const std::string& kind, const std::string& out_dir,
              bool lax) {
    ConfigFile cfg = load_or_die(config_path, lax);
    if (param != "theta" && param != "delta")
        throw CliError{kExitBadConfig, "sweep --param: only theta and delta are supported"};
    if (step == 0.0) throw CliError{kExitBadConfig, "sweep --step: must be nonzero"};
    if ((to - from) * step < 0.0)
        throw CliError{kExitBadConfig, "sweep --step: sign does not reach --to"};

    std::filesystem::create_directories(out_dir);
    const FrequencyGrid grid = grid_for(cfg, true);

    const int n_steps = static_cast<int>(std::floor((to - from) / step + 1e-9)) + 1;
    for (int i = 0; i < n_steps; ++i) {
        const double value = from + step * i;
        ConfigFile point = cfg;
        if (param == "theta")
            point.params.theta = deg_to_rad(value);
        else
            point.params.delta = hz_to_rad(value);
        try {
            validate_params(point.params);
        } catch (const std::invalid_argument& e) {
            throw CliError{kExitBadConfig, e.what()};
        }
        require_stable(point.params);

        Spectrum s;
        if (kind == "stokes" || kind == "antistokes") {
            const double sign = (kind == "stokes") ? -1.0 : 1.0;
            s.grid = grid;
            s.kind = SpectrumKind::bright_mode_psd;
            s.branch = (kind == "stokes") ? Branch::lower : Branch::upper;
            s.values.resize(grid.size());
            for (std::size_t g = 0; g < grid.size(); ++g)
                s.values[g] = bright_mode_psd_at(point.params, sign * grid.points[g]);
        } else if (kind == "asymmetry") {
            s = asymmetry_model(point.params, grid);
        } else {
            throw CliError{kExitBadConfig,
                           "sweep --kind: must be stokes, antistokes or asymmetry"};
        }

        std::ostringstream name;
        name << param << "_" << format_double(value) << ".csv";
        const std::string path = (std::filesystem::path(out_dir) / name.str()).string();
        write_spectrum_csv(path, s, kind == "asymmetry" ? "A" : "value");
        write_sidecar(path, point,
                      {{"command", "sweep"},
                       {"kind", kind},
                       {"sweep_param", param},
                       {"sweep_value", format_double(value)}});
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"optospec: spectra, asymmetries, eigenmodes, simulations and fits "
                 "of a 2D levitated optomechanical system"};
    app.require_subcommand(1);
    bool lax = false;
    app.add_flag("--lax", lax, "warn instead of rejecting unknown config fields");

    std::string config_path, out, kind = "bright", sweep_kind = "stokes", param = "theta";
    std::vector<std::string> data_args, panel_configs;
    double from = 0, to = 0, step = 1;
    std::uint64_t seed = 0;
    bool zero_noise = false;
    std::size_t traj_stride = 0;

    auto* sp = app.add_subcommand("spectrum", "evaluate a model spectrum to CSV");
    sp->add_option("--config", config_path)->required();
    sp->add_option("--kind", kind,
                   "bright | heterodyne-upper | heterodyne-lower | interference");
    sp->add_option("--out", out)->required();

    auto* as = app.add_subcommand("asymmetry", "corrected sideband asymmetry to CSV");
    as->add_option("--config", config_path)->required();
    as->add_option("--out", out)->required();

    auto* ei = app.add_subcommand("eigen", "drift-matrix eigenmodes to JSON");
    ei->add_option("--config", config_path)->required();
    ei->add_option("--out", out)->required();

    auto* si = app.add_subcommand("simulate", "time-domain simulation + Welch PSD");
    si->add_option("--config", config_path)->required();
    auto* seed_opt = si->add_option("--seed", seed, "override sim.seed");
    si->add_flag("--zero-noise", zero_noise, "disable stochastic forcing");
    si->add_option("--traj-stride", traj_stride,
                   "trajectory decimation stride (0 = auto)");
    si->add_option("--out", out)->required();

    auto* fi = app.add_subcommand("fit", "weighted least-squares fit to JSON");
    fi->add_option("--config", config_path, "initial parameters + fit block")->required();
    fi->add_option("--data", data_args,
                   "per panel: CSV path or 'lower.csv,upper.csv'")->required();
    fi->add_option("--panel-config", panel_configs,
                   "per-panel initial parameter files (match --data order)");
    fi->add_option("--out", out)->required();

    auto* sw = app.add_subcommand("sweep", "parameter sweep, one CSV per value");
    sw->add_option("--config", config_path)->required();
    sw->add_option("--param", param, "theta (deg) or delta (Hz)");
    sw->add_option("--from", from)->required();
    sw->add_option("--to", to)->required();
    sw->add_option("--step", step)->required();
    sw->add_option("--kind", sweep_kind, "stokes | antistokes | asymmetry");
    sw->add_option("--out", out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (sp->parsed()) return cmd_spectrum(config_path, kind, out, lax);
        if (as->parsed()) return cmd_asymmetry(config_path, out, lax);
        if (ei->parsed()) return cmd_eigen(config_path, out, lax);
        if (si->parsed())
            return cmd_simulate(config_path, seed, seed_opt->count() > 0, zero_noise,
                                traj_stride, out, lax);
        if (fi->parsed()) return cmd_fit(config_path, data_args, panel_configs, out, lax);
        if (sw->parsed())
            return cmd_sweep(config_path, param, from, to, step, sweep_kind, out, lax);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
