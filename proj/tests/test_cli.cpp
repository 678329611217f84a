#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "optospec/config.hpp"
#include "optospec/spectra.hpp"
#include "test_helpers.hpp"

using namespace optospec;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int exit_code;
    std::string stderr_text;
};

CliRun run_cli(const std::string& args, const fs::path& dir) {
    const fs::path errfile = dir / "stderr.txt";
    const std::string cmd =
        std::string(OPTOSPEC_BIN) + " " + args + " 2>" + errfile.string();
    const int raw = std::system(cmd.c_str());
    CliRun r;
    r.exit_code = WEXITSTATUS(raw);
    std::ifstream in(errfile);
    std::stringstream ss;
    ss << in.rdbuf();
    r.stderr_text = ss.str();
    return r;
}

std::string file_text(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path make_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_config(const fs::path& path, double theta_deg = 67.0, double delta_hz = -130e3,
                  double g_max_hz = 23.5e3, const std::string& extra = "") {
    std::ofstream f(path);
    f << "{\n"
      << "\"kappa_hz\": 57000, \"delta_hz\": " << delta_hz << ",\n"
      << "\"omega_x_hz\": 131000, \"omega_y_hz\": 120000,\n"
      << "\"gamma_x_hz\": 1e-3, \"gamma_y_hz\": 1e-3,\n"
      << "\"Gamma_x_hz\": 6200, \"Gamma_y_hz\": 5600,\n"
      << "\"g_max_hz\": " << g_max_hz << ", \"theta_deg\": " << theta_deg
      << ", \"eta\": 0.35" << (extra.empty() ? "" : ",\n" + extra) << "\n}\n";
}

} // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("spectrum command is deterministic and parseable") {
    const fs::path dir = make_dir("optospec_cli_spectrum");
    const fs::path cfg = dir / "config.json";
    write_config(cfg, 81.0, -130e3, 23.5e3,
                 R"("grid": {"f_min_hz": 60000, "f_max_hz": 200000, "points": 701})");

    const fs::path out1 = dir / "a.csv";
    const fs::path out2 = dir / "b.csv";
    CHECK(run_cli("spectrum --config " + cfg.string() + " --kind heterodyne-upper --out " +
                      out1.string(),
                  dir).exit_code == 0);
    CHECK(run_cli("spectrum --config " + cfg.string() + " --kind heterodyne-upper --out " +
                      out2.string(),
                  dir).exit_code == 0);
    CHECK(file_text(out1) == file_text(out2));  // byte-identical
    CHECK(file_text(out1).rfind("f_hz,value", 0) == 0);

    const Spectrum s = read_spectrum_csv(out1.string());
    CHECK(s.branch == Branch::upper);  // recovered from the sidecar
    CHECK(s.size() == 701);
    for (double v : s.values) CHECK(v >= 1.0 - 1e-9);

    // sidecar records the resolved config
    const auto meta = nlohmann::json::parse(file_text(out1.string() + ".meta.json"));
    CHECK(meta.at("theta_deg").get<double>() == doctest::Approx(81.0));
    CHECK(meta.at("kind").get<std::string>() == "heterodyne-upper");
}

TEST_CASE("uncoupled heterodyne spectrum is exactly shot noise") {
    const fs::path dir = make_dir("optospec_cli_shot");
    const fs::path cfg = dir / "config.json";
    write_config(cfg, 67.0, -130e3, 0.0,
                 R"("grid": {"f_min_hz": 60000, "f_max_hz": 200000, "points": 101})");
    const fs::path out = dir / "flat.csv";
    REQUIRE(run_cli("spectrum --config " + cfg.string() +
                        " --kind heterodyne-upper --out " + out.string(),
                    dir).exit_code == 0);
    const Spectrum s = read_spectrum_csv(out.string());
    for (double v : s.values) CHECK(v == 1.0);
}

TEST_CASE("invalid config exits 2 naming the field") {
    const fs::path dir = make_dir("optospec_cli_invalid");
    const fs::path cfg = dir / "config.json";
    std::ofstream(cfg) << R"({"kappa_hz": -5})";
    const CliRun r = run_cli("spectrum --config " + cfg.string() + " --kind bright --out " +
                                 (dir / "x.csv").string(),
                             dir);
    CHECK(r.exit_code == 2);

    const fs::path cfg2 = dir / "config2.json";
    write_config(cfg2);
    {
        std::string text = file_text(cfg2);
        text.insert(text.rfind('}'), R"(, "unknown_knob": 3)");
        std::ofstream(cfg2) << text;
    }
    const CliRun r2 = run_cli("spectrum --config " + cfg2.string() + " --kind bright --out " +
                                  (dir / "y.csv").string(),
                              dir);
    CHECK(r2.exit_code == 2);
    CHECK(r2.stderr_text.find("unknown_knob") != std::string::npos);

    // --lax downgrades the unknown key to a warning
    const CliRun r3 = run_cli("--lax spectrum --config " + cfg2.string() +
                                  " --kind bright --out " + (dir / "z.csv").string(),
                              dir);
    CHECK(r3.exit_code == 0);
    CHECK(r3.stderr_text.find("unknown_knob") != std::string::npos);
}

TEST_CASE("unstable parameters exit 3 for spectra, flagged for eigen") {
    const fs::path dir = make_dir("optospec_cli_unstable");
    const fs::path cfg = dir / "blue.json";
    write_config(cfg, 90.0, +131e3, 23.5e3);  // blue detuned, strongly coupled

    CHECK(run_cli("spectrum --config " + cfg.string() + " --kind bright --out " +
                      (dir / "s.csv").string(),
                  dir).exit_code == 3);
    CHECK(run_cli("asymmetry --config " + cfg.string() + " --out " +
                      (dir / "a.csv").string(),
                  dir).exit_code == 3);

    const fs::path out = dir / "eigen.json";
    CHECK(run_cli("eigen --config " + cfg.string() + " --out " + out.string(), dir)
              .exit_code == 0);
    const auto j = nlohmann::json::parse(file_text(out));
    CHECK(j.at("stable").get<bool>() == false);
    CHECK(j.at("modes").size() == 3);
}

TEST_CASE("eigen output matches the decoupled limit exactly") {
    const fs::path dir = make_dir("optospec_cli_eigen");
    const fs::path cfg = dir / "decoupled.json";
    write_config(cfg, 67.0, -130e3, 0.0);
    const fs::path out = dir / "eigen.json";
    REQUIRE(run_cli("eigen --config " + cfg.string() + " --out " + out.string(), dir)
                .exit_code == 0);
    const auto j = nlohmann::json::parse(file_text(out));
    REQUIRE(j.at("modes").size() == 3);
    CHECK(j.at("stable").get<bool>());
    CHECK(j["modes"][0].at("frequency_hz").get<double>() == doctest::Approx(120000.0));
    CHECK(j["modes"][1].at("frequency_hz").get<double>() == doctest::Approx(130000.0));
    CHECK(j["modes"][2].at("frequency_hz").get<double>() == doctest::Approx(131000.0));
    CHECK(j["modes"][1].at("decay_hz").get<double>() == doctest::Approx(57000.0));
}

TEST_CASE("asymmetry of an uncoupled system is exactly one") {
    const fs::path dir = make_dir("optospec_cli_asym");
    const fs::path cfg = dir / "uncoupled.json";
    write_config(cfg, 67.0, -130e3, 0.0,
                 R"("grid": {"f_min_hz": 1000, "f_max_hz": 200000, "points": 101})");
    const fs::path out = dir / "a.csv";
    REQUIRE(run_cli("asymmetry --config " + cfg.string() + " --out " + out.string(), dir)
                .exit_code == 0);
    const Spectrum a = read_spectrum_csv(out.string(), SpectrumKind::asymmetry);
    for (double v : a.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(file_text(out).rfind("f_hz,A", 0) == 0);
}

TEST_CASE("simulate: fixed seed reproduces byte-identical outputs") {
    const fs::path dir = make_dir("optospec_cli_sim");
    const fs::path cfg = dir / "sim.json";
    // slow parameters keep the run short
    std::ofstream(cfg) << R"({
      "kappa_hz": 3000, "delta_hz": -2000,
      "omega_x_hz": 2000, "omega_y_hz": 1500,
      "gamma_x_hz": 200, "gamma_y_hz": 150,
      "Gamma_x_hz": 400, "Gamma_y_hz": 300,
      "g_max_hz": 500, "theta_deg": 70, "eta": 0.5,
      "sim": {"dt_s": 2e-6, "duration_s": 0.5, "segment_length": 8192, "overlap": 0.5}
    })";

    const fs::path out1 = dir / "t1.csv";
    const fs::path out2 = dir / "t2.csv";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --seed 12345 --out " +
                        out1.string(),
                    dir).exit_code == 0);
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --seed 12345 --out " +
                        out2.string(),
                    dir).exit_code == 0);
    CHECK(file_text(out1) == file_text(out2));
    CHECK(file_text(fs::path(out1.string() + ".psd.csv")) ==
          file_text(fs::path(out2.string() + ".psd.csv")));

    const auto meta = nlohmann::json::parse(file_text(out1.string() + ".meta.json"));
    CHECK(meta.at("seed").get<std::string>() == "12345");
    CHECK(meta.at("sim").at("segment_length").get<int>() == 8192);

    // different seed changes the trajectory
    const fs::path out3 = dir / "t3.csv";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --seed 999 --out " +
                        out3.string(),
                    dir).exit_code == 0);
    CHECK(file_text(out1) != file_text(out3));
}

TEST_CASE("simulate: unstable configuration exits 3") {
    const fs::path dir = make_dir("optospec_cli_sim_unstable");
    const fs::path cfg = dir / "blue.json";
    write_config(cfg, 90.0, +131e3, 23.5e3,
                 R"("sim": {"dt_s": 5e-8, "duration_s": 0.01, "segment_length": 8192})");
    CHECK(run_cli("simulate --config " + cfg.string() + " --out " +
                      (dir / "t.csv").string(),
                  dir).exit_code == 3);
}

TEST_CASE("zero-noise simulate emits the damped sinusoid") {
    const fs::path dir = make_dir("optospec_cli_sim_det");
    const fs::path cfg = dir / "det.json";
    std::ofstream(cfg) << R"({
      "kappa_hz": 3000, "delta_hz": -2000,
      "omega_x_hz": 2000, "omega_y_hz": 1500,
      "gamma_x_hz": 200, "gamma_y_hz": 150,
      "Gamma_x_hz": 400, "Gamma_y_hz": 300,
      "g_max_hz": 0, "theta_deg": 90, "eta": 0.5,
      "sim": {"dt_s": 2e-6, "duration_s": 0.3, "segment_length": 8192,
              "initial_state": [0, 0, 1, 0, 0, 0]}
    })";
    const fs::path out = dir / "det.csv";
    REQUIRE(run_cli("simulate --config " + cfg.string() + " --zero-noise --traj-stride 1 " +
                        "--out " + out.string(),
                    dir).exit_code == 0);
    // check a few rows against the analytic damped sinusoid
    std::ifstream in(out);
    std::string line;
    std::getline(in, line);  // header
    int row = 0;
    while (std::getline(in, line) && row < 2000) {
        std::stringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        const double t = std::stod(cell);
        for (int c = 0; c < 3; ++c) std::getline(ls, cell, ',');
        const double x = std::stod(cell);
        const double envelope = std::exp(-hz_to_rad(200.0) / 2.0 * t);
        const double exact = envelope * std::cos(hz_to_rad(2000.0) * t);
        CHECK(std::abs(x - exact) <= 1e-6 * envelope + 1e-12);
        ++row;
    }
    CHECK(row > 100);
}

TEST_CASE("fit: identity and synthetic recovery through the CLI") {
    const fs::path dir = make_dir("optospec_cli_fit");
    const fs::path truth_cfg = dir / "truth.json";
    write_config(truth_cfg, 67.0, -130e3, 23.5e3,
                 R"("grid": {"f_min_hz": 70000, "f_max_hz": 190000, "points": 401})");

    // generate branches with the spectrum command
    const fs::path lower = dir / "lower.csv";
    const fs::path upper = dir / "upper.csv";
    REQUIRE(run_cli("spectrum --config " + truth_cfg.string() +
                        " --kind heterodyne-lower --out " + lower.string(),
                    dir).exit_code == 0);
    REQUIRE(run_cli("spectrum --config " + truth_cfg.string() +
                        " --kind heterodyne-upper --out " + upper.string(),
                    dir).exit_code == 0);

    // identity fit: no free parameters, chi2 = 0 on exact data
    const fs::path id_cfg = dir / "identity.json";
    write_config(id_cfg, 67.0, -130e3, 23.5e3, R"("fit": {"free": []})");
    const fs::path id_out = dir / "identity_fit.json";
    CHECK(run_cli("fit --config " + id_cfg.string() + " --data " + lower.string() + "," +
                      upper.string() + " --out " + id_out.string(),
                  dir).exit_code == 0);
    auto j = nlohmann::json::parse(file_text(id_out));
    CHECK(j.at("converged").get<bool>());
    CHECK(j.at("chi2").get<double>() < 1e-18);
    CHECK(j.at("estimates").at("g_max_hz").get<double>() == doctest::Approx(23500.0));

    // free fit from a perturbed start recovers the truth on clean data
    const fs::path fit_cfg = dir / "fit.json";
    write_config(fit_cfg, 64.0, -130e3, 24.5e3,
                 R"("fit": {"free": ["g_max", "theta", "eta"]})");
    const fs::path fit_out = dir / "fit_result.json";
    CHECK(run_cli("fit --config " + fit_cfg.string() + " --data " + lower.string() + "," +
                      upper.string() + " --out " + fit_out.string(),
                  dir).exit_code == 0);
    j = nlohmann::json::parse(file_text(fit_out));
    CHECK(j.at("converged").get<bool>());
    CHECK(j.at("estimates").at("g_max_hz").get<double>() == doctest::Approx(23500.0).epsilon(1e-3));
    CHECK(j.at("estimates").at("theta_deg").get<double>() == doctest::Approx(67.0).epsilon(1e-3));

    // starved iteration budget: result written, exit 4
    const fs::path starved_cfg = dir / "starved.json";
    write_config(starved_cfg, 57.0, -130e3, 27e3,
                 R"("fit": {"free": ["g_max", "theta", "eta"], "max_iterations": 1})");
    const fs::path starved_out = dir / "starved.json.out";
    const CliRun r = run_cli("fit --config " + starved_cfg.string() + " --data " +
                                 lower.string() + "," + upper.string() + " --out " +
                                 starved_out.string(),
                             dir);
    CHECK(r.exit_code == 4);
    j = nlohmann::json::parse(file_text(starved_out));
    CHECK_FALSE(j.at("converged").get<bool>());
}

TEST_CASE("spectrum kinds with the default grid") {
    const fs::path dir = make_dir("optospec_cli_defaults");
    const fs::path cfg = dir / "config.json";
    write_config(cfg);  // no grid block

    const fs::path bright = dir / "bright.csv";
    REQUIRE(run_cli("spectrum --config " + cfg.string() + " --kind bright --out " +
                        bright.string(),
                    dir).exit_code == 0);
    const Spectrum sb = read_spectrum_csv(bright.string());
    CHECK(sb.size() == 4001);  // default symmetric grid
    CHECK(sb.grid.points.front() == doctest::Approx(-hz_to_rad(300e3)));
    for (double v : sb.values) CHECK(v > 0.0);

    const fs::path interf = dir / "interference.csv";
    REQUIRE(run_cli("spectrum --config " + cfg.string() + " --kind interference --out " +
                        interf.string(),
                    dir).exit_code == 0);
    const Spectrum si = read_spectrum_csv(interf.string());
    CHECK(si.kind == SpectrumKind::interference);
    for (double v : si.values) CHECK(v >= 0.0);

    // heterodyne with a symmetric grid must be rejected by name
    const fs::path cfg2 = dir / "config2.json";
    write_config(cfg2, 67.0, -130e3, 23.5e3,
                 R"("grid": {"f_min_hz": -1000, "f_max_hz": 200000, "points": 101})");
    const CliRun r = run_cli("spectrum --config " + cfg2.string() +
                                 " --kind heterodyne-upper --out " + (dir / "x.csv").string(),
                             dir);
    CHECK(r.exit_code == 2);
    CHECK(r.stderr_text.find("f_min_hz") != std::string::npos);
}

TEST_CASE("joint fit across panels through the CLI") {
    const fs::path dir = make_dir("optospec_cli_jointfit");
    const std::string grid_block =
        R"("grid": {"f_min_hz": 70000, "f_max_hz": 190000, "points": 301})";

    // two panels at different detunings and angles, shared g_max
    const fs::path cfg_a = dir / "panel_a.json";
    const fs::path cfg_b = dir / "panel_b.json";
    write_config(cfg_a, 81.0, -110e3, 23.5e3, grid_block);
    write_config(cfg_b, 67.0, -130e3, 23.5e3, grid_block);

    std::vector<std::string> files;
    for (const auto& [cfg, tag] : {std::pair{cfg_a, "a"}, std::pair{cfg_b, "b"}}) {
        for (const char* kind : {"heterodyne-lower", "heterodyne-upper"}) {
            const fs::path out = dir / (std::string(tag) + "_" + kind + ".csv");
            REQUIRE(run_cli("spectrum --config " + cfg.string() + " --kind " + kind +
                                " --out " + out.string(),
                            dir).exit_code == 0);
            files.push_back(out.string());
        }
    }

    // perturbed starting points; g_max shared across panels
    const fs::path fit_cfg = dir / "fit.json";
    write_config(fit_cfg, 79.0, -110e3, 24.6e3,
                 R"("fit": {"free": ["g_max", "theta"], "shared": ["g_max"]})");
    const fs::path start_b = dir / "start_b.json";
    write_config(start_b, 65.0, -130e3, 24.6e3);
    const fs::path out = dir / "joint.json";
    const CliRun r = run_cli("fit --config " + fit_cfg.string() + " --data " + files[0] +
                                 "," + files[1] + " --data " + files[2] + "," + files[3] +
                                 " --panel-config " + fit_cfg.string() + " --panel-config " +
                                 start_b.string() + " --out " + out.string(),
                             dir);
    CHECK(r.exit_code == 0);
    const auto j = nlohmann::json::parse(file_text(out));
    REQUIRE(j.contains("panel_estimates"));
    CHECK(j["panel_estimates"][0].at("g_max_hz").get<double>() ==
          doctest::Approx(23500.0).epsilon(1e-3));
    CHECK(j["panel_estimates"][0].at("g_max_hz").get<double>() ==
          j["panel_estimates"][1].at("g_max_hz").get<double>());
    CHECK(j["panel_estimates"][0].at("theta_deg").get<double>() ==
          doctest::Approx(81.0).epsilon(1e-3));
    CHECK(j["panel_estimates"][1].at("theta_deg").get<double>() ==
          doctest::Approx(67.0).epsilon(1e-3));
    CHECK(j.at("std_errors").contains("g_max"));
    CHECK(j.at("std_errors").contains("theta[0]"));
}

TEST_CASE("interference CSV dips at the dark-mode frequency") {
    const fs::path dir = make_dir("optospec_cli_interference");
    const fs::path cfg = dir / "balanced.json";
    // g_x/2pi = 14 kHz, g_y/2pi = 11 kHz through the coupling inversion
    const Polarization pol = couplings_to_polarization(hz_to_rad(14e3), hz_to_rad(11e3),
                                                       hz_to_rad(131e3), hz_to_rad(120e3));
    write_config(cfg, rad_to_deg(pol.theta), -130e3, rad_to_hz(pol.g_max),
                 R"("grid": {"f_min_hz": 110000, "f_max_hz": 140000, "points": 3001})");
    const fs::path out = dir / "interference.csv";
    REQUIRE(run_cli("spectrum --config " + cfg.string() + " --kind interference --out " +
                        out.string(),
                    dir).exit_code == 0);
    const Spectrum s = read_spectrum_csv(out.string());
    const Extremum dip = find_minimum(s, s.grid.points.front(), s.grid.points.back());
    SystemParams p;  // only omega_b/omega_d needed
    p.omega_x = hz_to_rad(131e3);
    p.omega_y = hz_to_rad(120e3);
    p.theta = pol.theta;
    p.g_max = pol.g_max;
    const double step = s.grid.points[1] - s.grid.points[0];
    CHECK(std::abs(dip.omega - derive_couplings(p).omega_d) < step);
}

TEST_CASE("sweep emits one deterministic CSV per value and shows the hole transition") {
    const fs::path dir = make_dir("optospec_cli_sweep");
    const fs::path cfg = dir / "sweep.json";
    std::ofstream(cfg) << R"({
      "kappa_hz": 57000, "delta_hz": -130000,
      "omega_x_hz": 131000, "omega_y_hz": 120000,
      "gamma_x_hz": 1e-3, "gamma_y_hz": 1e-3,
      "Gamma_x_hz": 5800, "Gamma_y_hz": 5600,
      "g_max_hz": 22400, "theta_deg": 85, "eta": 0.35,
      "grid": {"f_min_hz": 100000, "f_max_hz": 150000, "points": 501}
    })";
    const fs::path out_dir = dir / "sweep";
    REQUIRE(run_cli("sweep --config " + cfg.string() +
                        " --param theta --from 85 --to 50 --step -5 --kind stokes --out " +
                        out_dir.string(),
                    dir).exit_code == 0);

    auto second_difference_at_dark_mode = [&](double theta_deg) {
        const fs::path f = out_dir / ("theta_" + format_double(theta_deg) + ".csv");
        REQUIRE(fs::exists(f));
        const auto meta = nlohmann::json::parse(file_text(fs::path(f.string() + ".meta.json")));
        CHECK(meta.at("theta_deg").get<double>() == doctest::Approx(theta_deg));
        CHECK(meta.at("sweep_param").get<std::string>() == "theta");
        const Spectrum s = read_spectrum_csv(f.string(), SpectrumKind::bright_mode_psd);
        SystemParams p;
        p.omega_x = hz_to_rad(131e3);
        p.omega_y = hz_to_rad(120e3);
        p.theta = deg_to_rad(theta_deg);
        const double dark = derive_couplings(p).omega_d;
        std::size_t mid = 0;
        for (std::size_t i = 0; i < s.size(); ++i)
            if (std::abs(s.grid.points[i] - dark) < std::abs(s.grid.points[mid] - dark))
                mid = i;
        const std::size_t off = 4;  // +-0.4 kHz on the 0.1 kHz grid
        return s.values[mid + off] - 2.0 * s.values[mid] + s.values[mid - off];
    };

    // dark-mode feature: peak at 85 deg, hole at 50 deg
    CHECK(second_difference_at_dark_mode(85.0) < 0.0);
    CHECK(second_difference_at_dark_mode(50.0) > 0.0);
    CHECK_FALSE(fs::exists(out_dir / "theta_45.csv"));
}

TEST_SUITE_END();
