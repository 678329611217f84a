#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "optospec/params.hpp"
#include "optospec/spectrum.hpp"

namespace optospec {

// Fittable members of SystemParams.
enum class ParamId {
    g_max, theta, delta, kappa,
    Gamma_x, Gamma_y, gamma_x, gamma_y,
    eta, omega_x, omega_y,
};

std::string param_name(ParamId id);
std::optional<ParamId> param_from_name(const std::string& name);
double get_param(const SystemParams& p, ParamId id);
void set_param(SystemParams& p, ParamId id, double value);

// Default finite-difference floor per parameter (absolute step when the
// value itself is ~0).
double fd_floor(ParamId id);

// ------------------------------------------------------------------
// Generic damped least squares (Levenberg-Marquardt with projection
// bounds and a forward finite-difference Jacobian).

struct LsqOptions {
    int max_iterations = 200;
    double tolerance = 1e-8;        // relative step threshold
    double lambda0 = 1e-3;          // initial damping
    double lambda_growth = 10.0;
    double lambda_max = 1e12;       // damping beyond this aborts (singular system)
    std::vector<double> fd_floors;  // absolute FD step floors, one per parameter
};

struct LsqResult {
    Eigen::VectorXd x;
    Eigen::MatrixXd covariance;     // scaled by reduced chi2
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
    bool aborted_singular = false;
    std::vector<bool> at_bound;     // per parameter, after the last step
};

// Minimizes || r(x) ||^2 where r already carries the weights; x is kept
// inside [lower, upper] by projection.  Accepted steps never increase chi2.
LsqResult least_squares(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual_fn,
                        const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper,
                        const LsqOptions& opts);

// ------------------------------------------------------------------
// Heterodyne spectrum fitting.

struct FitConfig {
    std::vector<ParamId> free;             // empty = identity fit
    SystemParams initial;
    std::map<ParamId, std::pair<double, double>> bounds;  // optional per-parameter
    int max_iterations = 200;
    double tolerance = 1e-8;
    // Parameters shared across panels in a joint fit; members must also be
    // in `free`.  Free parameters not listed here get one slot per panel.
    std::vector<ParamId> shared;
};

struct FitPanel {
    SystemParams initial;              // per-panel starting point
    std::vector<Spectrum> data;        // 1 or 2 heterodyne branches
};

struct FitResult {
    SystemParams estimates;                  // single-panel result
    std::vector<SystemParams> panel_estimates;  // one per panel for joint fits
    std::map<std::string, double> std_errors;   // keyed by parameter label
    double chi2 = 0.0;
    int iterations = 0;
    bool converged = false;
    bool aborted_singular = false;
    Eigen::MatrixXd covariance;
    std::vector<std::string> bound_hits;
};

// Weighted residual vector of one or more data branches against the model
// at p; weights are 1/max(data, 1) per point, invalid points get zero
// weight.  chi2 equals the squared norm of the returned vector.
struct ResidualReport {
    Eigen::VectorXd residuals;
    double chi2;
};
ResidualReport residuals(const std::vector<Spectrum>& data, const SystemParams& p);

FitResult fit_heterodyne(const std::vector<Spectrum>& data, const FitConfig& cfg);

// Joint multi-panel fit: `shared` parameters take one value across all
// panels, the remaining free parameters vary per panel.
FitResult fit_heterodyne_joint(const std::vector<FitPanel>& panels, const FitConfig& cfg);

} // namespace optospec
