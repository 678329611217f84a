#include "optospec/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "optospec/spectra.hpp"

namespace optospec {

std::string param_name(ParamId id) {
    switch (id) {
        case ParamId::g_max: return "g_max";
        case ParamId::theta: return "theta";
        case ParamId::delta: return "delta";
        case ParamId::kappa: return "kappa";
        case ParamId::Gamma_x: return "Gamma_x";
        case ParamId::Gamma_y: return "Gamma_y";
        case ParamId::gamma_x: return "gamma_x";
        case ParamId::gamma_y: return "gamma_y";
        case ParamId::eta: return "eta";
        case ParamId::omega_x: return "omega_x";
        case ParamId::omega_y: return "omega_y";
    }
    return "unknown";
}

std::optional<ParamId> param_from_name(const std::string& name) {
    static const std::pair<const char*, ParamId> table[] = {
        {"g_max", ParamId::g_max},     {"theta", ParamId::theta},
        {"delta", ParamId::delta},     {"kappa", ParamId::kappa},
        {"Gamma_x", ParamId::Gamma_x}, {"Gamma_y", ParamId::Gamma_y},
        {"gamma_x", ParamId::gamma_x}, {"gamma_y", ParamId::gamma_y},
        {"eta", ParamId::eta},         {"omega_x", ParamId::omega_x},
        {"omega_y", ParamId::omega_y},
    };
    for (const auto& [n, id] : table)
        if (name == n) return id;
    return std::nullopt;
}

double get_param(const SystemParams& p, ParamId id) {
    switch (id) {
        case ParamId::g_max: return p.g_max;
        case ParamId::theta: return p.theta;
        case ParamId::delta: return p.delta;
        case ParamId::kappa: return p.kappa;
        case ParamId::Gamma_x: return p.Gamma_x;
        case ParamId::Gamma_y: return p.Gamma_y;
        case ParamId::gamma_x: return p.gamma_x;
        case ParamId::gamma_y: return p.gamma_y;
        case ParamId::eta: return p.eta;
        case ParamId::omega_x: return p.omega_x;
        case ParamId::omega_y: return p.omega_y;
    }
    throw std::invalid_argument("get_param: unknown parameter");
}

void set_param(SystemParams& p, ParamId id, double value) {
    switch (id) {
        case ParamId::g_max: p.g_max = value; return;
        case ParamId::theta: p.theta = value; return;
        case ParamId::delta: p.delta = value; return;
        case ParamId::kappa: p.kappa = value; return;
        case ParamId::Gamma_x: p.Gamma_x = value; return;
        case ParamId::Gamma_y: p.Gamma_y = value; return;
        case ParamId::gamma_x: p.gamma_x = value; return;
        case ParamId::gamma_y: p.gamma_y = value; return;
        case ParamId::eta: p.eta = value; return;
        case ParamId::omega_x: p.omega_x = value; return;
        case ParamId::omega_y: p.omega_y = value; return;
    }
    throw std::invalid_argument("set_param: unknown parameter");
}

double fd_floor(ParamId id) {
    switch (id) {
        case ParamId::theta: return 1e-6;          // rad
        case ParamId::eta: return 1e-6;
        default: return hz_to_rad(1e-3);           // rate-like, rad/s
    }
}

// ------------------------------------------------------------------
// generic damped least squares

namespace {

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& r0,
                            const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                            const std::vector<double>& floors) {
    const auto n = x.size();
    Eigen::MatrixXd jac(r0.size(), n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double fl = floors.empty() ? 1e-9 : floors[static_cast<std::size_t>(j)];
        double h = std::max(1e-6 * std::abs(x(j)), fl);
        Eigen::VectorXd xp = x;
        // step backwards if the forward step would leave the feasible box
        if (xp(j) + h > upper(j)) h = -h;
        xp(j) = std::clamp(xp(j) + h, lower(j), upper(j));
        const double h_actual = xp(j) - x(j);
        if (h_actual == 0.0) {
            jac.col(j).setZero();
            continue;
        }
        jac.col(j) = (fn(xp) - r0) / h_actual;
    }
    return jac;
}

} // namespace

LsqResult least_squares(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residual_fn,
                        const Eigen::VectorXd& x0,
                        const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper,
                        const LsqOptions& opts) {
    const auto n = x0.size();
    LsqResult res;
    res.x = x0.cwiseMax(lower).cwiseMin(upper);
    res.at_bound.assign(static_cast<std::size_t>(n), false);

    Eigen::VectorXd r = residual_fn(res.x);
    res.chi2 = r.squaredNorm();
    if (n == 0) {  // identity fit
        res.converged = true;
        res.covariance.resize(0, 0);
        return res;
    }

    double lambda = opts.lambda0;
    Eigen::MatrixXd jac;
    bool jac_fresh = false;

    for (res.iterations = 0; res.iterations < opts.max_iterations; ++res.iterations) {
        if (!jac_fresh) {
            jac = fd_jacobian(residual_fn, res.x, r, lower, upper, opts.fd_floors);
            jac_fresh = true;
        }
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;

        bool accepted = false;
        while (lambda <= opts.lambda_max) {
            Eigen::MatrixXd damped = jtj;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double dii = jtj(i, i);
                damped(i, i) += lambda * (dii > 0.0 ? dii : 1.0);
            }
            const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
            if (!step.allFinite()) {
                lambda *= opts.lambda_growth;
                continue;
            }
            const Eigen::VectorXd x_trial =
                (res.x + step).cwiseMax(lower).cwiseMin(upper);
            const Eigen::VectorXd r_trial = residual_fn(x_trial);
            const double chi2_trial = r_trial.squaredNorm();
            if (chi2_trial <= res.chi2) {
                // relative step size before damping update
                double max_rel = 0.0;
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double scale = std::max(std::abs(res.x(i)), 1e-30);
                    max_rel = std::max(max_rel, std::abs(x_trial(i) - res.x(i)) / scale);
                }
                const double gain = res.chi2 - chi2_trial;
                res.x = x_trial;
                r = r_trial;
                res.chi2 = chi2_trial;
                jac_fresh = false;
                lambda = std::max(lambda / opts.lambda_growth, 1e-12);
                accepted = true;
                if (max_rel < opts.tolerance || gain == 0.0) res.converged = true;
                break;
            }
            lambda *= opts.lambda_growth;
        }
        if (!accepted) {
            res.aborted_singular = lambda > opts.lambda_max;
            break;
        }
        if (res.converged) break;
    }

    for (Eigen::Index i = 0; i < n; ++i)
        res.at_bound[static_cast<std::size_t>(i)] =
            (res.x(i) <= lower(i)) || (res.x(i) >= upper(i));

    // covariance from the final Jacobian, scaled by reduced chi2
    jac = fd_jacobian(residual_fn, res.x, r, lower, upper, opts.fd_floors);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const auto dof = static_cast<double>(std::max<Eigen::Index>(r.size() - n, 1));
    res.covariance = jtj.completeOrthogonalDecomposition().pseudoInverse() *
                     (res.chi2 / dof);
    return res;
}

// ------------------------------------------------------------------
// heterodyne fit layer

namespace {

void check_branch_data(const std::vector<Spectrum>& data) {
    if (data.empty() || data.size() > 2)
        throw std::invalid_argument("fit: need one or two heterodyne branches");
    for (const auto& s : data) {
        if (s.kind != SpectrumKind::heterodyne || s.branch == Branch::none)
            throw std::invalid_argument("fit: data must be heterodyne branches");
        if (!s.grid.all_positive())
            throw std::invalid_argument("fit: heterodyne grids must be positive offsets");
    }
}

Eigen::VectorXd branch_residuals(const std::vector<Spectrum>& data, const SystemParams& p) {
    std::size_t total = 0;
    for (const auto& s : data) total += s.size();
    Eigen::VectorXd r(static_cast<Eigen::Index>(total));
    Eigen::Index k = 0;
    for (const auto& s : data) {
        for (std::size_t i = 0; i < s.size(); ++i, ++k) {
            if (!s.point_valid(i)) {
                r(k) = 0.0;  // flagged points carry zero weight
                continue;
            }
            const double model = heterodyne_psd_at(p, s.grid.points[i], s.branch);
            const double w = 1.0 / std::max(s.values[i], 1.0);
            r(k) = w * (s.values[i] - model);
        }
    }
    return r;
}

std::pair<double, double> bound_for(const FitConfig& cfg, ParamId id) {
    if (auto it = cfg.bounds.find(id); it != cfg.bounds.end()) return it->second;
    // physical defaults
    switch (id) {
        case ParamId::theta: return {0.0, std::numbers::pi / 2.0};
        case ParamId::eta: return {1e-6, 1.0};
        case ParamId::delta: return {-1e9, 1e9};
        case ParamId::gamma_x:
        case ParamId::gamma_y: return {gamma_floor, 1e9};
        default: return {0.0, 1e9};
    }
}

} // namespace

ResidualReport residuals(const std::vector<Spectrum>& data, const SystemParams& p) {
    check_branch_data(data);
    ResidualReport rep;
    rep.residuals = branch_residuals(data, p);
    rep.chi2 = rep.residuals.squaredNorm();
    return rep;
}

FitResult fit_heterodyne(const std::vector<Spectrum>& data, const FitConfig& cfg) {
    std::vector<FitPanel> panels{FitPanel{cfg.initial, data}};
    FitConfig single = cfg;
    single.shared.clear();  // single panel: shared/per-panel distinction is moot
    FitResult res = fit_heterodyne_joint(panels, single);
    res.estimates = res.panel_estimates.front();
    return res;
}

FitResult fit_heterodyne_joint(const std::vector<FitPanel>& panels, const FitConfig& cfg) {
    if (panels.empty()) throw std::invalid_argument("fit: no panels");
    for (const auto& panel : panels) check_branch_data(panel.data);
    for (ParamId id : cfg.shared)
        if (std::find(cfg.free.begin(), cfg.free.end(), id) == cfg.free.end())
            throw std::invalid_argument("fit: shared parameter not in free set: " +
                                        param_name(id));

    // slot layout: shared free parameters first, then per-panel blocks
    struct Slot {
        ParamId id;
        int panel;  // -1 = shared
    };
    std::vector<Slot> slots;
    for (ParamId id : cfg.free)
        if (std::find(cfg.shared.begin(), cfg.shared.end(), id) != cfg.shared.end())
            slots.push_back({id, -1});
    for (int k = 0; k < static_cast<int>(panels.size()); ++k)
        for (ParamId id : cfg.free)
            if (std::find(cfg.shared.begin(), cfg.shared.end(), id) == cfg.shared.end())
                slots.push_back({id, k});

    const auto n = static_cast<Eigen::Index>(slots.size());
    Eigen::VectorXd x0(n), lo(n), hi(n);
    LsqOptions opts;
    opts.max_iterations = cfg.max_iterations;
    opts.tolerance = cfg.tolerance;
    opts.fd_floors.resize(slots.size());
    for (Eigen::Index i = 0; i < n; ++i) {
        const Slot& s = slots[static_cast<std::size_t>(i)];
        const SystemParams& init = (s.panel < 0) ? cfg.initial
                                                 : panels[static_cast<std::size_t>(s.panel)].initial;
        x0(i) = get_param(init, s.id);
        std::tie(lo(i), hi(i)) = bound_for(cfg, s.id);
        opts.fd_floors[static_cast<std::size_t>(i)] = fd_floor(s.id);
        if (x0(i) < lo(i) || x0(i) > hi(i))
            throw std::invalid_argument("fit: initial value outside bounds for " +
                                        param_name(s.id));
    }

    auto apply = [&](const Eigen::VectorXd& x, int panel) {
        SystemParams p = panels[static_cast<std::size_t>(panel)].initial;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Slot& s = slots[static_cast<std::size_t>(i)];
            if (s.panel < 0 || s.panel == panel) set_param(p, s.id, x(i));
        }
        return p;
    };

    auto residual_fn = [&](const Eigen::VectorXd& x) {
        std::vector<Eigen::VectorXd> parts;
        Eigen::Index total = 0;
        parts.reserve(panels.size());
        for (int k = 0; k < static_cast<int>(panels.size()); ++k) {
            parts.push_back(branch_residuals(panels[static_cast<std::size_t>(k)].data,
                                             apply(x, k)));
            total += parts.back().size();
        }
        Eigen::VectorXd r(total);
        Eigen::Index at = 0;
        for (const auto& part : parts) {
            r.segment(at, part.size()) = part;
            at += part.size();
        }
        return r;
    };

    const LsqResult lsq = least_squares(residual_fn, x0, lo, hi, opts);

    FitResult out;
    out.chi2 = lsq.chi2;
    out.iterations = lsq.iterations;
    out.converged = lsq.converged;
    out.aborted_singular = lsq.aborted_singular;
    out.covariance = lsq.covariance;
    for (int k = 0; k < static_cast<int>(panels.size()); ++k)
        out.panel_estimates.push_back(apply(lsq.x, k));
    out.estimates = out.panel_estimates.front();
    for (Eigen::Index i = 0; i < n; ++i) {
        const Slot& s = slots[static_cast<std::size_t>(i)];
        std::string label = param_name(s.id);
        if (s.panel >= 0 && panels.size() > 1) label += "[" + std::to_string(s.panel) + "]";
        if (lsq.covariance.rows() == n)
            out.std_errors[label] = std::sqrt(std::max(0.0, lsq.covariance(i, i)));
        if (lsq.at_bound[static_cast<std::size_t>(i)]) out.bound_hits.push_back(label);
    }
    return out;
}

} // namespace optospec
