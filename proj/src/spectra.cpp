#include "optospec/spectra.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>

#include "optospec/parallel.hpp"

namespace optospec {

std::string to_string(SpectrumKind k) {
    switch (k) {
        case SpectrumKind::bright_mode_psd: return "bright_mode_psd";
        case SpectrumKind::heterodyne: return "heterodyne";
        case SpectrumKind::asymmetry: return "asymmetry";
        case SpectrumKind::interference: return "interference";
        case SpectrumKind::backaction: return "backaction";
    }
    return "unknown";
}

std::string to_string(Branch b) {
    switch (b) {
        case Branch::none: return "none";
        case Branch::upper: return "upper";
        case Branch::lower: return "lower";
    }
    return "unknown";
}

namespace {

double abs2(complexd z) { return std::norm(z); }

// Pieces of the stationary spectrum at one frequency, already divided by
// g_b^2.  The division uses the closed-form ratios g_x/g_b and g_y/g_b so
// the g_max -> 0 limit (bare thermal Lorentzians) stays finite.
struct Eq6Terms {
    double thermal;     // [gx^2 Gx (|chi_x(w)|^2+|chi_x(-w)|^2) + (y)] / g_b^2
    double vacuum;      // |gx^2 chi_x^- + gy^2 chi_y^-|^2 kappa |chi_c(-w)|^2 / g_b^2
    double denominator; // |1 + chi_c^- (gx^2 chi_x^- + gy^2 chi_y^-)|^2
};

Eq6Terms eq6_terms(const SystemParams& p, const DerivedCouplings& d, double omega) {
    const complexd cxm = chi_mech_minus(p, Axis::x, omega);
    const complexd cym = chi_mech_minus(p, Axis::y, omega);
    const complexd ccm = chi_cavity_minus(p, omega);
    const double gx2 = d.g_x * d.g_x;
    const double gy2 = d.g_y * d.g_y;
    const complexd weighted = gx2 * cxm + gy2 * cym;

    // g_x/g_b = sin(theta) sqrt(omega_b/omega_x), g_y/g_b = cos(theta)
    // sqrt(omega_b/omega_y); both finite for any g_max >= 0
    const double rx = std::sin(p.theta) * std::sqrt(d.omega_b / p.omega_x);
    const double ry = std::cos(p.theta) * std::sqrt(d.omega_b / p.omega_y);
    const complexd weighted_over_gb = rx * d.g_x * cxm + ry * d.g_y * cym;

    Eq6Terms t;
    t.denominator = abs2(1.0 + ccm * weighted);
    t.thermal = rx * rx * p.Gamma_x * (abs2(chi_mech(p, Axis::x, omega)) +
                                       abs2(chi_mech(p, Axis::x, -omega))) +
                ry * ry * p.Gamma_y * (abs2(chi_mech(p, Axis::y, omega)) +
                                       abs2(chi_mech(p, Axis::y, -omega)));
    t.vacuum = abs2(weighted_over_gb) * p.kappa * abs2(chi_cavity(p, -omega));
    return t;
}

void check_finite_value(double v, double omega, const char* what) {
    if (!std::isfinite(v))
        throw std::runtime_error(std::string(what) + ": non-finite value at omega/2pi = " +
                                 std::to_string(rad_to_hz(omega)) + " Hz");
}

Spectrum map_grid(const FrequencyGrid& grid, SpectrumKind kind, Branch branch,
                  const std::function<double(double)>& f) {
    Spectrum s;
    s.grid = grid;
    s.kind = kind;
    s.branch = branch;
    s.values.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) { s.values[i] = f(grid.points[i]); });
    if (kind != SpectrumKind::asymmetry) {
        const std::string label = to_string(kind);
        for (std::size_t i = 0; i < s.values.size(); ++i)
            check_finite_value(s.values[i], grid.points[i], label.c_str());
    }
    return s;
}

} // namespace

double bright_mode_psd_at(const SystemParams& p, double omega) {
    const DerivedCouplings d = derive_couplings(p);
    const Eq6Terms t = eq6_terms(p, d, omega);
    return (t.thermal + t.vacuum) / t.denominator;
}

PsdParts bright_mode_psd_parts_at(const SystemParams& p, double omega) {
    const DerivedCouplings d = derive_couplings(p);
    const Eq6Terms t = eq6_terms(p, d, omega);
    return PsdParts{t.thermal / t.denominator, t.vacuum / t.denominator};
}

Spectrum bright_mode_psd(const SystemParams& p, const FrequencyGrid& grid) {
    return map_grid(grid, SpectrumKind::bright_mode_psd, Branch::none,
                    [&](double w) { return bright_mode_psd_at(p, w); });
}

double one_d_psd_at(const SystemParams& p, double omega) {
    SystemParams q = p;
    q.theta = std::numbers::pi / 2.0;  // g_y = 0, g_b = g_x = g_max
    return bright_mode_psd_at(q, omega);
}

Spectrum one_d_psd(const SystemParams& p, const FrequencyGrid& grid) {
    return map_grid(grid, SpectrumKind::bright_mode_psd, Branch::none,
                    [&](double w) { return one_d_psd_at(p, w); });
}

complexd chi_mech_effective(const SystemParams& p, double omega) {
    SystemParams q = p;
    q.theta = std::numbers::pi / 2.0;
    const complexd cxm = chi_mech_minus(q, Axis::x, omega);
    const complexd ccm = chi_cavity_minus(q, omega);
    const double g = q.g_max;  // = g_x at theta = pi/2
    return cxm / (1.0 + g * g * cxm * ccm);
}

double force_psd_1d_at(const SystemParams& p, double omega) {
    SystemParams q = p;
    q.theta = std::numbers::pi / 2.0;
    const double g = q.g_max;
    const complexd cxm = chi_mech_minus(q, Axis::x, omega);
    const double pair = std::norm(chi_mech(q, Axis::x, omega)) +
                        std::norm(chi_mech(q, Axis::x, -omega));
    const double thermal = q.Gamma_x * pair / std::norm(cxm);
    const double vacuum = q.kappa * g * g * std::norm(chi_cavity(q, -omega));
    return thermal + vacuum;
}

Spectrum asymmetry_model(const SystemParams& p, const FrequencyGrid& grid) {
    if (!grid.all_positive())
        throw std::invalid_argument("asymmetry_model: grid must be strictly positive");
    Spectrum s = map_grid(grid, SpectrumKind::asymmetry, Branch::none, [&](double w) {
        const double denom = bright_mode_psd_at(p, w);
        if (denom <= 0.0 || !std::isfinite(denom)) return std::nan("");
        return bright_mode_psd_at(p, -w) / denom;
    });
    // underflowing denominators are flagged, not dropped
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        if (std::isnan(s.values[i])) {
            if (s.valid.empty()) s.valid.assign(s.size(), 1);
            s.valid[i] = 0;
            s.values[i] = 0.0;
        }
    }
    return s;
}

double heterodyne_psd_at(const SystemParams& p, double omega, Branch branch) {
    if (branch == Branch::none)
        throw std::invalid_argument("heterodyne_psd: branch must be upper or lower");
    const double w = (branch == Branch::upper) ? omega : -omega;
    const DerivedCouplings d = derive_couplings(p);
    // g_b^2 S_xbxb stays finite for g_max -> 0 (the g_b^2 factors cancel)
    const Eq6Terms t = eq6_terms(p, d, w);
    const double gb2_psd = d.g_b * d.g_b * (t.thermal + t.vacuum) / t.denominator;
    return 1.0 + p.eta * p.kappa * std::norm(chi_cavity(p, w)) * gb2_psd;
}

Spectrum heterodyne_psd(const SystemParams& p, const FrequencyGrid& grid, Branch branch) {
    if (!grid.all_positive())
        throw std::invalid_argument("heterodyne_psd: grid must be strictly positive");
    return map_grid(grid, SpectrumKind::heterodyne, branch,
                    [&](double w) { return heterodyne_psd_at(p, w, branch); });
}

Spectrum asymmetry_from_data(const Spectrum& stokes, const Spectrum& antistokes,
                             const SystemParams& p, double noise_floor) {
    stokes.require_same_grid(antistokes);
    if (!stokes.grid.all_positive())
        throw std::invalid_argument("asymmetry_from_data: grid must be strictly positive");
    if (stokes.branch != Branch::lower || antistokes.branch != Branch::upper)
        throw std::invalid_argument("asymmetry_from_data: expected lower + upper heterodyne branches");

    Spectrum out;
    out.grid = stokes.grid;
    out.kind = SpectrumKind::asymmetry;
    out.values.assign(stokes.size(), 0.0);
    out.valid.assign(stokes.size(), 1);

    const double half_kappa2 = (p.kappa / 2.0) * (p.kappa / 2.0);
    for (std::size_t i = 0; i < stokes.size(); ++i) {
        const double w = out.grid.points[i];
        const double num = stokes.values[i] - 1.0;
        const double den = antistokes.values[i] - 1.0;
        const bool ok = stokes.point_valid(i) && antistokes.point_valid(i) &&
                        den > noise_floor && num > 0.0;
        if (!ok) {
            out.valid[i] = 0;
            continue;
        }
        const double corr = ((w - p.delta) * (w - p.delta) + half_kappa2) /
                            ((w + p.delta) * (w + p.delta) + half_kappa2);
        out.values[i] = (num / den) * corr;
    }
    return out;
}

double interference_term_at(const SystemParams& p, double omega) {
    const DerivedCouplings d = derive_couplings(p);
    const complexd weighted = d.g_x * d.g_x * chi_mech_minus(p, Axis::x, omega) +
                              d.g_y * d.g_y * chi_mech_minus(p, Axis::y, omega);
    return std::norm(weighted);
}

Spectrum interference_term(const SystemParams& p, const FrequencyGrid& grid) {
    return map_grid(grid, SpectrumKind::interference, Branch::none,
                    [&](double w) { return interference_term_at(p, w); });
}

Spectrum backaction_spectrum(const Spectrum& stokes_corrected,
                             const Spectrum& antistokes_corrected) {
    stokes_corrected.require_same_grid(antistokes_corrected);
    Spectrum out;
    out.grid = stokes_corrected.grid;
    out.kind = SpectrumKind::backaction;
    out.values.resize(stokes_corrected.size());
    for (std::size_t i = 0; i < out.values.size(); ++i)
        out.values[i] = stokes_corrected.values[i] - antistokes_corrected.values[i];
    if (!stokes_corrected.valid.empty() || !antistokes_corrected.valid.empty()) {
        out.valid.assign(out.size(), 1);
        for (std::size_t i = 0; i < out.size(); ++i)
            out.valid[i] = stokes_corrected.point_valid(i) &&
                           antistokes_corrected.point_valid(i);
    }
    return out;
}

Spectrum heterodyne_to_displacement(const Spectrum& het, const SystemParams& p) {
    if (het.kind != SpectrumKind::heterodyne || het.branch == Branch::none)
        throw std::invalid_argument("heterodyne_to_displacement: need a heterodyne branch");
    const DerivedCouplings d = derive_couplings(p);
    if (d.g_b <= 0.0)
        throw std::invalid_argument("heterodyne_to_displacement: g_b must be > 0");
    Spectrum out;
    out.grid = het.grid;
    out.kind = SpectrumKind::bright_mode_psd;
    out.branch = het.branch;
    out.valid = het.valid;
    out.values.resize(het.size());
    for (std::size_t i = 0; i < het.size(); ++i) {
        const double w = (het.branch == Branch::upper) ? het.grid.points[i]
                                                       : -het.grid.points[i];
        const double filt = p.eta * d.g_b * d.g_b * p.kappa * std::norm(chi_cavity(p, w));
        out.values[i] = (het.values[i] - 1.0) / filt;
    }
    return out;
}

namespace {

// Vertex of the parabola through three samples; falls back to the middle
// point if the samples are collinear.
double parabola_vertex(double x1, double y1, double x2, double y2, double x3, double y3) {
    const double d = (x2 - x1) * (y2 - y3) - (x2 - x3) * (y2 - y1);
    if (d == 0.0) return x2;
    const double num = (x2 - x1) * (x2 - x1) * (y2 - y3) - (x2 - x3) * (x2 - x3) * (y2 - y1);
    return x2 - 0.5 * num / d;
}

Extremum find_extremum(const Spectrum& s, double w_lo, double w_hi, bool minimum) {
    std::size_t best = s.size();
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double w = s.grid.points[i];
        if (w < w_lo || w > w_hi || !s.point_valid(i)) continue;
        if (best == s.size() ||
            (minimum ? s.values[i] < s.values[best] : s.values[i] > s.values[best]))
            best = i;
    }
    if (best == s.size())
        throw std::invalid_argument("find_extremum: no valid samples in window");

    Extremum e{s.grid.points[best], s.values[best], best};
    if (best > 0 && best + 1 < s.size() && s.point_valid(best - 1) && s.point_valid(best + 1)) {
        e.omega = parabola_vertex(s.grid.points[best - 1], s.values[best - 1],
                                  s.grid.points[best], s.values[best],
                                  s.grid.points[best + 1], s.values[best + 1]);
    }
    return e;
}

} // namespace

Extremum find_minimum(const Spectrum& s, double w_lo, double w_hi) {
    return find_extremum(s, w_lo, w_hi, true);
}

Extremum find_maximum(const Spectrum& s, double w_lo, double w_hi) {
    return find_extremum(s, w_lo, w_hi, false);
}

std::vector<std::size_t> local_maxima(const Spectrum& s) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i)
        if (s.values[i] > s.values[i - 1] && s.values[i] > s.values[i + 1])
            out.push_back(i);
    return out;
}

} // namespace optospec
