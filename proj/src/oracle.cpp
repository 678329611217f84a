#include "optospec/oracle.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include <fftw3.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "optospec/parallel.hpp"
#include "optospec/susceptibility.hpp"

namespace optospec {

using Matrix6c = Eigen::Matrix<std::complex<double>, 6, 6>;
using Vector6c = Eigen::Matrix<std::complex<double>, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

Eigen::Matrix<double, 6, 6> NoiseModel::spectral_matrix() const {
    Matrix6d n = Matrix6d::Zero();
    // optical input: <a a+> density 1, <a+ a> density 0
    n(0, 1) = 1.0;
    // mechanical baths (classical): both orderings density 1
    n(2, 3) = n(3, 2) = 1.0;
    n(4, 5) = n(5, 4) = 1.0;
    if (ordering == NoiseOrdering::symmetrized) {
        const Matrix6d sym = 0.5 * (n + n.transpose());
        return sym;
    }
    return n;
}

namespace {

// Transfer row M(w): x_b(w) = sum_j M_j(w) xi_j(w) over the input operators
// (a_in, a_in^dag, b_x, b_x^dag, b_y, b_y^dag).
Vector6c transfer_row(const SystemParams& p, const DerivedCouplings& d, double w) {
    const std::complex<double> i(0.0, 1.0);

    Matrix6c a = Matrix6c::Zero();
    a(0, 0) = 1.0 / chi_cavity(p, w);
    a(0, 2) = a(0, 3) = -i * d.g_x;
    a(0, 4) = a(0, 5) = -i * d.g_y;
    a(1, 1) = std::conj(1.0 / chi_cavity(p, -w));
    a(1, 2) = a(1, 3) = i * d.g_x;
    a(1, 4) = a(1, 5) = i * d.g_y;
    a(2, 2) = 1.0 / chi_mech(p, Axis::x, w);
    a(2, 0) = a(2, 1) = -i * d.g_x;
    a(3, 3) = std::conj(1.0 / chi_mech(p, Axis::x, -w));
    a(3, 0) = a(3, 1) = i * d.g_x;
    a(4, 4) = 1.0 / chi_mech(p, Axis::y, w);
    a(4, 0) = a(4, 1) = -i * d.g_y;
    a(5, 5) = std::conj(1.0 / chi_mech(p, Axis::y, -w));
    a(5, 0) = a(5, 1) = i * d.g_y;

    // bright-mode projection g_x/g_b, g_y/g_b via the closed-form ratios,
    // finite for g_max = 0
    Vector6c c = Vector6c::Zero();
    c(2) = c(3) = std::sin(p.theta) * std::sqrt(d.omega_b / p.omega_x);
    c(4) = c(5) = std::cos(p.theta) * std::sqrt(d.omega_b / p.omega_y);

    Eigen::FullPivLU<Matrix6c> lu(a.transpose());
    if (!lu.isInvertible())
        throw std::runtime_error("frequency_domain_psd: singular system at omega/2pi = " +
                                 std::to_string(rad_to_hz(w)) + " Hz");
    Vector6c z = lu.solve(c);

    Vector6c b;
    const double sk = std::sqrt(p.kappa);
    const double sgx = std::sqrt(p.Gamma_x);
    const double sgy = std::sqrt(p.Gamma_y);
    b << sk, sk, sgx, sgx, sgy, sgy;
    return z.cwiseProduct(b);
}

} // namespace

double frequency_domain_psd_at(const SystemParams& p, double omega, const NoiseModel& noise) {
    const DerivedCouplings d = derive_couplings(p);
    const Vector6c m_pos = transfer_row(p, d, omega);
    const Vector6c m_neg = transfer_row(p, d, -omega);
    const Matrix6d n = noise.spectral_matrix();
    const std::complex<double> s = m_neg.transpose() * n.cast<std::complex<double>>() * m_pos;
    return s.real();
}

Spectrum frequency_domain_psd(const SystemParams& p, const FrequencyGrid& grid,
                              const NoiseModel& noise) {
    Spectrum s;
    s.grid = grid;
    s.kind = SpectrumKind::bright_mode_psd;
    s.values.resize(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        s.values[i] = frequency_domain_psd_at(p, grid.points[i], noise);
    });
    return s;
}

// ------------------------------------------------------------------
// time-domain simulation

namespace {

// Symmetrized diffusion of the quadrature noise: optical quadratures carry
// vacuum density kappa, mechanical ones 2 Gamma_j (both bath orderings
// contribute).
Matrix6d diffusion_matrix(const SystemParams& p) {
    Vector6d diag;
    diag << p.kappa, p.kappa, 2.0 * p.Gamma_x, 2.0 * p.Gamma_x, 2.0 * p.Gamma_y,
        2.0 * p.Gamma_y;
    return diag.asDiagonal();
}

// SplitMix64; documented seed-derivation step ahead of the mt19937_64 stream.
std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Gaussian stream with an explicitly documented algorithm (mt19937_64
// uniforms + Box-Muller), independent of the standard library's
// distribution implementations.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) {
        std::uint64_t s = seed;
        engine_.seed(splitmix64(s));
    }

    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = two_pi * u2;
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

private:
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace

void validate_sim_config(const SimConfig& cfg, const SystemParams& p) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("SimConfig.dt: must be > 0");
    const double fastest = std::max({p.omega_x, p.omega_y, std::abs(p.delta), p.kappa});
    if (!(cfg.dt < 0.05 / fastest))
        throw std::invalid_argument("SimConfig.dt: must resolve the fastest rate (dt < 0.05/max)");
    if (!(cfg.duration > 0.0)) throw std::invalid_argument("SimConfig.duration: must be > 0");
    if (cfg.segment_length < 2)
        throw std::invalid_argument("SimConfig.segment_length: must be >= 2 samples");
    if (!(cfg.overlap >= 0.0 && cfg.overlap < 1.0))
        throw std::invalid_argument("SimConfig.overlap: must lie in [0, 1)");
    const double seg_time = static_cast<double>(cfg.segment_length) * cfg.dt;
    const double hop = seg_time * (1.0 - cfg.overlap);
    const double n_segments = 1.0 + (cfg.duration - seg_time) / hop;
    if (!(n_segments >= 10.0))
        throw std::invalid_argument("SimConfig.duration: must cover at least 10 segments");
}

Eigen::Matrix<double, 6, 6> stationary_covariance(const SystemParams& p) {
    const DriftMatrix dm = build_drift(p);
    if (!is_stable(dm))
        throw std::runtime_error("stationary_covariance: drift matrix is unstable");
    const Matrix6d a = dm.entries;
    const Matrix6d d = diffusion_matrix(p);

    // vectorized Lyapunov solve: (I (x) A + A (x) I) vec(P) = -vec(D)
    Eigen::Matrix<double, 36, 36> k = Eigen::Matrix<double, 36, 36>::Zero();
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            for (int l = 0; l < 6; ++l) {
                k(i + 6 * j, i + 6 * l) += a(j, l);  // P A^T term
                k(i + 6 * j, l + 6 * j) += a(i, l);  // A P term
            }
    Eigen::Matrix<double, 36, 1> rhs;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) rhs(i + 6 * j) = -d(i, j);
    const Eigen::Matrix<double, 36, 1> vec_p = k.fullPivLu().solve(rhs);
    Matrix6d cov;
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) cov(i, j) = vec_p(i + 6 * j);
    return 0.5 * (cov + cov.transpose());
}

namespace {

// Exact one-step discretization of dx = A x dt + dW, cov(dW) = D dt, via
// the block-exponential construction: for C = [[-A, D], [0, A^T]] dt,
// exp(C) = [[., Phi^-1 Qd], [0, Phi^T]].
struct ExactStepper {
    Matrix6d phi;
    Matrix6d noise_l;  // lower factor of the discrete noise covariance

    ExactStepper(const Matrix6d& a, const Matrix6d& diffusion, double dt, bool with_noise) {
        Eigen::Matrix<double, 12, 12> block = Eigen::Matrix<double, 12, 12>::Zero();
        block.topLeftCorner<6, 6>() = -a * dt;
        block.topRightCorner<6, 6>() = diffusion * dt;
        block.bottomRightCorner<6, 6>() = a.transpose() * dt;
        const Eigen::Matrix<double, 12, 12> eblock = block.exp();
        phi = eblock.bottomRightCorner<6, 6>().transpose();
        Matrix6d qd = phi * eblock.topRightCorner<6, 6>();
        qd = 0.5 * (qd + qd.transpose());

        noise_l.setZero();
        if (with_noise) {
            Eigen::LLT<Matrix6d> llt(qd);
            if (llt.info() == Eigen::Success) {
                noise_l = llt.matrixL();
            } else {
                // Qd can be numerically semidefinite for tiny dt; fall back
                // to an eigenvalue square root with clipped negatives.
                Eigen::SelfAdjointEigenSolver<Matrix6d> es(qd);
                noise_l = es.eigenvectors() *
                          es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
            }
        }
    }
};

template <typename StoreState>
void run_simulation(const SystemParams& p, const SimConfig& cfg, StoreState&& store) {
    validate_sim_config(cfg, p);
    const DriftMatrix dm = build_drift(p);
    if (cfg.noise_enabled && !is_stable(dm))
        throw std::runtime_error("simulate_trajectory: drift matrix is unstable");

    const ExactStepper stepper(dm.entries, diffusion_matrix(p), cfg.dt, cfg.noise_enabled);

    Vector6d state = Vector6d::Zero();
    GaussianStream gauss(cfg.seed);
    double expected_var = 1.0;
    if (cfg.initial_state) {
        for (int i = 0; i < 6; ++i) state(i) = (*cfg.initial_state)[i];
        expected_var = std::max(expected_var, state.squaredNorm());
    }
    if (cfg.noise_enabled) {
        const Matrix6d pss = stationary_covariance(p);
        expected_var = std::max(expected_var, pss.trace());
        if (!cfg.initial_state) {
            // stationary start: no transient to discard
            Eigen::SelfAdjointEigenSolver<Matrix6d> es(pss);
            const Matrix6d sqrt_pss =
                es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
            Vector6d z;
            for (int i = 0; i < 6; ++i) z(i) = gauss();
            state = sqrt_pss * z;
        }
    }

    const auto n_steps = static_cast<std::size_t>(cfg.duration / cfg.dt);
    const double divergence_threshold = 1e6 * expected_var;
    Vector6d z;
    for (std::size_t k = 0; k < n_steps; ++k) {
        store(k, state);
        if (cfg.noise_enabled) {
            for (int i = 0; i < 6; ++i) z(i) = gauss();
            state = stepper.phi * state + stepper.noise_l * z;
        } else {
            state = stepper.phi * state;
        }
        if (!state.allFinite() || state.squaredNorm() > divergence_threshold)
            throw std::runtime_error("simulate_trajectory: divergence detected at step " +
                                     std::to_string(k));
    }
}

} // namespace

Trajectory simulate_trajectory(const SystemParams& p, const SimConfig& cfg) {
    Trajectory traj;
    traj.dt = cfg.dt;
    traj.seed = cfg.seed;
    traj.states.resize(static_cast<std::size_t>(cfg.duration / cfg.dt));
    run_simulation(p, cfg, [&](std::size_t k, const Vector6d& state) {
        for (int i = 0; i < 6; ++i) traj.states[k][i] = state(i);
    });
    return traj;
}

std::vector<double> simulate_bright_series(const SystemParams& p, const SimConfig& cfg) {
    const DerivedCouplings d = derive_couplings(p);
    const double rx = std::sin(p.theta) * std::sqrt(d.omega_b / p.omega_x);
    const double ry = std::cos(p.theta) * std::sqrt(d.omega_b / p.omega_y);
    std::vector<double> out(static_cast<std::size_t>(cfg.duration / cfg.dt));
    run_simulation(p, cfg, [&](std::size_t k, const Vector6d& state) {
        out[k] = rx * state(2) + ry * state(4);
    });
    return out;
}

std::vector<double> bright_mode_series(const Trajectory& traj, const SystemParams& p) {
    const DerivedCouplings d = derive_couplings(p);
    // geometric projection g_x/g_b, g_y/g_b; defined for any g_max >= 0
    const double rx = std::sin(p.theta) * std::sqrt(d.omega_b / p.omega_x);
    const double ry = std::cos(p.theta) * std::sqrt(d.omega_b / p.omega_y);
    std::vector<double> out(traj.states.size());
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = rx * traj.states[k][2] + ry * traj.states[k][4];
    return out;
}

// ------------------------------------------------------------------
// Welch estimator

Spectrum welch_psd(const std::vector<double>& series, const SimConfig& cfg) {
    const std::size_t n = cfg.segment_length;
    if (n < 2) throw std::invalid_argument("welch_psd: segment_length must be >= 2");
    const auto hop = static_cast<std::size_t>(
        std::max(1.0, std::round(static_cast<double>(n) * (1.0 - cfg.overlap))));
    if (series.size() < n + hop)
        throw std::invalid_argument("welch_psd: series shorter than 2 segments");

    std::vector<double> window(n);
    double wsum2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(two_pi * static_cast<double>(i) /
                                          static_cast<double>(n)));
        wsum2 += window[i] * window[i];
    }

    std::vector<double> in(n);
    std::vector<std::complex<double>> out(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()),
                                          FFTW_ESTIMATE);

    std::vector<double> acc(n / 2 + 1, 0.0);
    std::size_t n_segments = 0;
    for (std::size_t start = 0; start + n <= series.size(); start += hop) {
        for (std::size_t i = 0; i < n; ++i) in[i] = series[start + i] * window[i];
        fftw_execute(plan);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += std::norm(out[k]);
        ++n_segments;
    }
    fftw_destroy_plan(plan);

    // two-sided density in ordinary frequency: integral over f equals the
    // series variance.  S(w = 2 pi f) in the angular convention has the
    // same numeric value.
    const double scale = cfg.dt / (wsum2 * static_cast<double>(n_segments));

    Spectrum s;
    s.kind = SpectrumKind::bright_mode_psd;
    const auto half = static_cast<std::ptrdiff_t>(n / 2);
    std::vector<double> freqs;
    freqs.reserve(n);
    s.values.reserve(n);
    const double df = 1.0 / (static_cast<double>(n) * cfg.dt);
    for (std::ptrdiff_t k = -half; k < half; ++k) {
        freqs.push_back(two_pi * static_cast<double>(k) * df);
        const auto idx = static_cast<std::size_t>(k < 0 ? -k : k);
        s.values.push_back(acc[idx] * scale);
    }
    s.grid = FrequencyGrid(std::move(freqs));
    return s;
}

} // namespace optospec
