#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "fracdiff/core.hpp"
#include "fracdiff/forward_solver.hpp"
#include "fracdiff/gamma.hpp"
#include "fracdiff/l1_oracle.hpp"
#include "fracdiff/mittag_leffler.hpp"
#include "fracdiff/product_integration.hpp"
#include "fracdiff/spectral_domain.hpp"

namespace fracdiff {

/// Setup shared by data generation and inversion.
struct InverseSetup {
    Domain1D grid;
    SymTridiagonal matrix;
    TimeGrid times;
    FractionalOrder alpha;
    Field g;
    std::size_t x0;
};

/// Observation u(x0, .) of the source problem with u(0) = 0, computed by the
/// L1 scheme (a discretization independent of the spectral inversion), plus
/// centred Gaussian noise of standard deviation noise_level * max|u(x0, .)|.
inline TimeSeries generate_data(const InverseSetup& setup, const RhoProfile& rho_true, double noise_level,
                                std::uint64_t seed) {
    detail::require(noise_level >= 0.0, "noise level must be nonnegative");
    detail::require(rho_true.grid() == setup.times, "rho is sampled on a different time grid");
    detail::require(setup.x0 < setup.grid.size(), "observation index outside the grid");
    const Field zero(setup.grid.size(), 0.0);
    const SourceSpec src{rho_true, setup.g};
    const auto sol = l1_solve(setup.matrix, setup.grid, zero, src, setup.alpha);
    TimeSeries data = sol.trace(setup.x0);
    if (noise_level > 0.0) {
        const double sigma = noise_level * max_abs(data.values);
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (std::size_t j = 1; j < data.size(); ++j) data[j] += sigma * normal(rng);
    }
    return data;
}

/// Cell integrals K_l = int_{l dt}^{(l+1) dt} v_g(x0, r) dr, l = 0..M-1, of the
/// homogeneous solution started from g. These form the convolution kernel of
/// u(x0, t_j) = sum_k mu_k K_{j-k}.
inline TimeSeries kernel_from_modes(const EigenSystem& es, std::span<const double> g, FractionalOrder alpha,
                                    std::size_t x0, const TimeGrid& times) {
    detail::require(x0 < es.grid().size(), "observation index outside the grid");
    const auto c = project(g, es);
    const std::size_t m = times.steps();
    std::vector<double> big_f(m + 1, 0.0);  // int_0^{t_l} v_g(x0, r) dr
    for (std::size_t n = 0; n < c.size(); ++n) {
        const double w = c[n] * es.phi(n, x0);
        if (w == 0.0) continue;
        for (std::size_t l = 1; l <= m; ++l) {
            const double r = times[l];
            big_f[l] += w * r * ml::ml_eval(alpha, 2.0, -es.eigenvalue(n) * std::pow(r, alpha.value()));
        }
    }
    std::vector<double> k(m);
    for (std::size_t l = 0; l < m; ++l) k[l] = big_f[l + 1] - big_f[l];
    return TimeSeries::on_cells(times, std::move(k));
}

/// Trapezoid cell integrals from node samples of v_g(x0, .).
inline TimeSeries kernel_from_trace(const TimeSeries& vg) {
    detail::require(vg.location == TimeSeries::Location::nodes, "v_g trace must be sampled on time nodes");
    const double dt = vg.grid.dt();
    std::vector<double> k(vg.grid.steps());
    for (std::size_t l = 0; l < k.size(); ++l) k[l] = 0.5 * dt * (vg[l] + vg[l + 1]);
    return TimeSeries::on_cells(vg.grid, std::move(k));
}

/// How the Tikhonov weight is chosen.
struct Regularization {
    enum class Mode { none, fixed, discrepancy };
    Mode mode = Mode::none;
    double value = 0.0;        ///< weight for Mode::fixed
    double noise_level = 0.0;  ///< relative noise level for Mode::discrepancy
    double safety = 1.1;       ///< discrepancy factor

    static Regularization none() { return {}; }
    static Regularization fixed(double reg) { return {Mode::fixed, reg, 0.0, 1.1}; }
    static Regularization discrepancy(double noise, double factor = 1.1) {
        return {Mode::discrepancy, 0.0, noise, factor};
    }
};

struct MuRecovery {
    TimeSeries mu;
    double regularization = 0.0;
    double residual = 0.0;     ///< RMS of K mu - data over t_1..t_M
    double noise_floor = 0.0;  ///< noise_level * max|data|
};

inline constexpr double kVanishingKernel = 1e-12;  ///< relative size under which v_g counts as zero
inline constexpr double kLeadingWeightCap = 1e-10; ///< smallest admissible K_0 / max|K| without regularization

namespace detail {

inline std::vector<double> convolve_cells(std::span<const double> kernel, std::span<const double> mu) {
    const std::size_t m = mu.size();
    std::vector<double> out(m);
    for (std::size_t j = 0; j < m; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k <= j; ++k) s += kernel[j - k] * mu[k];
        out[j] = s;
    }
    return out;
}

inline double rms_misfit(std::span<const double> kernel, std::span<const double> mu, std::span<const double> d) {
    const auto fit = convolve_cells(kernel, mu);
    double s = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) s += (fit[j] - d[j]) * (fit[j] - d[j]);
    return std::sqrt(s / static_cast<double>(d.size()));
}

// Normal matrix K^T K of the lower-triangular Toeplitz K, built in O(M^2) from
// N(a, b) = N(a + 1, b + 1) + K_{M-1-a} K_{M-1-b}.
inline Eigen::MatrixXd toeplitz_normal(std::span<const double> kernel) {
    const auto m = static_cast<Eigen::Index>(kernel.size());
    Eigen::MatrixXd n(m, m);
    for (Eigen::Index a = m; a-- > 0;)
        for (Eigen::Index b = a; b < m; ++b) {
            const double tail = (a + 1 < m && b + 1 < m) ? n(a + 1, b + 1) : 0.0;
            n(a, b) = tail + kernel[static_cast<std::size_t>(m - 1 - a)] * kernel[static_cast<std::size_t>(m - 1 - b)];
            n(b, a) = n(a, b);
        }
    return n;
}

class TikhonovSystem {
public:
    TikhonovSystem(std::span<const double> kernel, std::span<const double> data)
        : normal_(toeplitz_normal(kernel)), rhs_(static_cast<Eigen::Index>(data.size())) {
        const std::size_t m = data.size();
        for (std::size_t a = 0; a < m; ++a) {
            double s = 0.0;
            for (std::size_t j = a; j < m; ++j) s += kernel[j - a] * data[j];
            rhs_(static_cast<Eigen::Index>(a)) = s;
        }
        scale_ = normal_.diagonal().mean();
    }

    /// Scale of K^T K, used to set a dimensionless regularization range.
    [[nodiscard]] double scale() const noexcept { return scale_; }

    [[nodiscard]] std::vector<double> solve(double reg) const {
        Eigen::MatrixXd sys = normal_;
        const Eigen::Index m = sys.rows();
        // D^T D for first differences (mu_{k+1} - mu_k), k = 0..M-2
        for (Eigen::Index k = 0; k + 1 < m; ++k) {
            sys(k, k) += reg;
            sys(k + 1, k + 1) += reg;
            sys(k, k + 1) -= reg;
            sys(k + 1, k) -= reg;
        }
        Eigen::LLT<Eigen::MatrixXd> llt(sys);
        if (llt.info() != Eigen::Success) throw SolverError("regularized normal equations are not positive definite");
        const Eigen::VectorXd x = llt.solve(rhs_);
        return {x.data(), x.data() + x.size()};
    }

private:
    Eigen::MatrixXd normal_;
    Eigen::VectorXd rhs_;
    double scale_ = 1.0;
};

}  // namespace detail

/// Solves u(x0, t_j) = sum_{k<=j} mu_k K_{j-k} for the cell values mu_k.
/// Unregularized: forward substitution. Otherwise Tikhonov with a
/// first-difference penalty; the discrepancy mode picks the weight whose RMS
/// residual equals safety * noise_level * max|data|.
inline MuRecovery recover_mu(const TimeSeries& data, const TimeSeries& kernel, const Regularization& reg = {},
                             double kernel_scale = 1.0) {
    detail::require(data.location == TimeSeries::Location::nodes, "data must be sampled on time nodes");
    detail::require(kernel.location == TimeSeries::Location::cells, "kernel must hold cell integrals");
    detail::require(data.grid == kernel.grid, "data and kernel live on different time grids");
    const std::size_t m = kernel.size();
    const double kmax = max_abs(kernel.values);
    if (!(kmax > kVanishingKernel * kernel_scale * data.grid.dt()))
        throw SolverError("v_g vanishes at the observation point: the source is not identifiable from this trace");
    const std::vector<double> d(data.values.begin() + 1, data.values.end());

    MuRecovery out{TimeSeries::on_cells(data.grid, std::vector<double>(m, 0.0))};
    out.noise_floor = reg.noise_level * max_abs(d);
    const bool plain = reg.mode == Regularization::Mode::none ||
                       (reg.mode == Regularization::Mode::discrepancy && reg.noise_level == 0.0) ||
                       (reg.mode == Regularization::Mode::fixed && reg.value == 0.0);
    if (plain) {
        const double k0 = kernel[0];
        if (std::abs(k0) < kLeadingWeightCap * kmax)
            throw SolverError("convolution system is ill-conditioned beyond the cap (leading weight " +
                              std::to_string(k0) + "); use regularization");
        auto& mu = out.mu.values;
        for (std::size_t j = 0; j < m; ++j) {
            double s = d[j];
            for (std::size_t k = 0; k < j; ++k) s -= kernel[j - k] * mu[k];
            mu[j] = s / k0;
        }
        out.residual = detail::rms_misfit(kernel.values, mu, d);
        return out;
    }

    const detail::TikhonovSystem sys(kernel.values, d);
    if (reg.mode == Regularization::Mode::fixed) {
        detail::require(reg.value > 0.0, "regularization weight must be positive");
        out.mu.values = sys.solve(reg.value);
        out.regularization = reg.value;
        out.residual = detail::rms_misfit(kernel.values, out.mu.values, d);
        return out;
    }

    detail::require(reg.noise_level > 0.0 && reg.safety > 0.0, "discrepancy principle needs a positive noise level");
    const double target = reg.safety * out.noise_floor;
    auto misfit = [&](double log_reg) {
        const auto mu = sys.solve(std::pow(10.0, log_reg));
        return detail::rms_misfit(kernel.values, mu, d);
    };
    double lo = std::log10(sys.scale()) - 16.0;
    double hi = std::log10(sys.scale()) + 4.0;
    if (misfit(hi) < target) {
        lo = hi;
    } else if (misfit(lo) > target) {
        hi = lo;
    } else {
        for (int it = 0; it < 40 && hi - lo > 1e-3; ++it) {
            const double mid = 0.5 * (lo + hi);
            (misfit(mid) > target ? hi : lo) = mid;
        }
    }
    out.regularization = std::pow(10.0, 0.5 * (lo + hi));
    out.mu.values = sys.solve(out.regularization);
    out.residual = detail::rms_misfit(kernel.values, out.mu.values, d);
    return out;
}

/// Trapezoid-kernel form taking the v_g trace directly.
inline MuRecovery recover_mu_from_trace(const TimeSeries& data, const TimeSeries& vg_trace,
                                        const Regularization& reg = {}) {
    return recover_mu(data, kernel_from_trace(vg_trace), reg);
}

/// rho(t) = (1 / Gamma(1 - alpha)) int_0^t mu(s) (t - s)^{-alpha} ds for cell
/// values mu_k located at the midpoints. mu is taken piecewise linear between
/// midpoints (constant on the first half cell, extrapolated on the last), and
/// the first two cells carry starting corrections that make the rule exact
/// for mu = t^{alpha-1} and mu = t^alpha. rho(0) is read off the t^{alpha-1}
/// component of the first two cells.
inline TimeSeries recover_rho(const TimeSeries& mu, FractionalOrder alpha) {
    detail::require(mu.location == TimeSeries::Location::cells, "mu must be given as cell values");
    const TimeGrid& grid = mu.grid;
    const std::size_t m = grid.steps();
    const double a = alpha.value();
    const double ga = 1.0 - a;  // kernel r^{-alpha} = r^{ga - 1}

    // test functions in dt units: t^{a-1} and t^a, their cell averages and RL images
    std::vector<double> q1(m), q2(m);
    for (std::size_t k = 1; k <= m; ++k) {
        const double hi = static_cast<double>(k), lo = static_cast<double>(k - 1);
        q1[k - 1] = prodint::pow_diff(hi, lo, a) / a;
        q2[k - 1] = prodint::pow_diff(hi, lo, a + 1.0) / (a + 1.0);
    }
    const double rho_q1 = gamma_fn(a);  // image of t^{a-1}
    const double g_a1 = gamma_fn(a + 1.0);

    // bulk weights between midpoints, Toeplitz in l = j - k
    std::vector<double> seg_hi(m + 1), seg_lo(m + 1);
    for (std::size_t l = 0; l <= m; ++l)
        std::tie(seg_hi[l], seg_lo[l]) =
            prodint::linear_weights(static_cast<double>(l) + 0.5, static_cast<double>(l) + 1.5, -a);
    const double p0 = std::pow(0.5, ga) / ga;
    const double p1 = std::pow(0.5, ga + 1.0) / (ga + 1.0);

    auto base = [&](std::span<const double> v, std::size_t j) {
        // first half cell [0, m_1], constant
        double s = v[0] * prodint::constant_weight(static_cast<double>(j) - 0.5, static_cast<double>(j), -a);
        if (j == 1) return s + v[0] * p0;
        for (std::size_t k = 2; k <= j; ++k) s += seg_hi[j - k] * v[k - 2] + seg_lo[j - k] * v[k - 1];
        // last half cell [m_j, t_j], extrapolated from the last two midpoints
        s += v[j - 1] * (1.5 * p0 - p1) - v[j - 2] * (0.5 * p0 - p1);
        return s;
    };

    // starting corrections on cells 1 and 2: solve C s = r with C_{ik} = q_i(cell k)
    const double c11 = q1[0], c12 = m > 1 ? q1[1] : 0.0;
    const double c21 = q2[0], c22 = m > 1 ? q2[1] : 0.0;
    const double det = c11 * c22 - c12 * c21;
    const double g1a = gamma_fn(ga);
    const double scale = std::pow(grid.dt(), ga) / g1a;
    std::vector<double> rho(m + 1);
    for (std::size_t j = 2; j <= m; ++j) {
        const double r1 = g1a * rho_q1 - base(q1, j);
        const double r2 = g1a * g_a1 * static_cast<double>(j) - base(q2, j);
        const double corr = (r1 * c22 - r2 * c12) / det * mu[0] + (r2 * c11 - r1 * c21) / det * mu[1];
        rho[j] = scale * (base(mu.values, j) + corr);
    }
    // First node and t = 0 from the local fit mu ~ A (t/dt)^{alpha-1} + B (t/dt)^alpha
    // on the first two cells; one cell only fixes A.
    const double lead = m > 1 ? (mu[0] * c22 - mu[1] * c21) / det : mu[0] / c11;
    const double next = m > 1 ? (mu[1] * c11 - mu[0] * c12) / det : 0.0;
    const double unit = std::pow(grid.dt(), ga);
    rho[0] = rho_q1 * lead * unit;
    rho[1] = (rho_q1 * lead + g_a1 * next) * unit;
    return TimeSeries::on_nodes(grid, std::move(rho));
}

struct InverseProblem {
    InverseSetup setup;
    TimeSeries data;
    Regularization regularization;
    std::optional<std::size_t> modes;  ///< spectral truncation of the kernel; default_mode_count when empty
};

struct RecoveryResult {
    TimeSeries mu_hat;
    TimeSeries rho_hat;
    double regularization_parameter = 0.0;
    double residual = 0.0;
    double noise_floor = 0.0;
};

/// Kernel from the eigensystem, then recover_mu, then recover_rho.
inline RecoveryResult run_inversion(const InverseProblem& prob) {
    const auto& s = prob.setup;
    detail::require(prob.data.grid == s.times, "data are sampled on a different time grid");
    const std::size_t modes = prob.modes.value_or(default_mode_count(s.grid));
    const EigenSystem es = discrete_eigensystem(s.matrix, modes, s.grid);
    const TimeSeries kernel = kernel_from_modes(es, s.g, s.alpha, s.x0, s.times);
    const MuRecovery mu = recover_mu(prob.data, kernel, prob.regularization, std::max(max_abs(s.g), 1e-300));
    return {mu.mu, recover_rho(mu.mu, s.alpha), mu.regularization, mu.residual, mu.noise_floor};
}

}  // namespace fracdiff
