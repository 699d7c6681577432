#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "fracdiff/core.hpp"
#include "fracdiff/gamma.hpp"
#include "fracdiff/mittag_leffler.hpp"
#include "fracdiff/product_integration.hpp"
#include "fracdiff/spectral_domain.hpp"

namespace fracdiff {

/// Temporal factor rho of a separated source, as node samples plus a nodal
/// derivative. rho(0) is samples[0].
struct RhoProfile {
    TimeSeries samples;
    std::vector<double> derivative;

    RhoProfile(TimeSeries values, std::vector<double> slope) : samples(std::move(values)), derivative(std::move(slope)) {
        detail::require(samples.location == TimeSeries::Location::nodes, "rho must be sampled on time nodes");
        detail::require(derivative.size() == samples.size(), "rho derivative has wrong length");
    }

    /// Derivative taken from the clamped cubic spline through the samples.
    static RhoProfile from_samples(TimeSeries values) {
        auto slope = prodint::spline_derivative(values.values, values.grid.dt());
        return {std::move(values), std::move(slope)};
    }

    static RhoProfile from_function(const TimeGrid& grid, const std::function<double(double)>& rho,
                                    const std::function<double(double)>& rho_prime = {}) {
        std::vector<double> v(grid.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = rho(grid[j]);
        TimeSeries s = TimeSeries::on_nodes(grid, std::move(v));
        if (!rho_prime) return from_samples(std::move(s));
        std::vector<double> d(grid.size());
        for (std::size_t j = 0; j < d.size(); ++j) d[j] = rho_prime(grid[j]);
        return {std::move(s), std::move(d)};
    }

    [[nodiscard]] const TimeGrid& grid() const noexcept { return samples.grid; }
};

/// F(x, t) = rho(t) g(x).
struct SourceSpec {
    RhoProfile rho;
    Field g;

    [[nodiscard]] bool g_nonnegative() const {
        bool nonzero = false;
        for (double v : g) {
            if (v < 0.0) return false;
            nonzero = nonzero || v > 0.0;
        }
        return nonzero;
    }
};

/// u(x_i, t_j) on a space grid times a time grid, stored time-major.
struct SpaceTimeSolution {
    Domain1D space;
    TimeGrid time;
    double alpha;
    std::vector<double> values;

    SpaceTimeSolution(Domain1D x, TimeGrid t, double order)
        : space(x), time(t), alpha(order), values(x.size() * t.size(), 0.0) {}

    double& at(std::size_t i, std::size_t j) { return values[j * space.size() + i]; }
    [[nodiscard]] double operator()(std::size_t i, std::size_t j) const { return values[j * space.size() + i]; }

    [[nodiscard]] std::span<const double> snapshot(std::size_t j) const {
        return {values.data() + j * space.size(), space.size()};
    }

    [[nodiscard]] TimeSeries trace(std::size_t i) const {
        std::vector<double> v(time.size());
        for (std::size_t j = 0; j < v.size(); ++j) v[j] = (*this)(i, j);
        return TimeSeries::on_nodes(time, std::move(v));
    }

    SpaceTimeSolution& operator+=(const SpaceTimeSolution& other) {
        detail::require(other.space == space && other.time == time, "cannot add solutions on different grids");
        for (std::size_t k = 0; k < values.size(); ++k) values[k] += other.values[k];
        return *this;
    }
};

namespace detail {

// Expands per-mode time histories amp[n][j] into u(x_i, t_j).
inline SpaceTimeSolution synthesize(const EigenSystem& es, const TimeGrid& times, double alpha,
                                    const std::vector<std::vector<double>>& amp) {
    SpaceTimeSolution sol(es.grid(), times, alpha);
    const std::size_t nx = es.grid().size();
    for (std::size_t n = 0; n < amp.size(); ++n) {
        const auto phi = es.mode(n);
        for (std::size_t j = 0; j < times.size(); ++j) {
            const double a = amp[n][j];
            if (a == 0.0) continue;
            double* row = sol.values.data() + j * nx;
            for (std::size_t i = 0; i < nx; ++i) row[i] += a * phi[i];
        }
    }
    return sol;
}

}  // namespace detail

/// u(x, t) = sum_n E_{alpha,1}(-lambda_n t^alpha) (a, phi_n) phi_n(x).
inline SpaceTimeSolution solve_homogeneous(const EigenSystem& es, std::span<const double> a, FractionalOrder alpha,
                                           const TimeGrid& times) {
    const auto c = project(a, es);
    std::vector<std::vector<double>> amp(es.mode_count(), std::vector<double>(times.size()));
    for (std::size_t n = 0; n < c.size(); ++n)
        for (std::size_t j = 0; j < times.size(); ++j) {
            const double ta = std::pow(times[j], alpha.value());
            amp[n][j] = c[n] * ml::ml_eval(alpha, 1.0, -es.eigenvalue(n) * ta);
        }
    return detail::synthesize(es, times, alpha, amp);
}

/// Homogeneous solution at one node, evaluated at arbitrary times.
inline std::vector<double> homogeneous_trace(const EigenSystem& es, std::span<const double> a, FractionalOrder alpha,
                                             std::size_t x_index, std::span<const double> times) {
    detail::require(x_index < es.grid().size(), "node index outside the grid");
    const auto c = project(a, es);
    std::vector<double> out(times.size(), 0.0);
    for (std::size_t k = 0; k < times.size(); ++k) {
        detail::require(times[k] >= 0.0, "times must be nonnegative");
        const double ta = std::pow(times[k], alpha.value());
        double s = 0.0;
        for (std::size_t n = 0; n < c.size(); ++n)
            s += c[n] * es.phi(n, x_index) * ml::ml_eval(alpha, 1.0, -es.eigenvalue(n) * ta);
        out[k] = s;
    }
    return out;
}

/// G(x, ., t) = sum_n E_{alpha,1}(-lambda_n t^alpha) phi_n(x) phi_n(.), using
/// the first `modes` modes (all when omitted).
inline Field green_function(const EigenSystem& es, std::size_t x_index, FractionalOrder alpha, double t,
                            std::optional<std::size_t> modes = std::nullopt) {
    detail::require(t > 0.0, "Green function needs t > 0");
    detail::require(x_index < es.grid().size(), "node index outside the grid");
    const std::size_t count = modes.value_or(es.mode_count());
    detail::require(count >= 1 && count <= es.mode_count(), "Green function mode count out of range");
    const double ta = std::pow(t, alpha.value());
    Field g(es.grid().size(), 0.0);
    for (std::size_t n = 0; n < count; ++n) {
        const double w = ml::ml_eval(alpha, 1.0, -es.eigenvalue(n) * ta) * es.phi(n, x_index);
        const auto phi = es.mode(n);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += w * phi[i];
    }
    return g;
}

/// Cell averages of mu = d/dt I^alpha rho, i.e.
///   mu(t) = (rho(0) t^{alpha-1} + int_0^t rho'(s) (t-s)^{alpha-1} ds) / Gamma(alpha),
/// with rho' piecewise linear. Cell j holds (Phi(t_j) - Phi(t_{j-1})) / dt for
/// Phi = I^alpha rho, so the values stay finite at t = 0.
inline TimeSeries duhamel_mu(const RhoProfile& rho, FractionalOrder alpha) {
    const TimeGrid& grid = rho.grid();
    const std::size_t m = grid.steps();
    const double a = alpha.value();
    const double dt = grid.dt();
    // J_j = int_0^{t_j} rho'(s) (t_j - s)^alpha ds, in units of dt^{alpha+1}
    std::vector<double> w_hi(m), w_lo(m);
    for (std::size_t l = 0; l < m; ++l)
        std::tie(w_hi[l], w_lo[l]) = prodint::linear_weights(static_cast<double>(l), static_cast<double>(l + 1), a);
    std::vector<double> big_j(m + 1, 0.0);
    const auto& d = rho.derivative;
    for (std::size_t j = 1; j <= m; ++j) {
        double s = 0.0;
        for (std::size_t k = 1; k <= j; ++k) s += w_hi[j - k] * d[k - 1] + w_lo[j - k] * d[k];
        big_j[j] = s;
    }
    const double rho0 = rho.samples[0];
    const double scale = std::pow(dt, a) * rgamma(a + 1.0);
    std::vector<double> mu(m);
    for (std::size_t j = 1; j <= m; ++j) {
        const double head = rho0 * prodint::pow_diff(static_cast<double>(j), static_cast<double>(j - 1), a) / dt;
        mu[j - 1] = scale * (head + (big_j[j] - big_j[j - 1]));
    }
    return TimeSeries::on_cells(grid, std::move(mu));
}

/// Pointwise mu(t), t > 0, with the exact kernel (t-s)^{alpha-1}.
inline double duhamel_mu_at(const RhoProfile& rho, FractionalOrder alpha, double t) {
    const TimeGrid& grid = rho.grid();
    detail::require(t > 0.0 && t <= grid.horizon() * (1.0 + 1e-12), "mu is evaluated on (0, T]");
    const double a = alpha.value();
    const double dt = grid.dt();
    const auto& d = rho.derivative;
    double conv = 0.0;
    for (std::size_t k = 1; k <= grid.steps() && grid[k - 1] < t; ++k) {
        const double s0 = grid[k - 1];
        const double s1 = std::min(grid[k], t);
        const double d1 = d[k - 1] + (d[k] - d[k - 1]) * (s1 - s0) / dt;
        // r = t - s runs from t - s1 (at s1) to t - s0 (at s0)
        const auto [w_hi, w_lo] = prodint::linear_weights(t - s1, t - s0, a - 1.0);
        conv += w_hi * d[k - 1] + w_lo * d1;
    }
    return (rho.samples[0] * std::pow(t, a - 1.0) + conv) * rgamma(a);
}

namespace detail {

// Per-mode amplitude of int_0^{t_j} mu(t_j - s) E(-lambda s^alpha) ds. The
// rho(0) t^{alpha-1} / Gamma(alpha) part of mu is convolved in closed form;
// the continuous remainder is taken constant on cells against exact cell
// integrals of E(-lambda s^alpha).
inline std::vector<double> duhamel_mode(double lambda, double alpha, const TimeSeries& mu, double rho0) {
    const TimeGrid& grid = mu.grid;
    const std::size_t m = grid.steps();
    const double dt = grid.dt();
    std::vector<double> big_f(m + 1, 0.0), head(m + 1, 0.0);
    for (std::size_t l = 1; l <= m; ++l) {
        const double r = grid[l];
        const double ra = std::pow(r, alpha);
        big_f[l] = r * ml::ml_eval(alpha, 2.0, -lambda * ra);
        if (rho0 != 0.0) head[l] = rho0 * ra * ml::ml_eval(alpha, alpha + 1.0, -lambda * ra);
    }
    std::vector<double> v(m), rest(m);
    for (std::size_t l = 0; l < m; ++l) v[l] = big_f[l + 1] - big_f[l];
    const double singular = rho0 * std::pow(dt, alpha - 1.0) * rgamma(alpha + 1.0);
    for (std::size_t k = 1; k <= m; ++k)
        rest[k - 1] = mu[k - 1] - singular * prodint::pow_diff(static_cast<double>(k), static_cast<double>(k - 1), alpha);
    std::vector<double> out(m + 1, 0.0);
    for (std::size_t j = 1; j <= m; ++j) {
        double s = head[j];
        for (std::size_t k = 1; k <= j; ++k) s += rest[k - 1] * v[j - k];
        out[j] = s;
    }
    return out;
}

}  // namespace detail

/// Fractional Duhamel form: u(., t) = int_0^t mu(t - s) v_g(., s) ds with
/// v_g the homogeneous solution started from g.
inline SpaceTimeSolution solve_source_duhamel(const EigenSystem& es, const SourceSpec& src, FractionalOrder alpha) {
    const TimeSeries mu = duhamel_mu(src.rho, alpha);
    const auto c = project(src.g, es);
    std::vector<std::vector<double>> amp(es.mode_count());
    for (std::size_t n = 0; n < c.size(); ++n) {
        if (c[n] == 0.0) {
            amp[n].assign(mu.grid.size(), 0.0);
            continue;
        }
        amp[n] = detail::duhamel_mode(es.eigenvalue(n), alpha, mu, src.rho.samples[0]);
        for (double& v : amp[n]) v *= c[n];
    }
    return detail::synthesize(es, mu.grid, alpha, amp);
}

/// Response of one mode with eigenvalue lambda >= 0 to rho:
///   y(t_j) = int_0^{t_j} s^{alpha-1} E_{alpha,alpha}(-lambda s^alpha) rho(t_j - s) ds,
/// with rho piecewise linear. lambda = 0 gives the fractional integral I^alpha rho.
inline std::vector<double> mode_source_response(double lambda, FractionalOrder alpha, const TimeSeries& rho) {
    detail::require(lambda >= 0.0, "mode eigenvalue must be nonnegative");
    detail::require(rho.location == TimeSeries::Location::nodes, "rho must be sampled on time nodes");
    const TimeGrid& grid = rho.grid;
    const std::size_t m = grid.steps();
    const double a = alpha.value();
    const double dt = grid.dt();
    std::vector<double> k1(m + 1, 0.0), k2(m + 1, 0.0);
    for (std::size_t l = 1; l <= m; ++l) {
        const double s = grid[l];
        const double sa = std::pow(s, a);
        k1[l] = sa * ml::ml_eval(a, a + 1.0, -lambda * sa);
        k2[l] = s * sa * ml::ml_eval(a, a + 2.0, -lambda * sa);
    }
    std::vector<double> near(m), far(m);  // weights for rho_{j-l} and rho_{j-l-1}
    for (std::size_t l = 0; l < m; ++l) {
        const double w0 = k1[l + 1] - k1[l];
        const double w1 = dt * k1[l + 1] - (k2[l + 1] - k2[l]);
        near[l] = w0 - w1 / dt;
        far[l] = w1 / dt;
    }
    std::vector<double> out(m + 1, 0.0);
    for (std::size_t j = 1; j <= m; ++j) {
        double s = 0.0;
        for (std::size_t l = 0; l < j; ++l) s += rho[j - l] * near[l] + rho[j - l - 1] * far[l];
        out[j] = s;
    }
    return out;
}

/// Direct spectral form: u = sum_n [int_0^t s^{alpha-1} E_{alpha,alpha}(-lambda_n s^alpha) rho(t-s) ds] (g, phi_n) phi_n.
inline SpaceTimeSolution solve_source_spectral(const EigenSystem& es, const SourceSpec& src, FractionalOrder alpha) {
    const auto& rho = src.rho.samples;
    const auto c = project(src.g, es);
    std::vector<std::vector<double>> amp(es.mode_count());
    for (std::size_t n = 0; n < c.size(); ++n) {
        if (c[n] == 0.0) {
            amp[n].assign(rho.grid.size(), 0.0);
            continue;
        }
        amp[n] = mode_source_response(es.eigenvalue(n), alpha, rho);
        for (double& v : amp[n]) v *= c[n];
    }
    return detail::synthesize(es, rho.grid, alpha, amp);
}

}  // namespace fracdiff
