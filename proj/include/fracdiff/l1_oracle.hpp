#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fracdiff/core.hpp"
#include "fracdiff/forward_solver.hpp"
#include "fracdiff/gamma.hpp"
#include "fracdiff/product_integration.hpp"
#include "fracdiff/spectral_domain.hpp"
#include "fracdiff/tridiagonal.hpp"

namespace fracdiff {

/// L1 weights b_k = (k+1)^{1-alpha} - k^{1-alpha}, k = 0..count-1.
inline std::vector<double> l1_weights(FractionalOrder alpha, std::size_t count) {
    std::vector<double> b(count);
    const double p = 1.0 - alpha.value();
    for (std::size_t k = 0; k < count; ++k)
        b[k] = prodint::pow_diff(static_cast<double>(k + 1), static_cast<double>(k), p);
    return b;
}

/// Source callback: adds F(x_i, t_j) into out for the given step j and time t_j.
using L1Source = std::function<void(std::size_t step, double t, std::span<double> out)>;

/// Implicit L1 time stepping for d_t^alpha u + A u = F, u(0) = a. Each step is
/// one tridiagonal solve of (sigma I + A) u^n = sigma * history + F^n with
/// sigma = 1 / (Gamma(2 - alpha) dt^alpha). alpha = 1 is backward Euler.
inline SpaceTimeSolution l1_solve(const SymTridiagonal& matrix, const Domain1D& grid, std::span<const double> a,
                                  const L1Source& source, FractionalOrder alpha, const TimeGrid& times) {
    const std::size_t nx = grid.size();
    detail::require(matrix.size() == nx, "operator size differs from the grid size");
    detail::require(a.size() == nx, "initial data sampled on a different grid");
    const std::size_t m = times.steps();
    const double dt = times.dt();
    const double sigma = rgamma(2.0 - alpha.value()) / std::pow(dt, alpha.value());
    const auto b = l1_weights(alpha, m + 1);
    std::vector<double> drop(m);  // b_{k-1} - b_k, k = 1..m
    for (std::size_t k = 1; k <= m; ++k) drop[k - 1] = b[k - 1] - b[k];

    SpaceTimeSolution sol(grid, times, alpha);
    std::copy(a.begin(), a.end(), sol.values.begin());
    std::vector<double> rhs(nx);
    for (std::size_t n = 1; n <= m; ++n) {
        // sigma * (sum_{k=1}^{n-1} (b_{k-1} - b_k) u^{n-k} + b_{n-1} u^0)
        for (std::size_t i = 0; i < nx; ++i) rhs[i] = b[n - 1] * sol.values[i];
        for (std::size_t k = 1; k < n; ++k) {
            const double w = drop[k - 1];
            const double* u = sol.values.data() + (n - k) * nx;
            for (std::size_t i = 0; i < nx; ++i) rhs[i] += w * u[i];
        }
        for (double& r : rhs) r *= sigma;
        if (source) source(n, times[n], rhs);
        const auto u = solve_shifted(matrix, sigma, rhs);
        for (double v : u)
            if (!std::isfinite(v)) throw SolverError("L1 step produced a non-finite value");
        std::copy(u.begin(), u.end(), sol.values.begin() + static_cast<std::ptrdiff_t>(n * nx));
    }
    return sol;
}

/// Separated source F = rho(t) g(x), with rho read from its node samples.
inline L1Source separated_source(const RhoProfile& rho, std::span<const double> g) {
    return [&rho, g](std::size_t step, double, std::span<double> out) {
        const double r = rho.samples[step];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += r * g[i];
    };
}

inline SpaceTimeSolution l1_solve(const SymTridiagonal& matrix, const Domain1D& grid, std::span<const double> a,
                                  FractionalOrder alpha, const TimeGrid& times) {
    return l1_solve(matrix, grid, a, L1Source{}, alpha, times);
}

inline SpaceTimeSolution l1_solve(const SymTridiagonal& matrix, const Domain1D& grid, std::span<const double> a,
                                  const SourceSpec& src, FractionalOrder alpha) {
    detail::require(src.g.size() == grid.size(), "source g sampled on a different grid");
    return l1_solve(matrix, grid, a, separated_source(src.rho, src.g), alpha, src.rho.grid());
}

}  // namespace fracdiff
