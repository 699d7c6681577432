#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "fracdiff/core.hpp"
#include "fracdiff/tridiagonal.hpp"

namespace fracdiff::prodint {

/// hi^p - lo^p for 0 <= lo <= hi without cancellation.
inline double pow_diff(double hi, double lo, double p) {
    if (lo <= 0.0) return std::pow(hi, p);
    return std::pow(lo, p) * std::expm1(p * std::log1p((hi - lo) / lo));
}

/// Weights (w_hi, w_lo) with
///   int_{lo}^{hi} f(r) r^gamma dr = w_hi f(hi) + w_lo f(lo)
/// exact for f linear on [lo, hi]; gamma > -1.
inline std::pair<double, double> linear_weights(double lo, double hi, double gamma) {
    const double i0 = pow_diff(hi, lo, gamma + 1.0) / (gamma + 1.0);
    const double i1 = pow_diff(hi, lo, gamma + 2.0) / (gamma + 2.0);
    const double w_hi = (i1 - lo * i0) / (hi - lo);
    return {w_hi, i0 - w_hi};
}

/// int_{lo}^{hi} r^gamma dr.
inline double constant_weight(double lo, double hi, double gamma) {
    return pow_diff(hi, lo, gamma + 1.0) / (gamma + 1.0);
}

/// Nodal derivatives of the clamped cubic spline through equispaced samples.
/// End slopes come from fourth-order one-sided differences (lower order for
/// very short series).
inline std::vector<double> spline_derivative(std::span<const double> y, double dt) {
    const std::size_t n = y.size();
    detail::require(n >= 2, "spline needs at least two samples");
    std::vector<double> d(n);
    if (n == 2) {
        d[0] = d[1] = (y[1] - y[0]) / dt;
        return d;
    }
    if (n >= 5) {
        d[0] = (-25.0 * y[0] + 48.0 * y[1] - 36.0 * y[2] + 16.0 * y[3] - 3.0 * y[4]) / (12.0 * dt);
        d[n - 1] = (25.0 * y[n - 1] - 48.0 * y[n - 2] + 36.0 * y[n - 3] - 16.0 * y[n - 4] + 3.0 * y[n - 5]) / (12.0 * dt);
    } else {
        d[0] = (-3.0 * y[0] + 4.0 * y[1] - y[2]) / (2.0 * dt);
        d[n - 1] = (3.0 * y[n - 1] - 4.0 * y[n - 2] + y[n - 3]) / (2.0 * dt);
    }
    if (n == 3) {
        d[1] = (3.0 * (y[2] - y[0]) / dt - d[0] - d[2]) / 4.0;
        return d;
    }
    // interior: d[j-1] + 4 d[j] + d[j+1] = 3 (y[j+1] - y[j-1]) / dt
    const std::size_t m = n - 2;
    SymTridiagonal sys{std::vector<double>(m, 4.0), std::vector<double>(m - 1, 1.0)};
    std::vector<double> rhs(m);
    for (std::size_t j = 1; j + 1 < n; ++j) rhs[j - 1] = 3.0 * (y[j + 1] - y[j - 1]) / dt;
    rhs.front() -= d[0];
    rhs.back() -= d[n - 1];
    const auto inner = solve_shifted(sys, 0.0, rhs);
    for (std::size_t j = 0; j < m; ++j) d[j + 1] = inner[j];
    return d;
}

}  // namespace fracdiff::prodint
