#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "fracdiff/core.hpp"

namespace fracdiff {

/// Symmetric tridiagonal matrix: diagonal d (n entries), off-diagonal e (n - 1).
struct SymTridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    [[nodiscard]] std::size_t size() const noexcept { return diag.size(); }

    [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const {
        const std::size_t n = size();
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = diag[i] * x[i];
            if (i > 0) s += off[i - 1] * x[i - 1];
            if (i + 1 < n) s += off[i] * x[i + 1];
            y[i] = s;
        }
        return y;
    }

    /// Gershgorin bound on the spectral radius.
    [[nodiscard]] double norm_bound() const noexcept {
        double m = 0.0;
        for (std::size_t i = 0; i < size(); ++i) {
            double r = std::abs(diag[i]);
            if (i > 0) r += std::abs(off[i - 1]);
            if (i + 1 < size()) r += std::abs(off[i]);
            m = std::max(m, r);
        }
        return m;
    }
};

/// Solves (shift I + A) x = rhs by the Thomas algorithm. Intended for
/// diagonally dominant systems; a vanishing pivot raises SolverError.
inline std::vector<double> solve_shifted(const SymTridiagonal& a, double shift, std::span<const double> rhs) {
    const std::size_t n = a.size();
    detail::require(rhs.size() == n, "tridiagonal solve: right-hand side has wrong length");
    std::vector<double> c(n), x(rhs.begin(), rhs.end());
    double pivot = a.diag[0] + shift;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) {
            pivot = a.diag[i] + shift - a.off[i - 1] * c[i - 1];
            x[i] -= a.off[i - 1] * x[i - 1];
        }
        if (pivot == 0.0 || !std::isfinite(pivot)) throw SolverError("tridiagonal solve hit a zero pivot");
        if (i + 1 < n) c[i] = a.off[i] / pivot;
        x[i] /= pivot;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
    return x;
}

namespace detail {

// LU factorization with partial pivoting of a general tridiagonal matrix
// (sub, diag, super), LAPACK dgttrf layout: second superdiagonal in du2.
struct PivotedTridiagonalLU {
    std::vector<double> dl, d, du, du2;
    std::vector<bool> swapped;

    PivotedTridiagonalLU(const SymTridiagonal& a, double shift) {
        const std::size_t n = a.size();
        d.resize(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = a.diag[i] - shift;
        dl = a.off;
        du = a.off;
        du2.assign(n > 2 ? n - 2 : 0, 0.0);
        swapped.assign(n, false);
        const double tiny = std::numeric_limits<double>::epsilon() * std::max(a.norm_bound(), 1.0);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (std::abs(d[i]) >= std::abs(dl[i])) {
                if (d[i] == 0.0) d[i] = tiny;
                const double f = dl[i] / d[i];
                dl[i] = f;
                d[i + 1] -= f * du[i];
            } else {
                const double f = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = f;
                const double t = du[i];
                du[i] = d[i + 1];
                d[i + 1] = t - f * d[i + 1];
                if (i + 2 < n) {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du[i + 1];
                }
                swapped[i] = true;
            }
        }
        if (n > 0 && d[n - 1] == 0.0) d[n - 1] = tiny;
    }

    void solve(std::vector<double>& b) const {
        const std::size_t n = d.size();
        for (std::size_t i = 0; i + 1 < n; ++i) {
            if (!swapped[i]) {
                b[i + 1] -= dl[i] * b[i];
            } else {
                const double t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - dl[i] * b[i + 1];
            }
        }
        b[n - 1] /= d[n - 1];
        if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for (std::size_t i = n - 2; i-- > 0;) b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
};

}  // namespace detail

/// All eigenvalues of a symmetric tridiagonal matrix, ascending, by the
/// implicit-shift QL iteration.
inline std::vector<double> tridiagonal_eigenvalues(const SymTridiagonal& a, int max_sweeps = 60) {
    const std::size_t n = a.size();
    std::vector<double> d = a.diag;
    std::vector<double> e(n, 0.0);
    std::copy(a.off.begin(), a.off.end(), e.begin());
    const double eps = std::numeric_limits<double>::epsilon();

    for (std::size_t l = 0; l < n; ++l) {
        int sweeps = 0;
        std::size_t m;
        do {
            for (m = l; m + 1 < n; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m == l) break;
            if (++sweeps > max_sweeps) throw ConvergenceError("tridiagonal QL iteration did not converge");
            double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            double r = std::hypot(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
            double s = 1.0, c = 1.0, p = 0.0;
            bool deflated = false;
            for (std::size_t i = m; i-- > l;) {
                const double f = s * e[i];
                const double b = c * e[i];
                r = std::hypot(f, g);
                e[i + 1] = r;
                if (r == 0.0) {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if (deflated) continue;
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        } while (m != l);
    }
    std::sort(d.begin(), d.end());
    return d;
}

/// Unit-norm eigenvector for an (accurately known) eigenvalue, by inverse
/// iteration, re-orthogonalized against the supplied vectors.
inline std::vector<double> tridiagonal_eigenvector(const SymTridiagonal& a, double lambda,
                                                   std::span<const std::vector<double>> previous = {},
                                                   int iterations = 4) {
    const std::size_t n = a.size();
    const detail::PivotedTridiagonalLU lu(a, lambda);
    std::vector<double> v(n);
    // deterministic start vector with components along every eigenvector
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.1 * std::sin(1.7 * static_cast<double>(i) + 0.3);
    auto normalize = [&] {
        double s = 0.0;
        for (double x : v) s += x * x;
        s = std::sqrt(s);
        if (!(s > 0.0) || !std::isfinite(s)) throw ConvergenceError("inverse iteration produced a degenerate vector");
        for (double& x : v) x /= s;
    };
    auto orthogonalize = [&] {
        for (const auto& q : previous) {
            double dot = 0.0;
            for (std::size_t i = 0; i < n; ++i) dot += q[i] * v[i];
            for (std::size_t i = 0; i < n; ++i) v[i] -= dot * q[i];
        }
    };
    normalize();
    for (int it = 0; it < iterations; ++it) {
        lu.solve(v);
        orthogonalize();
        normalize();
    }
    orthogonalize();
    normalize();
    return v;
}

}  // namespace fracdiff
