#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fracdiff/core.hpp"
#include "fracdiff/gamma.hpp"
#include "fracdiff/tridiagonal.hpp"

namespace fracdiff {

/// Uniform interior grid on (0, L): x_i = (i + 1) h, i = 0..N_x-1, h = L / (N_x + 1).
/// The Dirichlet endpoints are not stored.
class Domain1D {
public:
    Domain1D(double length, std::size_t points) : length_(length), points_(points) {
        detail::require(std::isfinite(length) && length > 0.0, "domain length L must be positive");
        detail::require(points >= 3, "spatial grid needs at least 3 interior points");
    }

    [[nodiscard]] double length() const noexcept { return length_; }
    [[nodiscard]] std::size_t size() const noexcept { return points_; }
    [[nodiscard]] double h() const noexcept { return length_ / static_cast<double>(points_ + 1); }
    [[nodiscard]] double node(std::size_t i) const noexcept { return static_cast<double>(i + 1) * h(); }

    [[nodiscard]] std::vector<double> nodes() const {
        std::vector<double> x(points_);
        for (std::size_t i = 0; i < points_; ++i) x[i] = node(i);
        return x;
    }

    /// Trapezoid weights; with zero boundary values every interior weight is h.
    [[nodiscard]] std::vector<double> weights() const { return std::vector<double>(points_, h()); }

    /// Index of the node nearest to x.
    [[nodiscard]] std::size_t nearest_index(double x) const {
        detail::require(x > 0.0 && x < length_, "point must lie inside the open interval (0, L)");
        const double k = std::round(x / h()) - 1.0;
        return static_cast<std::size_t>(std::clamp(k, 0.0, static_cast<double>(points_ - 1)));
    }

    /// Samples f on the interior nodes.
    [[nodiscard]] Field sample(const std::function<double(double)>& f) const {
        Field out(points_);
        for (std::size_t i = 0; i < points_; ++i) out[i] = f(node(i));
        return out;
    }

    bool operator==(const Domain1D& other) const noexcept {
        return points_ == other.points_ && length_ == other.length_;
    }

private:
    double length_;
    std::size_t points_;
};

/// Coefficients of A f = -(a f')' + c f. The diffusion coefficient is held at
/// the cell midpoints x_{i+1/2}, i = 0..N_x, the reaction term at the nodes.
struct EllipticCoeffs {
    std::vector<double> a_mid;
    std::vector<double> c;
    double delta = 0.0;  ///< ellipticity constant, min a

    EllipticCoeffs(std::vector<double> a_midpoints, std::vector<double> c_nodes)
        : a_mid(std::move(a_midpoints)), c(std::move(c_nodes)) {
        detail::require(a_mid.size() == c.size() + 1, "coefficient arrays do not fit one grid");
        for (double a : a_mid)
            detail::require(std::isfinite(a) && a > 0.0, "diffusion coefficient a must be positive everywhere");
        for (double v : c)
            detail::require(std::isfinite(v) && v >= 0.0, "reaction coefficient c must be nonnegative everywhere");
        delta = *std::min_element(a_mid.begin(), a_mid.end());
    }

    static EllipticCoeffs from_functions(const Domain1D& grid, const std::function<double(double)>& a,
                                         const std::function<double(double)>& c) {
        std::vector<double> am(grid.size() + 1);
        for (std::size_t i = 0; i < am.size(); ++i) am[i] = a((static_cast<double>(i) + 0.5) * grid.h());
        return {std::move(am), grid.sample(c)};
    }

    static EllipticCoeffs constant(const Domain1D& grid, double a = 1.0, double c = 0.0) {
        return {std::vector<double>(grid.size() + 1, a), std::vector<double>(grid.size(), c)};
    }
};

/// Conservative three-point stencil for A with homogeneous Dirichlet data.
inline SymTridiagonal assemble_operator(const Domain1D& grid, const EllipticCoeffs& coeffs) {
    const std::size_t n = grid.size();
    detail::require(coeffs.c.size() == n, "coefficients were sampled on a different grid");
    const double ih2 = 1.0 / (grid.h() * grid.h());
    SymTridiagonal m;
    m.diag.resize(n);
    m.off.resize(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        m.diag[i] = (coeffs.a_mid[i] + coeffs.a_mid[i + 1]) * ih2 + coeffs.c[i];
        if (i + 1 < n) m.off[i] = -coeffs.a_mid[i + 1] * ih2;
    }
    return m;
}

/// Leading eigenpairs of A, with eigenfunctions sampled on the grid and
/// orthonormal in the discrete weighted inner product.
class EigenSystem {
public:
    EigenSystem(Domain1D grid, std::vector<double> eigenvalues, std::vector<double> modes)
        : grid_(grid), lambda_(std::move(eigenvalues)), phi_(std::move(modes)), weights_(grid.weights()) {
        detail::require(phi_.size() == lambda_.size() * grid_.size(), "eigenfunction table has wrong shape");
        detail::require(!lambda_.empty(), "eigensystem needs at least one mode");
    }

    [[nodiscard]] const Domain1D& grid() const noexcept { return grid_; }
    [[nodiscard]] std::size_t mode_count() const noexcept { return lambda_.size(); }
    [[nodiscard]] const std::vector<double>& eigenvalues() const noexcept { return lambda_; }
    [[nodiscard]] double eigenvalue(std::size_t n) const { return lambda_[n]; }
    [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }

    /// Samples of the n-th eigenfunction (0-based: mode(0) is phi_1).
    [[nodiscard]] std::span<const double> mode(std::size_t n) const {
        return {phi_.data() + n * grid_.size(), grid_.size()};
    }
    [[nodiscard]] double phi(std::size_t n, std::size_t i) const { return phi_[n * grid_.size() + i]; }

    /// max |<phi_m, phi_n> - delta_mn| over the retained modes.
    [[nodiscard]] double orthonormality_residual() const {
        double worst = 0.0;
        for (std::size_t m = 0; m < mode_count(); ++m)
            for (std::size_t n = m; n < mode_count(); ++n) {
                double s = 0.0;
                for (std::size_t i = 0; i < grid_.size(); ++i) s += weights_[i] * phi(m, i) * phi(n, i);
                worst = std::max(worst, std::abs(s - (m == n ? 1.0 : 0.0)));
            }
        return worst;
    }

private:
    Domain1D grid_;
    std::vector<double> lambda_;
    std::vector<double> phi_;
    std::vector<double> weights_;
};

/// Default truncation: min(64, N_x / 4), at least one mode.
inline std::size_t default_mode_count(const Domain1D& grid) {
    return std::max<std::size_t>(1, std::min<std::size_t>(64, grid.size() / 4));
}

/// Dirichlet Laplacian on (0, L): lambda_n = (n pi / L)^2, phi_n = sqrt(2/L) sin(n pi x / L).
inline EigenSystem analytic_eigensystem(double length, std::size_t modes, const Domain1D& grid) {
    detail::require(length == grid.length(), "analytic eigensystem length differs from the grid length");
    detail::require(modes >= 1, "mode count must be positive");
    std::vector<double> lambda(modes), phi(modes * grid.size());
    const double scale = std::sqrt(2.0 / length);
    for (std::size_t n = 0; n < modes; ++n) {
        const double k = static_cast<double>(n + 1) / length;
        lambda[n] = (k * std::numbers::pi) * (k * std::numbers::pi);
        for (std::size_t i = 0; i < grid.size(); ++i) phi[n * grid.size() + i] = scale * sin_pi(k * grid.node(i));
    }
    return {grid, std::move(lambda), std::move(phi)};
}

/// First `modes` eigenpairs of the assembled operator: QL for the spectrum,
/// inverse iteration for the vectors. Sign rule: first non-negligible
/// component positive.
inline EigenSystem discrete_eigensystem(const SymTridiagonal& matrix, std::size_t modes, const Domain1D& grid) {
    const std::size_t n = matrix.size();
    detail::require(n == grid.size(), "matrix size differs from the grid size");
    detail::require(modes >= 1 && modes <= n, "mode count must lie in [1, N_x]");
    const std::vector<double> all = tridiagonal_eigenvalues(matrix);
    if (!(all.front() > 0.0)) throw SolverError("operator is not positive definite (lambda_1 <= 0)");

    std::vector<std::vector<double>> vectors;
    vectors.reserve(modes);
    std::vector<double> lambda(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(modes));
    std::vector<double> phi(modes * n);
    const double inv_sqrt_h = 1.0 / std::sqrt(grid.h());
    for (std::size_t k = 0; k < modes; ++k) {
        std::vector<double> v = tridiagonal_eigenvector(matrix, lambda[k], vectors);
        const double cut = 1e-8 * max_abs(v);
        for (double x : v) {
            if (std::abs(x) > cut) {
                if (x < 0.0)
                    for (double& y : v) y = -y;
                break;
            }
        }
        for (std::size_t i = 0; i < n; ++i) phi[k * n + i] = v[i] * inv_sqrt_h;
        vectors.push_back(std::move(v));
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!(phi[i] > 0.0)) throw SolverError("first eigenfunction is not strictly positive on the interior nodes");
    if (modes > 1 && !(lambda[1] > lambda[0])) throw SolverError("first eigenvalue is not simple");
    return {grid, std::move(lambda), std::move(phi)};
}

/// Coefficients c_n = sum_i w_i f(x_i) phi_n(x_i).
inline std::vector<double> project(std::span<const double> f, const EigenSystem& es) {
    const std::size_t nx = es.grid().size();
    detail::require(f.size() == nx, "field is sampled on a different grid than the eigensystem");
    std::vector<double> c(es.mode_count());
    const auto& w = es.weights();
    for (std::size_t n = 0; n < c.size(); ++n) {
        const auto phi = es.mode(n);
        double s = 0.0;
        for (std::size_t i = 0; i < nx; ++i) s += w[i] * f[i] * phi[i];
        c[n] = s;
    }
    return c;
}

/// Field sum_n c_n phi_n.
inline Field reconstruct(std::span<const double> coeffs, const EigenSystem& es) {
    detail::require(coeffs.size() <= es.mode_count(), "more coefficients than retained modes");
    Field f(es.grid().size(), 0.0);
    for (std::size_t n = 0; n < coeffs.size(); ++n) {
        const auto phi = es.mode(n);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += coeffs[n] * phi[i];
    }
    return f;
}

/// Norm of D(A^gamma): (sum_n |lambda_n^gamma (f, phi_n)|^2)^(1/2) over retained modes.
inline double fractional_norm(std::span<const double> f, const EigenSystem& es, double gamma) {
    detail::require(gamma >= 0.0, "fractional_norm needs gamma >= 0");
    const auto c = project(f, es);
    double s = 0.0;
    for (std::size_t n = 0; n < c.size(); ++n) {
        const double v = std::pow(es.eigenvalue(n), gamma) * c[n];
        s += v * v;
    }
    return std::sqrt(s);
}

/// Discrete weighted L2 norm on the grid.
inline double l2_norm(std::span<const double> f, const Domain1D& grid) {
    double s = 0.0;
    for (double v : f) s += v * v;
    return std::sqrt(grid.h() * s);
}

}  // namespace fracdiff
