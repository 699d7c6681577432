#pragma once

// Two-parameter Mittag-Leffler function E_{alpha,beta}(z) on the closed
// negative real axis, 0 < alpha < 2.
//
// Three evaluation routes are combined:
//   * the defining power series, compensated, for small |z|;
//   * the Hankel-contour integral collapsed onto the negative real axis
//     (two rays plus a circle of radius eps around the branch point, plus
//     the residues of the two complex poles when alpha > 1);
//   * the algebraic asymptotic expansion for large |z|, again supplemented
//     by the pole residues when alpha > 1.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracdiff/core.hpp"
#include "fracdiff/gamma.hpp"
#include "fracdiff/quadrature.hpp"

namespace fracdiff::ml {

struct Params {
    double alpha;
    double beta;
    double z;
};

inline constexpr double kSeriesRadius = 5.0;
inline constexpr double kAsymptoticThreshold = 50.0;
inline constexpr std::size_t kSeriesTermCap = 400;
inline constexpr int kAsymptoticMaxTerms = 6;
// Largest series term tolerated by ml_eval before handing over to the
// integral: each term carries ~1e-16 relative rounding.
inline constexpr double kSeriesMaxTerm = 1e1;
// Omitted-term bound under which ml_eval trusts the asymptotic expansion.
inline constexpr double kAsymptoticTailBound = 1e-15;
inline constexpr double kIntegralTolerance = 1e-14;

enum class Branch { origin, closed_form, series, integral, asymptotic };

inline void validate(const Params& p) {
    detail::require(std::isfinite(p.alpha) && p.alpha > 0.0 && p.alpha < 2.0,
                    "Mittag-Leffler order alpha must lie in (0, 2), got " + std::to_string(p.alpha));
    detail::require(std::isfinite(p.beta), "Mittag-Leffler parameter beta must be finite");
    detail::require(std::isfinite(p.z) && p.z <= 0.0,
                    "Mittag-Leffler argument z must be real and non-positive, got " + std::to_string(p.z));
}

namespace detail {

struct SeriesOutcome {
    double value = 0.0;
    double largest_term = 0.0;
    bool converged = false;
};

// Neumaier-compensated partial sums; stops early once a term exceeds
// max_term (cancellation would dominate the result).
inline SeriesOutcome sum_series(const Params& p, double tol, double max_term) {
    SeriesOutcome out;
    double sum = 0.0, carry = 0.0, previous = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k <= kSeriesTermCap; ++k) {
        const double arg = p.alpha * static_cast<double>(k) + p.beta;
        double term;
        if (k == 0) {
            term = rgamma(arg);
        } else if (arg > 171.0) {
            const double log_mag = static_cast<double>(k) * std::log(-p.z) - log_gamma(arg);
            term = (k % 2 == 0 ? 1.0 : -1.0) * std::exp(log_mag);
        } else {
            term = std::pow(p.z, static_cast<double>(k)) * rgamma(arg);
        }
        const double mag = std::abs(term);
        out.largest_term = std::max(out.largest_term, mag);
        if (out.largest_term > max_term) return out;
        const double t = sum + term;
        carry += std::abs(sum) >= mag ? (sum - t) + term : (term - t) + sum;
        sum = t;
        if (mag < tol && mag <= previous && arg > 1.0) {
            out.value = sum + carry;
            out.converged = true;
            return out;
        }
        previous = mag;
    }
    out.value = sum + carry;
    return out;
}

inline double asymptotic_term(double alpha, double beta, double eta, int k) {
    const double sign = k % 2 == 1 ? 1.0 : -1.0;
    return sign * std::pow(eta, -static_cast<double>(k)) * rgamma(beta - alpha * k);
}

// Contribution of the complex-conjugate pole pair s^alpha = -eta, present on
// the principal sheet only when alpha > 1.
inline double pole_residues(double alpha, double beta, double eta) {
    const double radius = std::pow(eta, 1.0 / alpha);
    const double angle = std::numbers::pi / alpha;
    const std::complex<double> s = std::polar(radius, angle);
    const std::complex<double> power = std::polar(std::pow(radius, 1.0 - beta), angle * (1.0 - beta));
    return 2.0 / alpha * std::real(std::exp(s) * power);
}

// alpha == 1: E_{1,beta}(-eta) for every real beta and eta > 0.
inline double alpha_one(double beta, double eta) {
    const double z = -eta;
    if (beta == std::floor(beta)) {
        if (beta <= 1.0) return std::pow(z, 1.0 - beta) * std::exp(z);
        const int m = static_cast<int>(beta);
        double partial = 0.0, term = 1.0;
        for (int k = 0; k <= m - 2; ++k) {
            partial += term;
            term *= z / (k + 1);
        }
        return std::pow(z, 1.0 - beta) * (std::exp(z) - partial);
    }
    if (beta < 1.0) {
        // E_{1,b}(z) = 1/Gamma(b) + z E_{1,b+1}(z)
        return rgamma(beta) + z * alpha_one(beta + 1.0, eta);
    }
    // E_{1,b}(-eta) = (1/Gamma(b)) int_0^1 exp(-eta (1 - w^{1/(b-1)})) dw, b > 1
    const double p = 1.0 / (beta - 1.0);
    auto f = [&](double w) { return std::exp(-eta * (1.0 - std::pow(w, p))); };
    const auto r = quad::integrate(f, {0.0, 0.5, 1.0}, {kIntegralTolerance, kIntegralTolerance, 2000});
    if (!r.converged) throw ConvergenceError("Mittag-Leffler alpha = 1 integral did not converge");
    return rgamma(beta) * r.value;
}

}  // namespace detail

/// Power series sum_{k>=0} z^k / Gamma(alpha k + beta), truncated once the
/// first omitted term is below tol in magnitude.
inline double ml_series(const Params& p, double tol = 1e-17) {
    validate(p);
    fracdiff::detail::require(tol > 0.0, "series tolerance must be positive");
    fracdiff::detail::require(-p.z <= kSeriesRadius, "series branch requires |z| <= 5");
    const auto out = detail::sum_series(p, tol, std::numeric_limits<double>::infinity());
    if (!out.converged)
        throw ConvergenceError("Mittag-Leffler series did not reach its tail bound within 400 terms");
    return out.value;
}

/// Algebraic part of the large-argument expansion of E_{alpha,beta}(-eta):
/// sum_{k=1}^{terms} (-1)^{k+1} eta^{-k} / Gamma(beta - alpha k).
/// For alpha > 1 the exponentially small pole contributions are not included.
inline double ml_asymptotic(double alpha, double beta, double eta, int terms) {
    validate({alpha, beta, -eta});
    fracdiff::detail::require(eta >= kAsymptoticThreshold, "asymptotic branch requires eta >= 50");
    fracdiff::detail::require(terms >= 1, "asymptotic expansion needs at least one term");
    double sum = 0.0;
    for (int k = terms; k >= 1; --k) sum += detail::asymptotic_term(alpha, beta, eta, k);
    return sum;
}

/// Mid-range route: E_{alpha,beta}(-eta) from the collapsed Hankel contour,
/// valid for every eta > 0; adaptive Gauss-Kronrod at absolute tolerance 1e-14.
inline double ml_integral(double alpha, double beta, double eta) {
    validate({alpha, beta, -eta});
    fracdiff::detail::require(eta > 0.0, "integral branch requires eta > 0");
    if (alpha == 1.0) return detail::alpha_one(beta, eta);

    const double root = std::pow(eta, 1.0 / alpha);
    // Keep the circle clear of the poles (alpha > 1), which sit at |s| = root.
    const double eps = (alpha > 1.0 && root > 0.5 && root < 2.0) ? 3.0 : 1.0;

    const double sin_b = sin_pi(beta);
    const double sin_ba = sin_pi(beta - alpha);
    const double cos_a = cos_pi(alpha);
    const double expo = alpha - beta;
    auto ray = [&](double r) {
        const double ra = std::pow(r, alpha);
        const double weight = std::exp(-r + expo * std::log(r));
        return weight * (ra * sin_b + eta * sin_ba) / (ra * ra + 2.0 * eta * ra * cos_a + eta * eta);
    };
    double upper = eps + 10.0;
    while (-upper + std::max(expo, 0.0) * std::log(upper) > -46.0 + std::min(expo, 0.0) * std::log(eps)) upper += 10.0;

    std::vector<double> breaks{eps};
    auto add_break = [&](double r) {
        if (r > eps * 1.0001 && r < upper) breaks.push_back(r);
    };
    if (cos_a < 0.0) add_break(std::pow(-eta * cos_a, 1.0 / alpha));
    add_break(root);
    std::sort(breaks.begin(), breaks.end());
    breaks.push_back(upper);

    const quad::Tolerance tol{kIntegralTolerance, kIntegralTolerance, 600};
    const auto rays = quad::integrate(ray, std::span<const double>(breaks), tol);

    const double circle_power = 1.0 + alpha - beta;
    auto circle = [&](double phi) {
        const std::complex<double> s = std::polar(eps, phi);
        const std::complex<double> num = std::exp(s) * std::polar(std::pow(eps, circle_power), circle_power * phi);
        const std::complex<double> den = std::polar(std::pow(eps, alpha), alpha * phi) + eta;
        return std::real(num / den);
    };
    const auto arc = quad::integrate(circle, {0.0, 0.5 * std::numbers::pi, std::numbers::pi}, tol);

    if (!rays.converged || !arc.converged)
        throw ConvergenceError("Mittag-Leffler contour integral did not converge (alpha=" + std::to_string(alpha) +
                               ", beta=" + std::to_string(beta) + ", eta=" + std::to_string(eta) + ")");

    double value = (rays.value + arc.value) / std::numbers::pi;
    if (alpha > 1.0 && root > eps) value += detail::pole_residues(alpha, beta, eta);
    return value;
}

namespace detail {

struct AsymptoticOutcome {
    double value = 0.0;
    double tail = 0.0;
};

// Sum up to kAsymptoticMaxTerms terms, stopping at the smallest one; tail
// is the largest of the next three omitted terms.
inline AsymptoticOutcome asymptotic_with_tail(double alpha, double beta, double eta) {
    AsymptoticOutcome out;
    int used = 0;
    double smallest = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= kAsymptoticMaxTerms; ++k) {
        const double t = asymptotic_term(alpha, beta, eta, k);
        if (t != 0.0 && std::abs(t) > smallest) break;
        if (t != 0.0) smallest = std::abs(t);
        out.value += t;
        used = k;
    }
    for (int k = used + 1; k <= used + 3; ++k) out.tail = std::max(out.tail, std::abs(asymptotic_term(alpha, beta, eta, k)));
    if (alpha > 1.0) out.value += pole_residues(alpha, beta, eta);
    return out;
}

}  // namespace detail

/// Which route ml_eval takes for the given parameters.
inline Branch select_branch(const Params& p) {
    validate(p);
    if (p.z == 0.0) return Branch::origin;
    if (p.alpha == 1.0 && p.beta == 1.0) return Branch::closed_form;
    const double eta = -p.z;
    if (eta <= kSeriesRadius && detail::sum_series(p, 1e-17, kSeriesMaxTerm).converged) return Branch::series;
    if (eta >= kAsymptoticThreshold && detail::asymptotic_with_tail(p.alpha, p.beta, eta).tail <= kAsymptoticTailBound)
        return Branch::asymptotic;
    return Branch::integral;
}

/// E_{alpha,beta}(z) for 0 < alpha < 2, real beta, z <= 0. Absolute error
/// target 1e-12.
inline double ml_eval(const Params& p) {
    validate(p);
    if (p.z == 0.0) return rgamma(p.beta);
    if (p.alpha == 1.0 && p.beta == 1.0) return std::exp(p.z);
    const double eta = -p.z;
    if (eta <= kSeriesRadius) {
        const auto s = detail::sum_series(p, 1e-17, kSeriesMaxTerm);
        if (s.converged) return s.value;
    }
    if (eta >= kAsymptoticThreshold) {
        const auto a = detail::asymptotic_with_tail(p.alpha, p.beta, eta);
        if (a.tail <= kAsymptoticTailBound) return a.value;
    }
    return ml_integral(p.alpha, p.beta, eta);
}

inline double ml_eval(double alpha, double beta, double z) { return ml_eval(Params{alpha, beta, z}); }

/// d/dt E_{alpha,1}(-lambda t^alpha) = -lambda t^{alpha-1} E_{alpha,alpha}(-lambda t^alpha).
inline double ml_time_derivative(double alpha, double lambda, double t) {
    fracdiff::detail::require(t > 0.0, "time derivative requires t > 0");
    fracdiff::detail::require(lambda > 0.0, "time derivative requires lambda > 0");
    const double ta = std::pow(t, alpha);
    return -lambda * ta / t * ml_eval(alpha, alpha, -lambda * ta);
}

}  // namespace fracdiff::ml
