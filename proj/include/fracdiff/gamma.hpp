#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace fracdiff {

namespace detail {

inline bool is_nonpositive_integer(double x) noexcept { return x <= 0.0 && x == std::floor(x); }

// Gamma on the positive axis from the C library in extended precision; one
// rounding to double keeps the result within about half an ulp.
inline long double gamma_ext(long double x) noexcept { return std::tgamma(x); }

}  // namespace detail

/// sin(pi x), exact zero at the integers.
inline double sin_pi(double x) noexcept {
    if (x == std::floor(x)) return 0.0;
    double r = std::fmod(x, 2.0);  // r in (-2, 2)
    if (r > 1.0) r -= 2.0;
    if (r < -1.0) r += 2.0;
    // fold into [-1/2, 1/2] where sin is best conditioned
    if (r > 0.5) r = 1.0 - r;
    if (r < -0.5) r = -1.0 - r;
    return std::sin(std::numbers::pi * r);
}

/// cos(pi x), exact zero at the half-integers.
inline double cos_pi(double x) noexcept { return sin_pi(x + 0.5); }

/// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("log_gamma requires a positive argument");
    return static_cast<double>(std::lgamma(static_cast<long double>(x)));
}

/// Gamma(x). Throws at the poles x = 0, -1, -2, ...
inline double gamma_fn(double x) {
    if (detail::is_nonpositive_integer(x)) throw std::domain_error("Gamma has a pole at a non-positive integer");
    if (x >= 0.5) return static_cast<double>(detail::gamma_ext(x));
    // reflection keeps the sign pattern exact between the poles
    return static_cast<double>(std::numbers::pi_v<long double> / (sin_pi(x) * detail::gamma_ext(1.0L - x)));
}

/// 1 / Gamma(x), entire: exact zero at the non-positive integers.
inline double rgamma(double x) noexcept {
    if (detail::is_nonpositive_integer(x)) return 0.0;
    if (x >= 0.5) return static_cast<double>(1.0L / detail::gamma_ext(x));
    return static_cast<double>(sin_pi(x) * detail::gamma_ext(1.0L - x) / std::numbers::pi_v<long double>);
}

}  // namespace fracdiff
