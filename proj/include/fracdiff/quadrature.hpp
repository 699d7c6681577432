#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <tuple>
#include <utility>
#include <vector>

namespace fracdiff::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
    std::size_t evaluations = 0;
    bool converged = false;
};

struct Tolerance {
    double absolute = 1e-13;
    double relative = 1e-13;
    std::size_t max_segments = 400;
};

namespace detail {

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1] (QUADPACK qk15).
inline constexpr std::array<double, 8> kNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0,
};
inline constexpr std::array<double, 8> kKronrod = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
};
inline constexpr std::array<double, 4> kGauss = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
};

struct Segment {
    double a, b, value, error;
};

template <typename F>
Segment gk15(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * kKronrod[7];
    double gauss = fc * kGauss[3];
    for (std::size_t i = 0; i < 7; ++i) {
        const double dx = half * kNodes[i];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += kKronrod[i] * pair;
        if (i % 2 == 1) gauss += kGauss[i / 2] * pair;
    }
    return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod quadrature over the finite interval
/// split at the given breakpoints (which must be increasing).
template <typename F>
Result integrate(F&& f, std::span<const double> pts, Tolerance tol = {}) {
    std::vector<detail::Segment> segments;
    Result out;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] > pts[i]) segments.push_back(detail::gk15(f, pts[i], pts[i + 1]));
        out.evaluations += 15;
    }
    auto totals = [&] {
        double v = 0.0, e = 0.0;
        for (const auto& s : segments) {
            v += s.value;
            e += s.error;
        }
        return std::pair{v, e};
    };
    auto [value, error] = totals();
    while (error > std::max(tol.absolute, tol.relative * std::abs(value)) && segments.size() < tol.max_segments) {
        auto worst = std::max_element(segments.begin(), segments.end(),
                                      [](const auto& l, const auto& r) { return l.error < r.error; });
        const double a = worst->a, b = worst->b, m = 0.5 * (a + b);
        if (!(m > a && m < b)) break;  // interval exhausted at machine precision
        *worst = detail::gk15(f, a, m);
        segments.push_back(detail::gk15(f, m, b));
        out.evaluations += 30;
        std::tie(value, error) = totals();
    }
    out.value = value;
    out.error = error;
    out.converged = error <= std::max(tol.absolute, tol.relative * std::abs(value));
    return out;
}

template <typename F>
Result integrate(F&& f, std::initializer_list<double> breakpoints, Tolerance tol = {}) {
    const std::vector<double> pts(breakpoints);
    return integrate(std::forward<F>(f), std::span<const double>(pts), tol);
}

}  // namespace fracdiff::quad
