#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "fracdiff/core.hpp"
#include "fracdiff/forward_solver.hpp"
#include "fracdiff/mittag_leffler.hpp"
#include "fracdiff/spectral_domain.hpp"

namespace fracdiff {

struct ZeroInterval {
    double lo;
    double hi;
};

/// Outcome of a scan. violated is min_value < -tolerance; whether that
/// contradicts a principle depends on hypothesis_holds.
struct PrincipleReport {
    std::string principle;
    double min_value = std::numeric_limits<double>::infinity();
    double argmin_x = 0.0;
    double argmin_t = 0.0;
    double tolerance = 0.0;
    bool violated = false;
    bool hypothesis_holds = true;
    std::vector<std::size_t> zero_count_per_x;
    std::vector<ZeroInterval> zero_intervals;

    /// A genuine counterexample to the principle under test.
    [[nodiscard]] bool contradicts() const noexcept { return hypothesis_holds && violated; }
};

namespace detail {

inline bool nonnegative(std::span<const double> v) {
    for (double x : v)
        if (x < 0.0) return false;
    return true;
}

inline void scan_minimum(const SpaceTimeSolution& sol, PrincipleReport& r) {
    for (std::size_t j = 1; j < sol.time.size(); ++j)
        for (std::size_t i = 0; i < sol.space.size(); ++i) {
            const double v = sol(i, j);
            if (v < r.min_value) {
                r.min_value = v;
                r.argmin_x = sol.space.node(i);
                r.argmin_t = sol.time[j];
            }
        }
}

}  // namespace detail

/// Weak maximum principle: a >= 0 and F >= 0 give u >= 0. Scans every node
/// with t > 0. The data are echoed through hypothesis_holds.
inline PrincipleReport check_weak_mp(const SpaceTimeSolution& sol, double tol, std::span<const double> initial,
                                     std::span<const double> source_g = {}, std::span<const double> source_rho = {}) {
    detail::require(tol >= 0.0, "tolerance must be nonnegative");
    PrincipleReport r;
    r.principle = "weak";
    r.tolerance = tol;
    r.hypothesis_holds = detail::nonnegative(initial) && detail::nonnegative(source_g) && detail::nonnegative(source_rho);
    detail::scan_minimum(sol, r);
    r.violated = r.min_value < -tol;
    return r;
}

/// Zero set of t -> u(x0, t) on (0, T]. A node is zero-like when |u| <= tol;
/// a sign change between neighbouring nodes also marks a zero. Adjacent
/// zero-like stretches are merged into one interval [t_lo, t_hi].
inline std::vector<ZeroInterval> zero_set_estimate(const TimeSeries& trace, double tol) {
    detail::require(tol >= 0.0, "tolerance must be nonnegative");
    detail::require(trace.location == TimeSeries::Location::nodes, "zero counting expects a node trace");
    std::vector<ZeroInterval> out;
    bool open = false;
    auto mark = [&](double lo, double hi) {
        if (open) {
            out.back().hi = std::max(out.back().hi, hi);
        } else {
            out.push_back({lo, hi});
        }
        open = true;
    };
    for (std::size_t j = 1; j < trace.size(); ++j) {
        const double v = trace[j];
        const double t = trace.time(j);
        if (std::abs(v) <= tol) {
            mark(t, t);
            continue;
        }
        if (j >= 2 && std::abs(trace[j - 1]) > tol && (v > 0.0) != (trace[j - 1] > 0.0)) {
            mark(trace.time(j - 1), t);
            continue;
        }
        open = false;
    }
    return out;
}

/// True when the trace stays within tol of zero on all of (0, T].
inline bool degenerate_trace(const TimeSeries& trace, double tol) {
    for (std::size_t j = 1; j < trace.size(); ++j)
        if (std::abs(trace[j]) > tol) return false;
    return true;
}

/// Zero intervals of every spatial trace of a solution.
inline PrincipleReport check_zero_sets(const SpaceTimeSolution& sol, double tol, std::span<const double> initial) {
    PrincipleReport r;
    r.principle = "strong";
    r.tolerance = tol;
    bool nonzero = false;
    for (double v : initial) nonzero = nonzero || v > 0.0;
    r.hypothesis_holds = detail::nonnegative(initial) && nonzero;
    detail::scan_minimum(sol, r);
    r.violated = r.min_value < -tol;
    r.zero_count_per_x.resize(sol.space.size());
    for (std::size_t i = 0; i < sol.space.size(); ++i) {
        const auto z = zero_set_estimate(sol.trace(i), tol);
        r.zero_count_per_x[i] = z.size();
        r.zero_intervals.insert(r.zero_intervals.end(), z.begin(), z.end());
    }
    return r;
}

/// Strict positivity: u > tol_strict at every node with t > 0.
inline PrincipleReport check_strict_positivity(const SpaceTimeSolution& sol, double tol_strict,
                                               std::span<const double> initial) {
    detail::require(tol_strict >= 0.0, "strict positivity threshold must be nonnegative");
    PrincipleReport r;
    r.principle = "strict";
    r.tolerance = tol_strict;
    r.hypothesis_holds = true;
    for (double v : initial) r.hypothesis_holds = r.hypothesis_holds && v > 0.0;
    detail::scan_minimum(sol, r);
    r.violated = !(r.min_value > tol_strict);
    return r;
}

struct GreenCheck {
    double t;
    std::size_t modes;
    double min_value;
    double argmin_y;
    double bound;  ///< truncation bound eps(N, t)
    bool ok;
};

/// Sup-norm bound on the modes dropped by truncating G at N modes, relative
/// to the full expansion held in es:
///   eps(N) = sum_{n > N} E_{alpha,1}(-lambda_n t^alpha) |phi_n(x)| max|phi_n|.
inline double green_truncation_bound(const EigenSystem& es, std::size_t x_index, FractionalOrder alpha, double t,
                                     std::size_t modes) {
    const double ta = std::pow(t, alpha.value());
    double s = 0.0;
    for (std::size_t n = modes; n < es.mode_count(); ++n)
        s += ml::ml_eval(alpha, 1.0, -es.eigenvalue(n) * ta) * std::abs(es.phi(n, x_index)) * max_abs(es.mode(n));
    return s;
}

/// Minimum over y of the N-mode Green function for each (t, N), tested
/// against -eps(N).
inline std::vector<GreenCheck> check_green_nonneg(const EigenSystem& es, std::size_t x_index, FractionalOrder alpha,
                                                  std::span<const double> times, std::span<const std::size_t> modes) {
    std::vector<GreenCheck> out;
    for (double t : times)
        for (std::size_t n : modes) {
            const Field g = green_function(es, x_index, alpha, t, n);
            GreenCheck c{t, n, std::numeric_limits<double>::infinity(), 0.0, 0.0, false};
            for (std::size_t i = 0; i < g.size(); ++i)
                if (g[i] < c.min_value) {
                    c.min_value = g[i];
                    c.argmin_y = es.grid().node(i);
                }
            c.bound = green_truncation_bound(es, x_index, alpha, t, n);
            c.ok = c.min_value >= -c.bound;
            out.push_back(c);
        }
    return out;
}

}  // namespace fracdiff
