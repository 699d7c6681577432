#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracdiff {

/// Raised when an iterative kernel (eigensolver, series, quadrature) fails
/// to reach its tolerance inside the iteration cap.
class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by a solver when the discrete problem cannot be solved as posed
/// (singular system, unidentifiable source).
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const std::string& what) {
    if (!ok) throw std::invalid_argument(what);
}

}  // namespace detail

/// Order of the Caputo time derivative. Admits (0, 1]; alpha = 1 is the
/// classical heat equation, kept for cross-checks.
class FractionalOrder {
public:
    explicit FractionalOrder(double alpha) : alpha_(alpha) {
        detail::require(std::isfinite(alpha) && alpha > 0.0 && alpha <= 1.0,
                        "fractional order alpha must lie in (0, 1], got " + std::to_string(alpha));
    }

    [[nodiscard]] double value() const noexcept { return alpha_; }
    [[nodiscard]] bool classical() const noexcept { return alpha_ == 1.0; }
    operator double() const noexcept { return alpha_; }

private:
    double alpha_;
};

/// Uniform time grid t_j = j * dt, j = 0..steps.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
        detail::require(std::isfinite(horizon) && horizon > 0.0, "time horizon T must be positive");
        detail::require(steps >= 1, "time grid needs at least one step");
    }

    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::size_t steps() const noexcept { return steps_; }
    [[nodiscard]] std::size_t size() const noexcept { return steps_ + 1; }
    [[nodiscard]] double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }
    [[nodiscard]] double operator[](std::size_t j) const noexcept {
        return j == steps_ ? horizon_ : static_cast<double>(j) * dt();
    }
    /// Midpoint of cell j = 1..steps, i.e. (j - 1/2) dt.
    [[nodiscard]] double midpoint(std::size_t j) const noexcept {
        return (static_cast<double>(j) - 0.5) * dt();
    }

    [[nodiscard]] std::vector<double> nodes() const {
        std::vector<double> t(size());
        for (std::size_t j = 0; j < t.size(); ++j) t[j] = (*this)[j];
        return t;
    }

    bool operator==(const TimeGrid& other) const noexcept {
        return steps_ == other.steps_ && horizon_ == other.horizon_;
    }

private:
    double horizon_;
    std::size_t steps_;
};

/// Real samples on the interior nodes of a spatial grid.
using Field = std::vector<double>;

/// Values attached to a time grid. Node series carry one value per grid
/// node; cell series carry one value per cell, located at the midpoints.
struct TimeSeries {
    enum class Location { nodes, cells };

    TimeGrid grid;
    Location location = Location::nodes;
    std::vector<double> values;

    TimeSeries(TimeGrid g, Location loc, std::vector<double> v)
        : grid(g), location(loc), values(std::move(v)) {
        const std::size_t expected = loc == Location::nodes ? grid.size() : grid.steps();
        detail::require(values.size() == expected, "time series length does not match its grid");
    }

    static TimeSeries on_nodes(TimeGrid g, std::vector<double> v) {
        return {g, Location::nodes, std::move(v)};
    }
    static TimeSeries on_cells(TimeGrid g, std::vector<double> v) {
        return {g, Location::cells, std::move(v)};
    }

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double time(std::size_t i) const noexcept {
        return location == Location::nodes ? grid[i] : grid.midpoint(i + 1);
    }
    double& operator[](std::size_t i) noexcept { return values[i]; }
    double operator[](std::size_t i) const noexcept { return values[i]; }
};

inline double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace fracdiff
