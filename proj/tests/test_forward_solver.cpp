#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fracdiff/forward_solver.hpp"
#include "fracdiff/l1_oracle.hpp"
#include "fracdiff/quadrature.hpp"

namespace {

using namespace fracdiff;
constexpr double kPi = std::numbers::pi;

double parabola(double x) { return x * (1.0 - x); }

struct Laplacian {
    Domain1D grid;
    SymTridiagonal matrix;
    EigenSystem es;

    Laplacian(std::size_t points, std::size_t modes)
        : grid(1.0, points),
          matrix(assemble_operator(grid, EllipticCoeffs::constant(grid))),
          es(discrete_eigensystem(matrix, modes, grid)) {}
};

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
    return m;
}

// ------------------------------------------------- product integration

TEST(ProductIntegration, PowDiffIsAccurateForCloseArguments) {
    // 1 + 1e-12 is not representable; use the stored gap d, (1+d)^0.5 - 1 = d/2 - d^2/8 + ...
    const double d = (1.0 + 1e-12) - 1.0;
    EXPECT_NEAR(prodint::pow_diff(1.0 + d, 1.0, 0.5), 0.5 * d - 0.125 * d * d, 1e-27);
    EXPECT_NEAR(prodint::pow_diff(2.0, 1.0, 0.5), std::sqrt(2.0) - 1.0, 2.3e-16);
    EXPECT_EQ(prodint::pow_diff(3.0, 0.0, 0.5), std::sqrt(3.0));
}

TEST(ProductIntegration, LinearWeightsAreExactOnLines) {
    for (double gamma : {-0.5, -0.2, 0.3, 0.5}) {
        const double lo = 0.7, hi = 1.9;
        const auto [w_hi, w_lo] = prodint::linear_weights(lo, hi, gamma);
        // f(r) = 2 + 3 r
        auto f = [](double r) { return 2.0 + 3.0 * r; };
        const auto q = quad::integrate([&](double r) { return f(r) * std::pow(r, gamma); }, {lo, hi});
        EXPECT_NEAR(w_hi * f(hi) + w_lo * f(lo), q.value, 1e-13) << gamma;
        EXPECT_NEAR(prodint::constant_weight(lo, hi, gamma), (std::pow(hi, gamma + 1) - std::pow(lo, gamma + 1)) / (gamma + 1),
                    1e-14);
    }
}

TEST(ProductIntegration, SplineDerivativeIsFourthOrderAccurate) {
    std::vector<double> err;
    for (std::size_t m : {50u, 100u, 200u}) {
        TimeGrid grid(2.0, m);
        std::vector<double> y(grid.size());
        for (std::size_t j = 0; j < y.size(); ++j) y[j] = std::sin(3.0 * grid[j]);
        const auto d = prodint::spline_derivative(y, grid.dt());
        double e = 0.0;
        for (std::size_t j = 0; j < d.size(); ++j) e = std::max(e, std::abs(d[j] - 3.0 * std::cos(3.0 * grid[j])));
        err.push_back(e);
    }
    EXPECT_NEAR(std::log2(err[0] / err[1]), 4.0, 0.5);
    EXPECT_NEAR(std::log2(err[1] / err[2]), 4.0, 0.5);
    EXPECT_LT(err[2], 1e-5);
}

TEST(RhoProfile, ExplicitDerivativeIsKept) {
    TimeGrid grid(1.0, 10);
    const auto r = RhoProfile::from_function(grid, [](double t) { return t * t; }, [](double t) { return 2.0 * t; });
    EXPECT_DOUBLE_EQ(r.derivative[5], 1.0);
    EXPECT_DOUBLE_EQ(r.samples[10], 1.0);
}

// ---------------------------------------------------------- homogeneous

TEST(SolveHomogeneous, SingleModeEvolvesByMittagLeffler) {
    Laplacian p(127, 16);
    const double alpha = 0.5, lambda = p.es.eigenvalue(0);
    // t with lambda t^alpha = 1 is the final grid time
    TimeGrid times(std::pow(1.0 / lambda, 1.0 / alpha), 4);
    const Field a(p.es.mode(0).begin(), p.es.mode(0).end());
    const auto u = solve_homogeneous(p.es, a, FractionalOrder(alpha), times);
    const double expected = std::exp(1.0) * std::erfc(1.0);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(u(i, 4), expected * a[i], 1e-12);
}

TEST(SolveHomogeneous, InitialTimeReturnsProjection) {
    Laplacian p(63, 63);
    const auto a = p.grid.sample([](double x) { return std::exp(x) * parabola(x); });
    const auto u = solve_homogeneous(p.es, a, FractionalOrder(0.5), TimeGrid(1.0, 4));
    EXPECT_LT(max_abs_diff(u.snapshot(0), a), 1e-12);
}

TEST(SolveHomogeneous, ClassicalLimitIsHeatEquation) {
    Laplacian p(63, 8);
    const Field a(p.es.mode(2).begin(), p.es.mode(2).end());
    const auto u = solve_homogeneous(p.es, a, FractionalOrder(1.0), TimeGrid(0.05, 5));
    const double decay = std::exp(-p.es.eigenvalue(2) * 0.05);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(u(i, 5), decay * a[i], 1e-14);
}

TEST(SolveHomogeneous, AgreesWithL1Oracle) {
    Laplacian p(255, default_mode_count(Domain1D(1.0, 255)));
    const auto a = p.grid.sample(parabola);
    const TimeGrid times(0.1, 2000);
    const FractionalOrder alpha(0.5);
    const auto spectral = solve_homogeneous(p.es, a, alpha, TimeGrid(0.1, 1));
    const auto oracle = l1_solve(p.matrix, p.grid, a, alpha, times);
    const double err = max_abs_diff(spectral.snapshot(1), oracle.snapshot(2000)) / max_abs(spectral.snapshot(1));
    EXPECT_LT(err, 1e-2);
}

TEST(HomogeneousTrace, MatchesFullSolve) {
    Laplacian p(63, 15);
    const auto a = p.grid.sample(parabola);
    const TimeGrid times(1.0, 8);
    const auto u = solve_homogeneous(p.es, a, FractionalOrder(0.7), times);
    const auto tr = homogeneous_trace(p.es, a, FractionalOrder(0.7), 20, times.nodes());
    for (std::size_t j = 0; j < times.size(); ++j) EXPECT_NEAR(tr[j], u(20, j), 1e-15);
}

// --------------------------------------------------------------- green

TEST(GreenFunction, ReproducesHomogeneousSolution) {
    Laplacian p(127, 31);
    const auto a = p.grid.sample([](double x) { return parabola(x) * (1.0 + std::sin(5.0 * x)); });
    const FractionalOrder alpha(0.5);
    const double t = 0.2;
    const auto u = solve_homogeneous(p.es, a, alpha, TimeGrid(t, 1));
    for (std::size_t x : {5u, 40u, 63u, 120u}) {
        const auto g = green_function(p.es, x, alpha, t);
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += p.grid.h() * g[i] * a[i];
        EXPECT_NEAR(s, u(x, 1), 1e-10);
    }
}

TEST(GreenFunction, IsSymmetric) {
    Laplacian p(63, 63);
    const FractionalOrder alpha(0.4);
    std::vector<Field> rows;
    for (std::size_t x = 0; x < 63; ++x) rows.push_back(green_function(p.es, x, alpha, 0.05));
    for (std::size_t x = 0; x < 63; ++x)
        for (std::size_t y = 0; y < 63; ++y) EXPECT_NEAR(rows[x][y], rows[y][x], 1e-12 * max_abs(rows[x]));
}

TEST(GreenFunction, HeatKernelSpotValue) {
    Domain1D g(1.0, 255);
    const auto es = analytic_eigensystem(1.0, 63, g);
    double series = 0.0;
    for (int n = 1; n <= 200; ++n) {
        const double s = std::sin(n * kPi / 2.0);
        series += 2.0 * std::exp(-n * n * kPi * kPi * 0.1) * s * s;
    }
    const auto gf = green_function(es, g.nearest_index(0.5), FractionalOrder(1.0), 0.1);
    EXPECT_NEAR(gf[g.nearest_index(0.5)], series, 1e-12);
    EXPECT_NEAR(gf[g.nearest_index(0.5)], 0.745693231, 1e-9);
}

TEST(GreenFunction, HeatKernelOffDiagonal) {
    Domain1D g(1.0, 127);
    const auto es = analytic_eigensystem(1.0, 63, g);
    const auto gf = green_function(es, 31, FractionalOrder(1.0), 0.02);
    for (std::size_t y : {0u, 20u, 63u, 100u}) {
        double series = 0.0;
        for (int n = 1; n <= 300; ++n)
            series += 2.0 * std::exp(-n * n * kPi * kPi * 0.02) * std::sin(n * kPi * g.node(31)) * std::sin(n * kPi * g.node(y));
        EXPECT_NEAR(gf[y], series, 1e-12);
    }
}

TEST(GreenFunction, RejectsNonPositiveTime) {
    Laplacian p(31, 4);
    EXPECT_THROW(green_function(p.es, 3, FractionalOrder(0.5), 0.0), std::invalid_argument);
    EXPECT_THROW(green_function(p.es, 3, FractionalOrder(0.5), 0.1, 5), std::invalid_argument);
}

// ------------------------------------------------------------ duhamel mu

TEST(DuhamelMu, ConstantRho) {
    const double alpha = 0.5;
    TimeGrid grid(1.0, 200);
    const auto rho = RhoProfile::from_function(grid, [](double) { return 1.0; }, [](double) { return 0.0; });
    const auto mu = duhamel_mu(rho, FractionalOrder(alpha));
    ASSERT_EQ(mu.size(), 200u);
    for (std::size_t j = 1; j <= 200; ++j) {
        const double avg = (std::pow(grid[j], alpha) - std::pow(grid[j - 1], alpha)) / (std::tgamma(alpha + 1.0) * grid.dt());
        EXPECT_NEAR(mu[j - 1], avg, 1e-12 * avg);
    }
    for (double t : {1e-4, 0.013, 0.5, 1.0})
        EXPECT_NEAR(duhamel_mu_at(rho, FractionalOrder(alpha), t), std::pow(t, alpha - 1.0) / std::tgamma(alpha), 1e-12 * std::pow(t, alpha - 1.0));
}

TEST(DuhamelMu, LinearRho) {
    for (double alpha : {0.3, 0.5, 0.8}) {
        TimeGrid grid(1.0, 100);
        const auto rho = RhoProfile::from_function(grid, [](double t) { return t; }, [](double) { return 1.0; });
        const auto mu = duhamel_mu(rho, FractionalOrder(alpha));
        for (std::size_t j = 1; j <= 100; ++j) {
            const double avg = (std::pow(grid[j], alpha + 1) - std::pow(grid[j - 1], alpha + 1)) / (std::tgamma(alpha + 2) * grid.dt());
            EXPECT_NEAR(mu[j - 1], avg, 1e-13);
        }
        for (double t : {0.005, 0.37, 1.0})
            EXPECT_NEAR(duhamel_mu_at(rho, FractionalOrder(alpha), t), std::pow(t, alpha) / std::tgamma(alpha + 1), 1e-13);
    }
}

TEST(DuhamelMu, SingularityBound) {
    // |mu(t)| t^{1 - alpha} stays bounded as t -> 0
    const double alpha = 0.4;
    TimeGrid grid(1.0, 400);
    const auto rho = RhoProfile::from_function(grid, [](double t) { return 1.0 + std::sin(4.0 * t); });
    double c = 0.0;
    for (double t = 1e-6; t <= 1.0; t *= 1.5) c = std::max(c, std::abs(duhamel_mu_at(rho, FractionalOrder(alpha), t)) * std::pow(t, 1.0 - alpha));
    EXPECT_LT(c, 5.0);
    EXPECT_NEAR(duhamel_mu_at(rho, FractionalOrder(alpha), 1e-8) * std::pow(1e-8, 1.0 - alpha), 1.0 / std::tgamma(alpha), 1e-3);
}

TEST(DuhamelMu, CellAveragesMatchPointwiseMean) {
    const double alpha = 0.6;
    TimeGrid grid(1.0, 50);
    const auto rho = RhoProfile::from_function(grid, [](double t) { return 1.0 + t * t; }, [](double t) { return 2.0 * t; });
    const auto mu = duhamel_mu(rho, FractionalOrder(alpha));
    for (std::size_t j : {2u, 10u, 50u}) {
        const auto q = quad::integrate([&](double t) { return duhamel_mu_at(rho, FractionalOrder(alpha), t); },
                                       {grid[j - 1], grid[j]}, {1e-14, 1e-14, 400});
        EXPECT_NEAR(mu[j - 1], q.value / grid.dt(), 1e-10);
    }
}

// --------------------------------------------------------- source solvers

TEST(SolveSource, ZeroRhoGivesZero) {
    Laplacian p(31, 7);
    TimeGrid grid(1.0, 20);
    SourceSpec src{RhoProfile::from_function(grid, [](double) { return 0.0; }), p.grid.sample(parabola)};
    for (const auto& u : {solve_source_duhamel(p.es, src, FractionalOrder(0.5)), solve_source_spectral(p.es, src, FractionalOrder(0.5))})
        EXPECT_EQ(max_abs(u.values), 0.0);
}

TEST(SolveSource, DuhamelMatchesSpectral) {
    Laplacian p(127, 31);
    TimeGrid grid(1.0, 1000);
    for (double alpha : {0.5, 0.8}) {
        SourceSpec src{RhoProfile::from_function(grid, [](double t) { return 1.0 + t * t; }, [](double t) { return 2.0 * t; }),
                       p.grid.sample(parabola)};
        const auto a = solve_source_duhamel(p.es, src, FractionalOrder(alpha));
        const auto b = solve_source_spectral(p.es, src, FractionalOrder(alpha));
        EXPECT_LT(max_abs_diff(a.values, b.values), 1e-6) << alpha;
        EXPECT_EQ(max_abs(a.snapshot(0)), 0.0);
    }
}

TEST(SolveSource, DuhamelMatchesL1Oracle) {
    Laplacian p(255, 63);
    TimeGrid grid(1.0, 2000);
    Field g(p.grid.size());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = p.es.phi(0, i) + p.es.phi(1, i);
    SourceSpec src{RhoProfile::from_function(grid, [](double t) { return 1.0 + t; }, [](double) { return 1.0; }), g};
    const FractionalOrder alpha(0.5);
    const auto a = solve_source_duhamel(p.es, src, alpha);
    const auto b = l1_solve(p.matrix, p.grid, Field(g.size(), 0.0), src, alpha);
    EXPECT_LT(max_abs_diff(a.values, b.values) / max_abs(a.values), 1e-2);
}

TEST(SolveSource, CounterexampleVanishesAtMidpoint) {
    Domain1D grid(1.0, 255);
    const std::size_t mid = grid.nearest_index(0.5);
    ASSERT_DOUBLE_EQ(grid.node(mid), 0.5);
    const auto g = grid.sample([](double x) { return std::sin(2.0 * kPi * x); });
    TimeGrid times(1.0, 400);
    for (auto rho_fn : {std::function<double(double)>([](double) { return 1.0; }),
                        std::function<double(double)>([](double t) { return std::exp(t) * std::cos(7.0 * t); })}) {
        SourceSpec src{RhoProfile::from_function(times, rho_fn), g};
        const auto es_a = analytic_eigensystem(1.0, 63, grid);
        const auto es_d = discrete_eigensystem(assemble_operator(grid, EllipticCoeffs::constant(grid)), 63, grid);
        for (const auto* es : {&es_a, &es_d}) {
            const auto u = solve_source_spectral(*es, src, FractionalOrder(0.5));
            EXPECT_LT(max_abs(u.trace(mid).values), 1e-12);
            EXPECT_GT(max_abs(u.values), 1e-3);
        }
    }
}

TEST(SolveSource, ClassicalSingleModeLimit) {
    Laplacian p(63, 8);
    TimeGrid grid(0.5, 50);
    const Field g(p.es.mode(0).begin(), p.es.mode(0).end());
    SourceSpec src{RhoProfile::from_function(grid, [](double) { return 1.0; }), g};
    const auto u = solve_source_spectral(p.es, src, FractionalOrder(1.0));
    const double lambda = p.es.eigenvalue(0);
    for (std::size_t j = 0; j <= 50; ++j) {
        const double amp = (1.0 - std::exp(-lambda * grid[j])) / lambda;
        EXPECT_NEAR(u(10, j), amp * g[10], 1e-13);
    }
}

TEST(ModeSourceResponse, ZeroEigenvalueIsFractionalIntegral) {
    const double alpha = 0.5;
    TimeGrid grid(1.0, 400);
    std::vector<double> one(grid.size(), 1.0), lin(grid.size());
    for (std::size_t j = 0; j < lin.size(); ++j) lin[j] = grid[j];
    const auto r1 = mode_source_response(0.0, FractionalOrder(alpha), TimeSeries::on_nodes(grid, one));
    const auto r2 = mode_source_response(0.0, FractionalOrder(alpha), TimeSeries::on_nodes(grid, lin));
    for (std::size_t j = 0; j <= 400; j += 40) {
        EXPECT_NEAR(r1[j], std::pow(grid[j], alpha) / std::tgamma(alpha + 1), 1e-13);
        EXPECT_NEAR(r2[j], std::pow(grid[j], alpha + 1) / std::tgamma(alpha + 2), 1e-13);
    }
}

TEST(ModeSourceResponse, ZeroEigenvalueMatchesIntegratedMu) {
    // Summing the cell averages of mu gives I^alpha rho at the nodes.
    const double alpha = 0.5;
    TimeGrid grid(1.0, 2000);
    const auto rho = RhoProfile::from_function(grid, [](double t) { return 1.0 + t * t; }, [](double t) { return 2.0 * t; });
    const auto mu = duhamel_mu(rho, FractionalOrder(alpha));
    const auto frac = mode_source_response(0.0, FractionalOrder(alpha), rho.samples);
    double acc = 0.0, err = 0.0;
    for (std::size_t j = 1; j <= 2000; ++j) {
        acc += mu[j - 1] * grid.dt();
        err = std::max(err, std::abs(acc - frac[j]));
    }
    EXPECT_LT(err, 1e-6);
}

TEST(ModeSourceResponse, RejectsNegativeEigenvalue) {
    TimeGrid grid(1.0, 4);
    EXPECT_THROW(mode_source_response(-1.0, FractionalOrder(0.5), TimeSeries::on_nodes(grid, std::vector<double>(5, 1.0))),
                 std::invalid_argument);
}

// ------------------------------------------------------------ properties

TEST(ForwardProperties, DecayEstimateStableUnderRefinement) {
    const FractionalOrder alpha(0.5);
    TimeGrid times(1.0, 200);
    std::vector<double> c0, c2;
    for (std::size_t nx : {63u, 127u, 255u}) {
        Laplacian p(nx, default_mode_count(Domain1D(1.0, nx)));
        double l2 = 0.0, h2 = 0.0;
        for (auto f : {std::function<double(double)>(parabola), std::function<double(double)>([](double x) { return std::sin(3.0 * kPi * x) + x * x * (1 - x); })}) {
            const auto a = p.grid.sample(f);
            const double na = l2_norm(a, p.grid);
            const auto u = solve_homogeneous(p.es, a, alpha, times);
            for (std::size_t j = 1; j < times.size(); ++j) {
                const auto snap = u.snapshot(j);
                l2 = std::max(l2, l2_norm(snap, p.grid) / na);
                h2 = std::max(h2, std::pow(times[j], alpha.value()) * l2_norm(p.matrix.multiply(snap), p.grid) / na);
            }
        }
        c0.push_back(l2);
        c2.push_back(h2);
    }
    for (std::size_t k = 0; k < c0.size(); ++k) {
        EXPECT_LE(c0[k], 1.0 + 1e-12);
        EXPECT_LT(c2[k], 10.0);
    }
    EXPECT_LT(std::abs(c0[2] / c0[1] - 1.0), 0.05);
    EXPECT_LT(std::abs(c2[2] / c2[1] - 1.0), 0.05);
}

TEST(ForwardProperties, LongTimeAsymptotics) {
    Laplacian p(127, 127);
    const auto a = p.grid.sample([](double x) { return parabola(x) * (1.0 + x); });
    const auto b = solve_shifted(p.matrix, 0.0, a);
    for (double alpha : {0.3, 0.5, 0.8}) {
        for (auto [t, tol] : {std::pair{1e3, 0.05}, std::pair{1e4, 0.005}}) {
            Field scaled(p.grid.size());
            const double factor = std::pow(t, alpha) * std::tgamma(1.0 - alpha);
            const std::vector<double> when{t};
            for (std::size_t i = 0; i < scaled.size(); ++i)
                scaled[i] = factor * homogeneous_trace(p.es, a, FractionalOrder(alpha), i, when)[0];
            EXPECT_LT(max_abs_diff(scaled, b) / max_abs(b), tol) << alpha << " " << t;
        }
    }
}

TEST(ForwardProperties, ChebyshevInterpolantOfTrace) {
    Laplacian p(127, 31);
    const auto a = p.grid.sample(parabola);
    const FractionalOrder alpha(0.5);
    const std::size_t x0 = p.grid.nearest_index(0.3);
    const double t0 = 0.1, t1 = 1.0;
    constexpr int degree = 30;
    std::vector<double> nodes(degree + 1), weights(degree + 1);
    for (int k = 0; k <= degree; ++k) {
        nodes[k] = 0.5 * (t0 + t1) + 0.5 * (t1 - t0) * std::cos(kPi * k / degree);
        weights[k] = (k % 2 ? -1.0 : 1.0) * (k == 0 || k == degree ? 0.5 : 1.0);
    }
    const auto values = homogeneous_trace(p.es, a, alpha, x0, nodes);
    auto interp = [&](double t) {
        double num = 0.0, den = 0.0;
        for (int k = 0; k <= degree; ++k) {
            const double w = weights[k] / (t - nodes[k]);
            num += w * values[k];
            den += w;
        }
        return num / den;
    };
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> pick(t0, t1);
    std::vector<double> probes(200);
    for (double& t : probes) t = pick(rng);
    const auto direct = homogeneous_trace(p.es, a, alpha, x0, probes);
    double err = 0.0;
    for (std::size_t k = 0; k < probes.size(); ++k) err = std::max(err, std::abs(interp(probes[k]) - direct[k]));
    EXPECT_LT(err, 1e-8);
}

TEST(SpaceTimeSolution, AdditionRequiresMatchingGrids) {
    SpaceTimeSolution a(Domain1D(1.0, 5), TimeGrid(1.0, 3), 0.5), b(Domain1D(1.0, 5), TimeGrid(1.0, 4), 0.5);
    EXPECT_THROW(a += b, std::invalid_argument);
    SpaceTimeSolution c(Domain1D(1.0, 5), TimeGrid(1.0, 3), 0.5);
    c.at(2, 1) = 3.0;
    a += c;
    EXPECT_EQ(a(2, 1), 3.0);
}

}  // namespace
