// fracdiff: batch front end. Every subcommand except `ml` reads a JSON config
// (embedded defaults < --config file < --<key> flags), writes the declared
// output files and prints a one-line JSON summary on stdout.
// Exit codes: 0 success, 1 solver failure, 2 bad configuration.

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "fracdiff/fracdiff.hpp"

namespace {

using namespace fracdiff;
using json = nlohmann::ordered_json;
constexpr double kPi = std::numbers::pi;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ------------------------------------------------------------ profiles

using Fn = std::function<double(double)>;

// Spatial profiles on (0, L).
Fn space_profile(const std::string& name, double length) {
    if (name == "zero") return [](double) { return 0.0; };
    if (name == "one") return [](double) { return 1.0; };
    if (name == "parabola") return [length](double x) { return x * (length - x) / (length * length); };
    if (name == "hat")
        return [length](double x) { return std::max(0.0, 1.0 - 4.0 * std::abs(x / length - 0.5)); };
    if (name.rfind("sin:", 0) == 0) {
        int k = 0;
        try {
            k = std::stoi(name.substr(4));
        } catch (const std::exception&) {
        }
        if (k < 1) throw ConfigError("profile '" + name + "': sin:k needs a positive integer k");
        return [k, length](double x) { return std::sin(k * kPi * x / length); };
    }
    throw ConfigError("unknown spatial profile '" + name + "' (zero, one, parabola, hat, sin:k)");
}

struct TimeProfile {
    Fn f, df;
};

TimeProfile time_profile(const std::string& name) {
    static const std::map<std::string, TimeProfile> table{
        {"zero", {[](double) { return 0.0; }, [](double) { return 0.0; }}},
        {"one", {[](double) { return 1.0; }, [](double) { return 0.0; }}},
        {"t", {[](double t) { return t; }, [](double) { return 1.0; }}},
        {"1+t", {[](double t) { return 1.0 + t; }, [](double) { return 1.0; }}},
        {"1+t^2", {[](double t) { return 1.0 + t * t; }, [](double t) { return 2.0 * t; }}},
        {"1.5+sin(pi t)",
         {[](double t) { return 1.5 + std::sin(kPi * t); }, [](double t) { return kPi * std::cos(kPi * t); }}},
        {"2+sin(5t)", {[](double t) { return 2.0 + std::sin(5.0 * t); }, [](double t) { return 5.0 * std::cos(5.0 * t); }}},
    };
    const auto it = table.find(name);
    if (it == table.end()) {
        std::string names;
        for (const auto& [k, v] : table) names += (names.empty() ? "" : ", ") + k;
        throw ConfigError("unknown time profile '" + name + "' (" + names + ")");
    }
    return it->second;
}

// --------------------------------------------------------------- config

const std::map<std::string, json>& defaults() {
    static const std::map<std::string, json> d{
        {"solve", json{{"alpha", 0.5},        {"L", 1.0},          {"N_x", 127},       {"M", 1000},
                       {"T", 1.0},            {"a", 1.0},          {"c", 0.0},         {"modes", 0},
                       {"method", "spectral"}, {"initial", "parabola"}, {"rho", "zero"}, {"g", "zero"},
                       {"output", ""},        {"eigen_output", ""}}},
        {"green", json{{"alpha", 0.5},
                       {"L", 1.0},
                       {"N_x", 127},
                       {"a", 1.0},
                       {"c", 0.0},
                       {"modes", 0},
                       {"x0", 0.5},
                       {"times", json::array({0.01, 0.1, 1.0})},
                       {"mode_counts", json::array({16, 64})},
                       {"output", ""}}},
        {"check", json{{"principle", "weak"}, {"alpha", 0.5},     {"L", 1.0},       {"N_x", 63},
                       {"M", 400},            {"T", 1.0},         {"a", 1.0},       {"c", 0.0},
                       {"modes", 0},          {"method", "spectral"}, {"initial", "parabola"}, {"rho", "zero"},
                       {"g", "zero"},         {"tolerance", "auto"}, {"report", ""}}},
        {"invert", json{{"alpha", 0.5},         {"L", 1.0},       {"N_x", 127},         {"M", 400},
                        {"T", 1.0},             {"g", "parabola"}, {"x0", 0.1},        {"rho_true", "1.5+sin(pi t)"},
                        {"data", "generated"},  {"noise_level", 0.0}, {"seed", 12345}, {"reg", "none"},
                        {"modes", 0},           {"output", ""}}},
        {"counterexample", json{{"alpha", 0.5},
                                {"N_x", 255},
                                {"M", 400},
                                {"T", 1.0},
                                {"modes", 0},
                                {"rho", "2+sin(5t)"},
                                {"rho_alt", "one"},
                                {"output", ""}}},
    };
    return d;
}

// Keys whose value may be either a string keyword or a number.
const std::set<std::string> kMixedKeys{"reg", "tolerance"};

bool same_kind(const json& a, const json& b) {
    if (a.is_number() && b.is_number()) return true;
    return a.type() == b.type();
}

void apply(json& cfg, const std::string& key, const json& value, const std::string& origin) {
    if (!cfg.contains(key)) throw ConfigError(origin + ": unknown field '" + key + "'");
    const json& def = cfg.at(key);
    const bool ok = kMixedKeys.count(key) ? (value.is_string() || value.is_number()) : same_kind(def, value);
    if (!ok) throw ConfigError(origin + ": field '" + key + "' has the wrong type (expected " + def.type_name() + ")");
    cfg[key] = value;
}

json parse_flag_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return text;
    }
}

// Typed getters with range checks that name the failing invariant.
double get_real(const json& cfg, const std::string& key) { return cfg.at(key).get<double>(); }

std::size_t get_count(const json& cfg, const std::string& key, std::size_t min_value) {
    const json& v = cfg.at(key);
    if (!v.is_number_integer() && !(v.is_number_float() && v.get<double>() == std::floor(v.get<double>())))
        throw ConfigError("field '" + key + "' must be an integer");
    const double d = v.get<double>();
    if (d < static_cast<double>(min_value))
        throw ConfigError("field '" + key + "' must be at least " + std::to_string(min_value));
    return static_cast<std::size_t>(d);
}

std::string get_string(const json& cfg, const std::string& key) { return cfg.at(key).get<std::string>(); }

FractionalOrder get_alpha(const json& cfg) {
    const double a = get_real(cfg, "alpha");
    if (!(a > 0.0 && a <= 1.0)) throw ConfigError("field 'alpha' must lie in (0, 1]");
    return FractionalOrder(a);
}

struct Space {
    Domain1D grid;
    SymTridiagonal matrix;
    double a, c;
};

Space make_space(const json& cfg) {
    const double length = cfg.contains("L") ? get_real(cfg, "L") : 1.0;
    if (!(length > 0.0)) throw ConfigError("field 'L' must be positive");
    const std::size_t nx = get_count(cfg, "N_x", 3);
    const double a = cfg.contains("a") ? get_real(cfg, "a") : 1.0;
    const double c = cfg.contains("c") ? get_real(cfg, "c") : 0.0;
    if (!(a > 0.0)) throw ConfigError("field 'a' must be positive (uniform ellipticity)");
    if (!(c >= 0.0)) throw ConfigError("field 'c' must be nonnegative");
    Domain1D grid(length, nx);
    return {grid, assemble_operator(grid, EllipticCoeffs::constant(grid, a, c)), a, c};
}

std::size_t mode_count(const json& cfg, const Domain1D& grid) {
    const std::size_t m = get_count(cfg, "modes", 0);
    if (m > grid.size()) throw ConfigError("field 'modes' exceeds N_x");
    return m == 0 ? default_mode_count(grid) : m;
}

TimeGrid make_times(const json& cfg) {
    const double horizon = get_real(cfg, "T");
    if (!(horizon > 0.0)) throw ConfigError("field 'T' must be positive");
    return TimeGrid(horizon, get_count(cfg, "M", 1));
}

std::size_t node_index(const Domain1D& grid, double x, const std::string& key) {
    if (!(x > 0.0 && x < grid.length())) throw ConfigError("field '" + key + "' must lie strictly inside (0, L)");
    return grid.nearest_index(x);
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
    if (path.empty()) return;
    auto os = io::open_output(path);
    body(os);
}

// Exact JSON rendering of a double (shortest round-trip form).
json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// ------------------------------------------------------------- commands

SpaceTimeSolution forward(const json& cfg, const Space& sp, const EigenSystem& es, const Field& a, const SourceSpec* src,
                          FractionalOrder alpha, const TimeGrid& times) {
    const std::string method = get_string(cfg, "method");
    if (method == "l1") {
        return src ? l1_solve(sp.matrix, sp.grid, a, *src, alpha) : l1_solve(sp.matrix, sp.grid, a, alpha, times);
    }
    if (method != "spectral" && method != "duhamel")
        throw ConfigError("field 'method' must be spectral, duhamel or l1");
    auto sol = solve_homogeneous(es, a, alpha, times);
    if (src) sol += method == "spectral" ? solve_source_spectral(es, *src, alpha) : solve_source_duhamel(es, *src, alpha);
    return sol;
}

struct Problem {
    Field a, g;
    std::optional<RhoProfile> rho;
};

Problem read_data(const json& cfg, const Space& sp, const TimeGrid& times) {
    Problem p;
    p.a = sp.grid.sample(space_profile(get_string(cfg, "initial"), sp.grid.length()));
    p.g = sp.grid.sample(space_profile(get_string(cfg, "g"), sp.grid.length()));
    const auto tp = time_profile(get_string(cfg, "rho"));
    if (max_abs(p.g) > 0.0 && get_string(cfg, "rho") != "zero") p.rho = RhoProfile::from_function(times, tp.f, tp.df);
    return p;
}

json cmd_solve(const json& cfg) {
    const auto alpha = get_alpha(cfg);
    const Space sp = make_space(cfg);
    const TimeGrid times = make_times(cfg);
    const EigenSystem es = discrete_eigensystem(sp.matrix, mode_count(cfg, sp.grid), sp.grid);
    const Problem p = read_data(cfg, sp, times);
    std::optional<SourceSpec> src;
    if (p.rho) src = SourceSpec{*p.rho, p.g};
    const auto sol = forward(cfg, sp, es, p.a, src ? &*src : nullptr, alpha, times);
    write_file(get_string(cfg, "output"), [&](std::ostream& os) { io::write_solution_csv(os, sol); });
    write_file(get_string(cfg, "eigen_output"), [&](std::ostream& os) { io::write_eigensystem_csv(os, es); });
    const auto last = sol.snapshot(times.steps());
    return {{"command", "solve"},
            {"method", get_string(cfg, "method")},
            {"modes", es.mode_count()},
            {"max_abs_u", num(max_abs(sol.values))},
            {"min_u", num(*std::min_element(sol.values.begin(), sol.values.end()))},
            {"max_abs_u_final", num(max_abs(last))}};
}

json cmd_green(const json& cfg) {
    const auto alpha = get_alpha(cfg);
    const Space sp = make_space(cfg);
    const std::size_t x_index = node_index(sp.grid, get_real(cfg, "x0"), "x0");
    std::vector<double> times;
    for (const auto& t : cfg.at("times")) {
        if (!t.is_number() || !(t.get<double>() > 0.0)) throw ConfigError("field 'times' must hold positive numbers");
        times.push_back(t.get<double>());
    }
    // the full expansion (every discrete mode unless capped) is the reference
    std::size_t full = get_count(cfg, "modes", 0);
    if (full > sp.grid.size()) throw ConfigError("field 'modes' exceeds N_x");
    if (full == 0) full = sp.grid.size();
    std::vector<std::size_t> counts;
    for (const auto& n : cfg.at("mode_counts")) {
        if (!n.is_number_integer() || n.get<long long>() < 1 || static_cast<std::size_t>(n.get<long long>()) > full)
            throw ConfigError("field 'mode_counts' must hold integers in [1, modes]");
        counts.push_back(static_cast<std::size_t>(n.get<long long>()));
    }
    const EigenSystem es = discrete_eigensystem(sp.matrix, full, sp.grid);
    const auto checks = check_green_nonneg(es, x_index, alpha, times, counts);
    write_file(get_string(cfg, "output"), [&](std::ostream& os) {
        std::vector<std::string> header{"y"};
        std::vector<std::vector<double>> cols{sp.grid.nodes()};
        for (double t : times) {
            header.push_back("G(t=" + io::fmt(t) + ")");
            cols.push_back(green_function(es, x_index, alpha, t));
        }
        io::write_table_csv(os, header, cols);
    });
    json list = json::array();
    bool all_ok = true;
    for (const auto& c : checks) {
        all_ok = all_ok && c.ok;
        list.push_back({{"t", c.t}, {"modes", c.modes}, {"min_value", num(c.min_value)}, {"argmin_y", c.argmin_y},
                        {"bound", num(c.bound)}, {"ok", c.ok}});
    }
    return {{"command", "green"}, {"x0", sp.grid.node(x_index)}, {"modes", full}, {"checks", list}, {"all_ok", all_ok}};
}

json cmd_check(const json& cfg) {
    const auto alpha = get_alpha(cfg);
    const Space sp = make_space(cfg);
    const TimeGrid times = make_times(cfg);
    // every discrete mode by default, so truncation does not blur the verdict
    std::size_t modes = get_count(cfg, "modes", 0);
    if (modes > sp.grid.size()) throw ConfigError("field 'modes' exceeds N_x");
    const EigenSystem es = discrete_eigensystem(sp.matrix, modes ? modes : sp.grid.size(), sp.grid);
    const Problem p = read_data(cfg, sp, times);
    std::optional<SourceSpec> src;
    if (p.rho) src = SourceSpec{*p.rho, p.g};
    const auto sol = forward(cfg, sp, es, p.a, src ? &*src : nullptr, alpha, times);

    // default tolerance: ten times the spectral truncation error of the data
    double tol = 0.0;
    const json& t = cfg.at("tolerance");
    if (t.is_string()) {
        if (t.get<std::string>() != "auto") throw ConfigError("field 'tolerance' must be a number or \"auto\"");
        const Field back = reconstruct(project(p.a, es), es);
        double trunc = 0.0;
        for (std::size_t i = 0; i < back.size(); ++i) trunc = std::max(trunc, std::abs(back[i] - p.a[i]));
        if (get_string(cfg, "method") == "l1") trunc = 0.0;
        tol = 10.0 * (trunc + 1e-13 * std::max(1.0, max_abs(p.a)));
    } else {
        tol = t.get<double>();
        if (!(tol >= 0.0)) throw ConfigError("field 'tolerance' must be nonnegative");
    }

    const std::string principle = get_string(cfg, "principle");
    PrincipleReport r;
    if (principle == "weak") {
        r = check_weak_mp(sol, tol, p.a, p.rho ? std::span<const double>(p.g) : std::span<const double>{},
                          p.rho ? std::span<const double>(p.rho->samples.values) : std::span<const double>{});
    } else if (principle == "strong") {
        r = check_zero_sets(sol, tol, p.a);
    } else if (principle == "strict") {
        r = check_strict_positivity(sol, tol, p.a);
    } else {
        throw ConfigError("field 'principle' must be weak, strong or strict");
    }
    json intervals = json::array();
    for (const auto& z : r.zero_intervals) intervals.push_back({z.lo, z.hi});
    std::size_t zero_count = 0;
    for (auto c : r.zero_count_per_x) zero_count += c;
    const json report{{"principle", r.principle},     {"min_value", num(r.min_value)},
                      {"argmin", {r.argmin_x, r.argmin_t}}, {"zero_intervals", intervals},
                      {"tolerance", r.tolerance},     {"violated", r.violated},
                      {"hypothesis_holds", r.hypothesis_holds}};
    write_file(get_string(cfg, "report"), [&](std::ostream& os) { os << report.dump(2) << '\n'; });
    return {{"command", "check"},         {"principle", r.principle},     {"violated", r.violated},
            {"hypothesis_holds", r.hypothesis_holds}, {"contradicts", r.contradicts()}, {"min_value", num(r.min_value)},
            {"tolerance", r.tolerance},   {"zero_intervals", zero_count}};
}

json cmd_invert(const json& cfg) {
    const auto alpha = get_alpha(cfg);
    const Space sp = make_space(cfg);
    const TimeGrid times = make_times(cfg);
    const Field g = sp.grid.sample(space_profile(get_string(cfg, "g"), sp.grid.length()));
    const std::size_t x0 = node_index(sp.grid, get_real(cfg, "x0"), "x0");
    const InverseSetup setup{sp.grid, sp.matrix, times, alpha, g, x0};

    const double noise = get_real(cfg, "noise_level");
    if (!(noise >= 0.0)) throw ConfigError("field 'noise_level' must be nonnegative");
    const auto seed = static_cast<std::uint64_t>(get_count(cfg, "seed", 0));
    const auto tp = time_profile(get_string(cfg, "rho_true"));
    const auto rho_true = RhoProfile::from_function(times, tp.f, tp.df);

    const std::string source = get_string(cfg, "data");
    TimeSeries data = TimeSeries::on_nodes(times, std::vector<double>(times.size(), 0.0));
    if (source == "generated") {
        data = generate_data(setup, rho_true, noise, seed);
    } else if (source != "zero") {
        throw ConfigError("field 'data' must be generated or zero");
    }

    Regularization reg;
    const json& rj = cfg.at("reg");
    if (rj.is_number()) {
        if (!(rj.get<double>() >= 0.0)) throw ConfigError("field 'reg' must be nonnegative");
        reg = rj.get<double>() > 0.0 ? Regularization::fixed(rj.get<double>()) : Regularization::none();
    } else if (rj.get<std::string>() == "auto") {
        if (!(noise > 0.0)) throw ConfigError("reg = \"auto\" (discrepancy principle) needs noise_level > 0");
        reg = Regularization::discrepancy(noise);
    } else if (rj.get<std::string>() != "none") {
        throw ConfigError("field 'reg' must be a number, \"none\" or \"auto\"");
    }

    const std::size_t modes = get_count(cfg, "modes", 0);
    if (modes > sp.grid.size()) throw ConfigError("field 'modes' exceeds N_x");
    const auto r = run_inversion({setup, data, reg, modes ? std::optional<std::size_t>(modes) : std::nullopt});

    write_file(get_string(cfg, "output"), [&](std::ostream& os) {
        os << "t,rho_true,rho_hat,mu_hat\n";
        for (std::size_t j = 0; j < times.size(); ++j) {
            const double truth = source == "zero" ? 0.0 : rho_true.samples[j];
            os << io::fmt(times[j]) << ',' << io::fmt(truth) << ',' << io::fmt(r.rho_hat[j]) << ','
               << (j ? io::fmt(r.mu_hat[j - 1]) : "nan") << '\n';
        }
    });
    json out{{"command", "invert"},
             {"data", source},
             {"x0", sp.grid.node(x0)},
             {"rho_max_abs", num(max_abs(r.rho_hat.values))},
             {"regularization_parameter", num(r.regularization_parameter)},
             {"residual", num(r.residual)},
             {"noise_floor", num(r.noise_floor)}};
    if (source == "generated") {
        double num2 = 0.0, den2 = 0.0;
        for (std::size_t j = 0; j < times.size(); ++j) {
            num2 += std::pow(r.rho_hat[j] - rho_true.samples[j], 2);
            den2 += std::pow(rho_true.samples[j], 2);
        }
        out["relative_l2_error"] = num(den2 > 0.0 ? std::sqrt(num2 / den2) : std::sqrt(num2));
    }
    return out;
}

json cmd_counterexample(const json& cfg) {
    // g = sin(2 pi x) on (0, 1) observed at x = 1/2: every rho gives the same
    // (zero) trace, so the single-point observation cannot identify rho.
    const auto alpha = get_alpha(cfg);
    const std::size_t nx = get_count(cfg, "N_x", 3);
    if (nx % 2 == 0) throw ConfigError("field 'N_x' must be odd so that x = 1/2 is a grid node");
    Domain1D grid(1.0, nx);
    const auto matrix = assemble_operator(grid, EllipticCoeffs::constant(grid));
    const TimeGrid times = make_times(cfg);
    std::size_t modes = get_count(cfg, "modes", 0);
    if (modes > nx) throw ConfigError("field 'modes' exceeds N_x");
    if (modes == 0) modes = default_mode_count(grid);
    const EigenSystem es = discrete_eigensystem(matrix, modes, grid);
    const Field g = grid.sample([](double x) { return std::sin(2.0 * kPi * x); });
    const std::size_t half = nx / 2;
    const Field zero(nx, 0.0);

    auto run = [&](const std::string& name) {
        const auto tp = time_profile(name);
        const SourceSpec src{RhoProfile::from_function(times, tp.f, tp.df), g};
        return std::pair{solve_source_duhamel(es, src, alpha), l1_solve(matrix, grid, zero, src, alpha)};
    };
    const auto [spec1, l1a] = run(get_string(cfg, "rho"));
    const auto [spec2, l1b] = run(get_string(cfg, "rho_alt"));
    const auto tr1 = spec1.trace(half), tr2 = spec2.trace(half), trl = l1a.trace(half);

    double gap = 0.0, rho_gap = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) gap = std::max(gap, std::abs(tr1[j] - tr2[j]));
    const auto f1 = time_profile(get_string(cfg, "rho")).f, f2 = time_profile(get_string(cfg, "rho_alt")).f;
    for (std::size_t j = 0; j < times.size(); ++j) rho_gap = std::max(rho_gap, std::abs(f1(times[j]) - f2(times[j])));

    write_file(get_string(cfg, "output"), [&](std::ostream& os) {
        io::write_table_csv(os, {"t", "u_half", "u_half_alt", "u_half_l1", "u_quarter"},
                            {times.nodes(), tr1.values, tr2.values, trl.values, spec1.trace(grid.nearest_index(0.25)).values});
    });
    // identifiable only if distinct sources leave distinguishable traces
    const bool uniqueness = rho_gap > 0.0 && gap > 1e-8;
    return {{"command", "counterexample"},
            {"max_abs_u_at_half", num(max_abs(tr1.values))},
            {"l1_max_abs_u_at_half", num(max_abs(trl.values))},
            {"max_abs_u", num(max_abs(spec1.values))},
            {"trace_gap", num(gap)},
            {"rho_gap", num(rho_gap)},
            {"uniqueness", uniqueness}};
}

// -------------------------------------------------------------------- ml

std::vector<double> parse_grid(const std::string& spec) {
    double lo = 0.0, hi = 0.0;
    long long n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(spec);
    if (!(is >> lo >> c1 >> hi >> c2 >> n) || c1 != ':' || c2 != ':' || !is.eof() || n < 1)
        throw ConfigError("--z-grid expects lo:hi:n with n >= 1, got '" + spec + "'");
    std::vector<double> z(static_cast<std::size_t>(n));
    for (long long k = 0; k < n; ++k) z[k] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    return z;
}

int run_ml(double alpha, double beta, const std::optional<double>& z, const std::string& grid) {
    if (z.has_value() == !grid.empty()) throw ConfigError("ml needs exactly one of --z and --z-grid");
    const auto zs = z ? std::vector<double>{*z} : parse_grid(grid);
    std::vector<double> values;
    for (double v : zs) values.push_back(ml::ml_eval(alpha, beta, v));
    std::cout << "z,value\n";
    for (std::size_t k = 0; k < zs.size(); ++k) std::cout << io::fmt(zs[k]) << ',' << io::fmt(values[k]) << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Time-fractional diffusion: forward solvers, maximum-principle checks, inverse source recovery"};
    app.require_subcommand(1);

    double ml_alpha = 0.5, ml_beta = 1.0;
    std::optional<double> ml_z;
    std::string ml_grid;
    auto* ml = app.add_subcommand("ml", "Evaluate the Mittag-Leffler function E_{alpha,beta}(z), z <= 0");
    ml->add_option("--alpha", ml_alpha, "order in (0, 2)")->required();
    ml->add_option("--beta", ml_beta, "second parameter")->capture_default_str();
    ml->add_option("--z", ml_z, "argument");
    ml->add_option("--z-grid", ml_grid, "lo:hi:n evenly spaced arguments");

    struct Command {
        CLI::App* app;
        std::string config_path;
        bool show = false;
        std::map<std::string, std::string> flags;
    };
    const std::map<std::string, std::string> blurbs{
        {"solve", "Forward solve (spectral, duhamel or l1) and write the space-time solution"},
        {"green", "Green function at a node and its truncated nonnegativity check"},
        {"check", "Weak maximum principle, zero sets or strict positivity of a solution"},
        {"invert", "Recover rho(t) from the trace u(x0, .)"},
        {"counterexample", "Source that leaves u(1/2, t) identically zero"},
    };
    std::map<std::string, Command> commands;
    for (const auto& [name, def] : defaults()) {
        Command& c = commands[name];
        c.app = app.add_subcommand(name, blurbs.at(name));
        c.app->add_option("--config", c.config_path, "JSON config file");
        c.app->add_flag("--show-config", c.show, "print the effective config and exit");
        for (const auto& [key, value] : def.items())
            c.app->add_option("--" + key, c.flags[key], "override '" + key + "' (default " + value.dump() + ")");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (ml->parsed()) return run_ml(ml_alpha, ml_beta, ml_z, ml_grid);
        for (auto& [name, c] : commands) {
            if (!c.app->parsed()) continue;
            json cfg = defaults().at(name);
            if (!c.config_path.empty()) {
                std::ifstream is(c.config_path);
                if (!is) throw ConfigError("cannot read config file '" + c.config_path + "'");
                json file;
                try {
                    file = json::parse(is);
                } catch (const json::parse_error& e) {
                    throw ConfigError("config file '" + c.config_path + "' is not valid JSON: " + e.what());
                }
                if (!file.is_object()) throw ConfigError("config file '" + c.config_path + "' must hold a JSON object");
                for (const auto& [key, value] : file.items()) apply(cfg, key, value, c.config_path);
            }
            for (const auto& [key, text] : c.flags)
                if (c.app->count("--" + key)) apply(cfg, key, parse_flag_value(text), "--" + key);
            if (c.show) {
                std::cout << cfg.dump(2) << '\n';
                return 0;
            }
            json summary;
            if (name == "solve") summary = cmd_solve(cfg);
            else if (name == "green") summary = cmd_green(cfg);
            else if (name == "check") summary = cmd_check(cfg);
            else if (name == "invert") summary = cmd_invert(cfg);
            else summary = cmd_counterexample(cfg);
            std::cout << summary.dump() << '\n';
            return 0;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
