#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Run {
    int status;
    std::string out;  // stdout and stderr together
};

// Runs the CLI inside dir and captures its output and exit status.
Run cli(const std::string& args, const fs::path& dir = fs::temp_directory_path()) {
    const std::string cmd = "cd '" + dir.string() + "' && '" FRACDIFF_CLI_PATH "' " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return {-1, ""};
    std::string out;
    std::array<char, 4096> buf{};
    while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) out.append(buf.data(), n);
    const int raw = pclose(pipe);
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

json summary(const Run& r) {
    const auto line = r.out.substr(0, r.out.find('\n'));
    return json::parse(line);
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("fracdiff_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::string config(const std::string& name) { return std::string(FRACDIFF_CONFIG_DIR) + "/" + name; }

// ------------------------------------------------------------------ ml

TEST(CliMl, Exponential) {
    const auto r = cli("ml --alpha 1 --beta 1 --z -1");
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, "z,value\n-1,0.367879441171442\n");
}

TEST(CliMl, ScaledErfcAtMinusOne) {
    // e * erfc(1) = 0.42758357615580700...
    const auto r = cli("ml --alpha 0.5 --beta 1 --z -1");
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(r.out, "z,value\n-1,0.427583576155807\n");
}

TEST(CliMl, GridPrintsOneRowPerPoint) {
    const auto r = cli("ml --alpha 0.5 --z-grid -2:0:5");
    EXPECT_EQ(r.status, 0);
    EXPECT_EQ(std::count(r.out.begin(), r.out.end(), '\n'), 6);
    EXPECT_NE(r.out.find("\n0,1\n"), std::string::npos);
}

TEST(CliMl, OrderOutsideRangeIsConfigError) {
    const auto r = cli("ml --alpha 3 --beta 1 --z -1");
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.out.find("(0, 2)"), std::string::npos);
}

TEST(CliMl, PositiveArgumentIsRejected) { EXPECT_EQ(cli("ml --alpha 0.5 --z 1").status, 2); }

TEST(CliMl, NeedsExactlyOneArgumentForm) {
    EXPECT_EQ(cli("ml --alpha 0.5").status, 2);
    EXPECT_EQ(cli("ml --alpha 0.5 --z -1 --z-grid -1:0:3").status, 2);
    EXPECT_EQ(cli("ml --alpha 0.5 --z-grid -1:0").status, 2);
}

// -------------------------------------------------------------- config

TEST(CliConfig, UnknownFieldInFileIsRejected) {
    const auto dir = scratch("unknown");
    std::ofstream(dir / "c.json") << R"({"alpha": 0.5, "colour": "red"})";
    const auto r = cli("solve --config c.json", dir);
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.out.find("unknown field 'colour'"), std::string::npos);
}

TEST(CliConfig, UnknownFlagIsRejected) { EXPECT_EQ(cli("solve --colour red").status, 2); }

TEST(CliConfig, WrongTypeIsRejected) {
    const auto r = cli("solve --N_x fine");
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.out.find("N_x"), std::string::npos);
}

TEST(CliConfig, InvalidValuesNameTheInvariant) {
    auto r = cli("solve --alpha 1.5");
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.out.find("alpha"), std::string::npos);
    r = cli("invert --reg auto");
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.out.find("noise_level"), std::string::npos);
    EXPECT_EQ(cli("counterexample --N_x 128").status, 2);
    EXPECT_EQ(cli("solve --initial wobble").status, 2);
    EXPECT_EQ(cli("solve --config does_not_exist.json").status, 2);
}

TEST(CliConfig, ShowConfigMergesFileAndFlags) {
    const auto dir = scratch("show");
    std::ofstream(dir / "c.json") << R"({"alpha": 0.3, "M": 50})";
    const auto r = cli("solve --config c.json --M 70 --show-config", dir);
    ASSERT_EQ(r.status, 0);
    const auto cfg = json::parse(r.out);
    EXPECT_EQ(cfg["alpha"], 0.3);
    EXPECT_EQ(cfg["M"], 70);
    EXPECT_EQ(cfg["N_x"], 127);
}

// ------------------------------------------------------------ commands

TEST(CliCommands, CounterexampleDefaults) {
    const auto r = cli("counterexample");
    ASSERT_EQ(r.status, 0) << r.out;
    const auto s = summary(r);
    EXPECT_LT(s["max_abs_u_at_half"].get<double>(), 1e-8);
    EXPECT_EQ(s["uniqueness"], false);
    EXPECT_GT(s["max_abs_u"].get<double>(), 1e-2);
}

TEST(CliCommands, InvertOnZeroData) {
    const auto r = cli("invert --data zero");
    ASSERT_EQ(r.status, 0) << r.out;
    EXPECT_LT(summary(r)["rho_max_abs"].get<double>(), 1e-8);
}

TEST(CliCommands, WeakPrincipleHoldsForParabola) {
    const auto r = cli("check --principle weak --initial parabola");
    ASSERT_EQ(r.status, 0) << r.out;
    const auto s = summary(r);
    EXPECT_EQ(s["violated"], false);
    EXPECT_EQ(s["hypothesis_holds"], true);
}

TEST(CliCommands, SignChangingDataIsRecordedNotBlamed) {
    const auto s = summary(cli("check --principle weak --initial sin:2"));
    EXPECT_EQ(s["violated"], true);
    EXPECT_EQ(s["hypothesis_holds"], false);
    EXPECT_EQ(s["contradicts"], false);
}

TEST(CliCommands, UnidentifiableGeometryIsSolverError) {
    const auto r = cli("invert --g sin:2 --x0 0.5 --N_x 255");
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.out.find("not identifiable"), std::string::npos);
}

TEST(CliCommands, SolveWritesSolutionTable) {
    const auto dir = scratch("solve");
    const auto r = cli("solve --N_x 15 --M 20 --output u.csv --eigen_output eig.csv", dir);
    ASSERT_EQ(r.status, 0) << r.out;
    std::ifstream is(dir / "u.csv");
    std::string line;
    std::vector<std::string> rows;
    while (std::getline(is, line)) rows.push_back(line);
    ASSERT_EQ(rows.size(), 16u);
    EXPECT_EQ(std::count(rows[0].begin(), rows[0].end(), ','), 21);
    EXPECT_EQ(rows[0].rfind("x/t,0,0.05,", 0), 0u);
    EXPECT_EQ(rows[1].rfind("0.0625,", 0), 0u);
    EXPECT_TRUE(fs::exists(dir / "eig.csv"));
}

TEST(CliCommands, GreenReportsTruncationChecks) {
    const auto s = summary(cli("green --N_x 63 --mode_counts '[8,32]' --times '[0.1]'"));
    ASSERT_EQ(s["checks"].size(), 2u);
    EXPECT_EQ(s["checks"][0]["modes"], 8);
    EXPECT_EQ(s["all_ok"], true);
}

TEST(CliCommands, ShippedConfigsRun) {
    const auto dir = scratch("configs");
    for (const auto& [cmd, file] : std::vector<std::pair<std::string, std::string>>{
             {"solve", "solve.json"},
             {"green", "green.json"},
             {"check", "check_weak.json"},
             {"invert", "invert_noisy.json"},
             {"invert", "invert_zero.json"},
             {"counterexample", "counterexample.json"}}) {
        const auto r = cli(cmd + " --config '" + config(file) + "'", dir);
        EXPECT_EQ(r.status, 0) << file << ": " << r.out;
    }
}

TEST(CliCommands, NoisyInversionIsReproducible) {
    const auto a = scratch("repro_a"), b = scratch("repro_b");
    const auto ra = cli("invert --config '" + config("invert_noisy.json") + "'", a);
    const auto rb = cli("invert --config '" + config("invert_noisy.json") + "'", b);
    ASSERT_EQ(ra.status, 0);
    EXPECT_EQ(ra.out, rb.out);
    EXPECT_EQ(slurp(a / "invert_noisy.csv"), slurp(b / "invert_noisy.csv"));
    EXPECT_NE(cli("invert --config '" + config("invert_noisy.json") + "' --seed 7", a).out, ra.out);
}

}  // namespace
