#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "pcweibull/io.hpp"

namespace fs = std::filesystem;
using pcweibull::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result call(std::vector<std::string> args) {
    std::ostringstream out;
    std::ostringstream err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

// rows of a CSV body, header dropped
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) {
            cells.push_back(c);
        }
        rows.push_back(cells);
    }
    return rows;
}

double num(const std::string& s) { return std::stod(s); }

class TempDir {
public:
    TempDir() {
        path_ = fs::temp_directory_path() /
                ("pcweibull_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    fs::path path_;
};

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

}  // namespace

TEST(CliPrior, QuantileAtHalfIsOne) {
    const Result r = call({"prior", "quantile", "--theta", "2.5", "--q", "0.5"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "q,alpha\n0.5,1\n");
}

TEST(CliPrior, CdfAtOneIsHalf) {
    const Result r = call({"prior", "cdf", "--theta", "2.5", "--alpha", "1.0"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(csv_rows(r.out)[0][1], "0.5");
}

TEST(CliPrior, SampleIsReproducible) {
    const std::vector<std::string> args = {"prior", "sample", "--theta", "2.5", "--n", "5", "--seed", "1"};
    const Result a = call(args);
    const Result b = call(args);
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(csv_rows(a.out).size(), 5u);
    const Result c = call({"prior", "sample", "--theta", "2.5", "--n", "5", "--seed", "2"});
    EXPECT_NE(a.out, c.out);
}

TEST(CliPrior, DensityGridAndTailSpecification) {
    const Result r = call({"prior", "density", "--U", "1", "--p", "0.0820849986", "--alpha-grid", "0.5:2:4"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0][0], "0.5");
    EXPECT_EQ(rows[3][0], "2");
    // p = exp(-2.5): same prior as --theta 2.5
    const Result same = call({"prior", "density", "--theta", "2.5", "--alpha-grid", "0.5:2:4"});
    EXPECT_EQ(r.out, same.out);
}

TEST(CliPrior, UsageErrors) {
    EXPECT_EQ(call({"prior", "density", "--alpha", "1"}).code, 2);
    EXPECT_EQ(call({"prior", "density", "--theta", "1", "--U", "1", "--p", "0.1", "--alpha", "1"}).code, 2);
    EXPECT_EQ(call({"prior", "density", "--theta", "1"}).code, 2);
    EXPECT_EQ(call({"prior", "sample", "--theta", "1", "--n", "5"}).code, 2);
    EXPECT_EQ(call({"prior", "median", "--theta", "1"}).code, 2);
    EXPECT_EQ(call({"prior", "quantile", "--theta", "-1", "--q", "0.5"}).code, 2);
    EXPECT_EQ(call({"prior", "quantile", "--theta", "1", "--q", "1.5"}).code, 2);
    EXPECT_EQ(call({"prior", "density", "--theta", "1", "--alpha-grid", "1:2"}).code, 2);
    EXPECT_EQ(call({"nonsense"}).code, 2);
    EXPECT_EQ(call({}).code, 2);
    EXPECT_EQ(call({"prior", "cdf", "--theta", "1", "--alpha", "1", "--bogus"}).code, 2);
}

TEST(CliPrior, HelpExitsZero) {
    const Result r = call({"--help"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("prior"), std::string::npos);
}

TEST(CliPrior, JsonAndPrecision) {
    const Result r = call({"prior", "cdf", "--theta", "2.5", "--alpha", "1.5", "--format", "json", "--precision", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j.size(), 1u);
    EXPECT_EQ(j[0]["alpha"], 1.5);
    const double v = j[0]["cdf"];
    EXPECT_EQ(pcweibull::format_number(v, 3), pcweibull::format_number(v));
}

TEST(CliDistance, Examples) {
    Result r = call({"distance", "to-alpha", "--d", "0.5", "--branch", "upper"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(num(csv_rows(r.out)[0][1]), 1.53, 0.01);
    EXPECT_EQ(csv_rows(r.out)[0][1].size(), 8u);  // six decimals
    r = call({"distance", "to-distance", "--alpha", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(csv_rows(r.out)[0][1], "0.000000");
    r = call({"distance", "to-alpha", "--d", "0.8", "--branch", "lower"});
    EXPECT_NEAR(num(csv_rows(r.out)[0][1]), 0.62, 0.01);
}

TEST(CliDistance, Errors) {
    const Result sat = call({"distance", "to-alpha", "--d", "1e100", "--branch", "lower"});
    EXPECT_EQ(sat.code, 1);
    EXPECT_NE(sat.err.find("floor"), std::string::npos);
    EXPECT_EQ(call({"distance", "to-alpha", "--d", "0.5"}).code, 2);
    EXPECT_EQ(call({"distance", "to-alpha", "--d", "0.5", "--branch", "middle"}).code, 2);
    EXPECT_EQ(call({"distance", "to-distance"}).code, 2);
    EXPECT_EQ(call({"distance", "to-distance", "--alpha", "0.001"}).code, 1);
}

TEST(CliTables, ScaleOneAndHalfRows) {
    const Result r = call({"tables", "--a", "1.5", "--convention", "scale", "--d", "0,0.1,0.5,0.8,1.45"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "distance,alpha_lower,dens_lower,alpha_upper,dens_upper");
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 5u);
    const double expect[5][4] = {{1.00, 0.315, 1.00, 0.315},
                                 {0.93, 0.319, 1.08, 0.311},
                                 {0.72, 0.322, 1.53, 0.274},
                                 {0.62, 0.320, 2.09, 0.220},
                                 {0.48, 0.309, 4.93, 0.051}};
    for (std::size_t i = 0; i < 5; ++i) {
        EXPECT_NEAR(num(rows[i][1]), expect[i][0], 0.01);
        EXPECT_NEAR(num(rows[i][2]), expect[i][1], 0.002);
        EXPECT_NEAR(num(rows[i][3]), expect[i][2], 0.01);
        EXPECT_NEAR(num(rows[i][4]), expect[i][3], 0.002);
    }
}

TEST(CliTables, ScaleOneTenthAndUnitExponential) {
    Result r = call({"tables", "--a", "0.1", "--convention", "scale", "--d", "1.45"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(num(csv_rows(r.out)[0][2]), 0.002, 0.001);
    r = call({"tables", "--a", "1", "--convention", "rate", "--d", "0"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(num(csv_rows(r.out)[0][2]), std::exp(-1.0), 1e-6);
    EXPECT_NEAR(num(csv_rows(r.out)[0][4]), std::exp(-1.0), 1e-6);
    EXPECT_EQ(call({"tables", "--a", "0"}).code, 2);
}

TEST(CliTables, DistanceScaleCurves) {
    const Result r = call({"tables", "--a", "1.5", "--convention", "scale", "--figure5", "--d-grid", "0:2:11"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto rows = csv_rows(r.out);
    ASSERT_EQ(rows.size(), 22u);
    EXPECT_EQ(rows[0][1], "lower");
    EXPECT_EQ(rows[11][1], "upper");
    // both branches start at pi(1) / |d'(1)|
    EXPECT_EQ(rows[0][2], rows[11][2]);
}

TEST(CliFit, SimulateThenFitCoversTruth) {
    TempDir dir;
    const std::string data = dir.file("sim.csv");
    Result r = call({"fit", "--simulate", "--alpha", "1", "--n", "200", "--seed", "3", "--out", data});
    ASSERT_EQ(r.code, 0) << r.err;
    r = call({"fit", "--data", data, "--prior", "pc", "--theta", "2.5", "--format", "json", "--out-dir",
              dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_LT(j["alpha"]["ci"][0].get<double>(), 1.0);
    EXPECT_GT(j["alpha"]["ci"][1].get<double>(), 1.0);
    EXPECT_TRUE(fs::exists(dir.path() / "posterior.json"));
    std::ifstream m(dir.path() / "marginal.csv");
    const auto marginal = pcweibull::read_marginal_csv(m);
    EXPECT_NEAR(pcweibull::trapezoid_mass(marginal), 1.0, 1e-4);
}

TEST(CliFit, BothEnginesAgree) {
    TempDir dir;
    const std::string data = dir.file("sim.csv");
    ASSERT_EQ(call({"fit", "--simulate", "--alpha", "1.4", "--beta", "0.2,0.5", "--n", "300", "--censor-rate",
                    "0.2", "--seed", "5", "--out", data})
                  .code,
              0);
    const Result r = call({"fit", "--data", data, "--engine", "both", "--format", "json", "--out-dir",
                           dir.path().string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["engine"], "both");
    EXPECT_LT(j["diagnostics"]["engine_gap"].get<double>(), 0.02);
    EXPECT_EQ(j["beta"].size(), 2u);
}

TEST(CliFit, SweepWritesTenMarginals) {
    TempDir dir;
    const std::string data = dir.file("sim.csv");
    ASSERT_EQ(call({"fit", "--simulate", "--alpha", "1.2", "--n", "150", "--seed", "8", "--out", data}).code, 0);
    const Result r = call({"fit", "--data", data, "--sweep-theta", "0.5,1,1.5,2,2.5,3,3.5,4,4.5,5", "--out-dir",
                           dir.file("sweep")});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(csv_rows(r.out).size(), 10u);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(dir.path() / "sweep")) {
        const std::string name = e.path().filename().string();
        if (name.rfind("marginal_theta_", 0) == 0) {
            ++files;
            std::ifstream f(e.path());
            EXPECT_NEAR(pcweibull::trapezoid_mass(pcweibull::read_marginal_csv(f)), 1.0, 1e-4) << name;
        }
    }
    EXPECT_EQ(files, 10u);
    EXPECT_TRUE(fs::exists(dir.path() / "sweep" / "marginal_theta_2.5.csv"));
    EXPECT_EQ(nlohmann::json::parse(slurp(dir.path() / "sweep" / "sweep.json")).size(), 10u);
}

TEST(CliFit, OutputDirectoryFromEnvironment) {
    TempDir dir;
    const std::string data = dir.file("sim.csv");
    ASSERT_EQ(call({"fit", "--simulate", "--n", "50", "--seed", "1", "--out", data}).code, 0);
    const std::string target = dir.file("from_env");
    ::setenv("PCWEIBULL_OUTPUT_DIR", target.c_str(), 1);
    const Result r = call({"fit", "--data", data});
    ::unsetenv("PCWEIBULL_OUTPUT_DIR");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(fs::exists(fs::path(target) / "marginal.csv"));
    EXPECT_TRUE(fs::exists(fs::path(target) / "posterior.json"));
}

TEST(CliFit, MalformedCsvReportsLocation) {
    TempDir dir;
    const std::string bad = dir.file("bad.csv");
    {
        std::ofstream f(bad);
        f << "time,event,x1\n1.0,1,1\n2.0,1,oops\n";
    }
    const Result r = call({"fit", "--data", bad, "--out-dir", dir.path().string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("row 3"), std::string::npos) << r.err;
    EXPECT_NE(r.err.find("column 3"), std::string::npos) << r.err;
    EXPECT_EQ(call({"fit", "--data", dir.file("missing.csv")}).code, 2);
    EXPECT_EQ(call({"fit"}).code, 2);
}

TEST(CliFit, ModelFailureExitsOne) {
    TempDir dir;
    const std::string data = dir.file("k3.csv");
    ASSERT_EQ(call({"fit", "--simulate", "--beta", "0,0.1,0.2", "--n", "50", "--seed", "2", "--out", data}).code, 0);
    const Result r = call({"fit", "--data", data, "--engine", "grid", "--out-dir", dir.path().string()});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("MCMC"), std::string::npos) << r.err;
}

TEST(CliFit, SeededFitsAreReproducible) {
    TempDir dir;
    const std::string data = dir.file("sim.csv");
    ASSERT_EQ(call({"fit", "--simulate", "--n", "80", "--seed", "4", "--out", data}).code, 0);
    const std::vector<std::string> args = {"fit", "--data", data, "--engine", "mcmc", "--iters", "3000",
                                           "--burn-in", "500", "--seed", "9", "--out-dir", dir.path().string()};
    const Result a = call(args);
    const std::string marg_a = slurp(dir.path() / "marginal.csv");
    const Result b = call(args);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(marg_a, slurp(dir.path() / "marginal.csv"));
}

TEST(CliConfig, FileSuppliesFlagsAndCommandLineWins) {
    TempDir dir;
    const std::string cfg = dir.file("cfg.json");
    {
        std::ofstream f(cfg);
        f << R"({"schema_version": 1, "prior": {"theta": 1.0, "alpha": [0.5, 2]}, "precision": 3})";
    }
    const Result from_file = call({"prior", "cdf", "--config", cfg});
    ASSERT_EQ(from_file.code, 0) << from_file.err;
    const Result direct = call({"prior", "cdf", "--theta", "1", "--alpha", "0.5,2", "--precision", "3"});
    EXPECT_EQ(from_file.out, direct.out);
    const Result overridden = call({"prior", "cdf", "--config", cfg, "--theta", "2.5"});
    const Result direct2 = call({"prior", "cdf", "--theta", "2.5", "--alpha", "0.5,2", "--precision", "3"});
    EXPECT_EQ(overridden.out, direct2.out);
}

TEST(CliConfig, RejectsWrongSchema) {
    TempDir dir;
    const std::string cfg = dir.file("cfg.json");
    {
        std::ofstream f(cfg);
        f << R"({"schema_version": 7, "theta": 1.0})";
    }
    EXPECT_EQ(call({"prior", "cdf", "--alpha", "1", "--config", cfg}).code, 2);
    EXPECT_EQ(call({"prior", "cdf", "--alpha", "1", "--config", dir.file("none.json")}).code, 2);
}
