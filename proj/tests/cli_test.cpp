#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <ollga/cli.hpp>

namespace fs = std::filesystem;
using ollga::cli::execute;
using ollga::cli::json;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("ollga_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(std::vector<std::string> args, std::string* err = nullptr) {
        std::ostringstream stream;
        const int code = execute(args, stream);
        if (err != nullptr) {
            *err = stream.str();
        }
        return code;
    }

    std::string out(const std::string& name) const { return (dir_ / name).string(); }

    static std::string slurp(const fs::path& path) {
        std::ifstream file(path, std::ios::binary);
        std::ostringstream s;
        s << file.rdbuf();
        return s.str();
    }

    static json load(const fs::path& path) { return json::parse(slurp(path)); }

    static std::vector<std::string> lines(const std::string& text) {
        std::vector<std::string> result;
        std::istringstream in(text);
        for (std::string line; std::getline(in, line);) {
            result.push_back(line);
        }
        return result;
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, TheoryWritesSummaryOnly) {
    ASSERT_EQ(run({"theory", "--n", "16", "--k", "2", "--auto-params", "escape", "--out", out("t")}), 0);
    EXPECT_FALSE(fs::exists(dir_ / "t" / "records.csv"));
    const json summary = load(dir_ / "t" / "summary.json");
    EXPECT_EQ(summary["version"], OLLGA_VERSION);
    const double rate = std::sqrt(2.0 / 16.0);
    EXPECT_DOUBLE_EQ(summary["params"]["p"].get<double>(), rate);
    EXPECT_DOUBLE_EQ(summary["params"]["c"].get<double>(), rate);
    const auto& bounds = summary["bounds"];
    for (const char* key : {"exact_p", "exact_evals", "runtime_bound_evals", "runtime_bound_exact_q_evals",
                            "upper_bound_p", "lower_bound_evals"}) {
        ASSERT_TRUE(bounds[key].is_string()) << key;
        EXPECT_FALSE(bounds[std::string(key) + "_is_log"].get<bool>()) << key;
    }
    EXPECT_TRUE(bounds["in_validity_domain"].get<bool>());
    const ollga::JumpProblem problem(16, 2);
    const auto params = ollga::theory::optimal_params(problem, ollga::theory::AutoParamsMode::escape);
    EXPECT_NEAR(std::stod(bounds["exact_p"].get<std::string>()),
                ollga::theory::escape_probability_exact(problem, params).value(), 1e-15);
}

TEST_F(CliTest, InvalidKExitsTwo) {
    std::string err;
    EXPECT_EQ(run({"escape", "--n", "12", "--k", "1", "--trials", "5", "--out", out("e")}, &err), 2);
    EXPECT_NE(err.find("k must be in [2..n]"), std::string::npos) << err;
    EXPECT_EQ(std::count(err.begin(), err.end(), '\n'), 1);
}

TEST_F(CliTest, UnknownFlagRejected) {
    std::string err;
    EXPECT_EQ(run({"escape", "--n", "12", "--k", "2", "--bogus", "1"}, &err), 2);
    EXPECT_FALSE(err.empty());
    EXPECT_EQ(run({"theory", "--n", "12", "--k", "2", "--trials", "4"}), 2);
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"escape", "--n", "12", "--k", "2", "--start", "middle", "--out", out("s")}), 2);
}

TEST_F(CliTest, EscapeMatchesExactEscapeTime) {
    ASSERT_EQ(run({"escape", "--n", "12", "--k", "2", "--auto-params", "escape", "--trials", "2000", "--seed", "42",
                   "--out", out("e")}),
              0);
    const json summary = load(dir_ / "e" / "summary.json");
    const double P = std::stod(summary["bounds"]["exact_p"].get<std::string>());
    const double mean = summary["iterations"]["mean"].get<double>();
    const double se = summary["iterations"]["std_error"].get<double>();
    EXPECT_NEAR(mean, 1.0 / P, 3.0 * se);
    EXPECT_EQ(summary["base_seed"], "42");
    EXPECT_EQ(summary["iterations"]["censored_count"], 0);

    const std::string csv = slurp(dir_ / "e" / "records.csv");
    EXPECT_EQ(csv.find('\r'), std::string::npos);
    const auto rows = lines(csv);
    ASSERT_EQ(rows.size(), 2001U);
    EXPECT_EQ(rows[0], ollga::cli::records_header);
    EXPECT_EQ(rows[1].rfind("0,", 0), 0U);
}

TEST_F(CliTest, RecordsCsvShape) {
    EXPECT_EQ(ollga::cli::records_csv({}, {}), ollga::cli::records_header + "\n");
    std::vector<ollga::RunOutcome> records(3);
    records[0].first_hit_evaluation = 7;
    records[0].hit_optimum = true;
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    const std::string csv = ollga::cli::records_csv(records, seeds);
    const auto rows = lines(csv);
    ASSERT_EQ(rows.size(), 4U);
    EXPECT_EQ(rows[1], "0,1,0,0,true,7,0");
    EXPECT_EQ(rows[2], "1,2,0,0,false,,0");
    EXPECT_EQ(csv, ollga::cli::records_csv(records, seeds));
}

TEST_F(CliTest, RoundTripFromSummary) {
    ASSERT_EQ(run({"escape", "--n", "16", "--k", "2", "--trials", "200", "--seed", "7", "--out", out("a")}), 0);
    ASSERT_EQ(run({"escape", "--from-summary", out("a/summary.json"), "--out", out("b")}), 0);
    EXPECT_EQ(slurp(dir_ / "a" / "records.csv"), slurp(dir_ / "b" / "records.csv"));
    EXPECT_EQ(slurp(dir_ / "a" / "summary.json"), slurp(dir_ / "b" / "summary.json"));

    ASSERT_EQ(run({"escape", "--n", "16", "--k", "2", "--p", "0.3", "--c", "0.2", "--lambda-m", "3", "--lambda-c",
                   "5", "--trials", "50", "--seed", "9", "--out", out("c")}),
              0);
    ASSERT_EQ(run({"escape", "--from-summary", out("c/summary.json"), "--out", out("d")}), 0);
    EXPECT_EQ(slurp(dir_ / "c" / "records.csv"), slurp(dir_ / "d" / "records.csv"));
    EXPECT_EQ(run({"run", "--from-summary", out("c/summary.json"), "--out", out("e")}), 2);
}

TEST_F(CliTest, LowRateNullsBounds) {
    ASSERT_EQ(run({"escape", "--n", "16", "--k", "2", "--p", "0.2", "--c", "0.3", "--lambda-m", "4", "--lambda-c",
                   "4", "--trials", "20", "--bounds", "--out", out("e")}),
              0);
    const json bounds = load(dir_ / "e" / "summary.json")["bounds"];
    EXPECT_FALSE(bounds["in_validity_domain"].get<bool>());
    EXPECT_TRUE(bounds["runtime_bound_evals"].is_null());
    EXPECT_TRUE(bounds["exact_p"].is_string());
}

TEST_F(CliTest, AutoParamsOverridesExplicitValues) {
    ASSERT_EQ(run({"theory", "--n", "16", "--k", "2", "--p", "0.9", "--auto-params", "escape", "--out", out("t")}), 0);
    const json summary = load(dir_ / "t" / "summary.json");
    EXPECT_DOUBLE_EQ(summary["params"]["p"].get<double>(), std::sqrt(2.0 / 16.0));
}

TEST_F(CliTest, SweepPlotData) {
    ASSERT_EQ(run({"sweep", "--n", "12", "--k", "2", "--p", "0.4", "--c", "0.4", "--lambda-m", "1", "--lambda-c", "1",
                   "--sweep-lambda", "8,2,4", "--axis", "lambda", "--trials", "100", "--out", out("s")}),
              0);
    const auto rows = lines(slurp(dir_ / "s" / "plotdata.csv"));
    ASSERT_EQ(rows.size(), 4U);
    EXPECT_EQ(rows[0], ollga::cli::plotdata_header);
    const ollga::JumpProblem problem(12, 2);
    double last_x = 0.0;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        std::vector<std::string> fields;
        std::istringstream row(rows[i]);
        for (std::string f; std::getline(row, f, ',');) {
            fields.push_back(f);
        }
        ASSERT_GE(fields.size(), 4U);
        const double x = std::stod(fields[0]);
        EXPECT_GT(x, last_x);
        last_x = x;
        const auto lambda = static_cast<std::uint64_t>(x);
        const ollga::GaParams params{0.4, 0.4, lambda, lambda};
        const double P = ollga::theory::escape_probability_exact(problem, params).value();
        EXPECT_NEAR(std::stod(fields[3]), 2.0 * x / P, 1e-9 * 2.0 * x / P);
    }
    EXPECT_TRUE(fs::exists(dir_ / "s" / "records" / "cell_0000.csv"));
    EXPECT_EQ(load(dir_ / "s" / "summary.json")["cells"].size(), 3U);

    ASSERT_EQ(run({"sweep", "--n", "12", "--k", "2", "--sweep-lambda", "4", "--axis", "lambda", "--trials", "10",
                   "--out", out("one")}),
              0);
    EXPECT_EQ(lines(slurp(dir_ / "one" / "plotdata.csv")).size(), 2U);
}

TEST_F(CliTest, SweepAxisMustBeVaried) {
    std::string err;
    EXPECT_EQ(run({"sweep", "--n", "12", "--k", "2", "--sweep-lambda", "2,4", "--axis", "n", "--out", out("s")}, &err),
              2);
    EXPECT_NE(err.find("not varied"), std::string::npos);
}

TEST_F(CliTest, SweepRoundTrip) {
    ASSERT_EQ(run({"sweep", "--k", "2", "--sweep-n", "8,12", "--axis", "n", "--trials", "30", "--seed", "3", "--out",
                   out("a")}),
              0);
    ASSERT_EQ(run({"sweep", "--from-summary", out("a/summary.json"), "--out", out("b")}), 0);
    for (const char* cell : {"cell_0000.csv", "cell_0001.csv"}) {
        EXPECT_EQ(slurp(dir_ / "a" / "records" / cell), slurp(dir_ / "b" / "records" / cell)) << cell;
    }
    EXPECT_EQ(slurp(dir_ / "a" / "plotdata.csv"), slurp(dir_ / "b" / "plotdata.csv"));
}

TEST_F(CliTest, CompareAndReachLocal) {
    ASSERT_EQ(run({"compare", "--n", "12", "--k", "2", "--trials", "100", "--out", out("c")}), 0);
    const json summary = load(dir_ / "c" / "summary.json");
    EXPECT_GT(summary["ratio"].get<double>(), 0.0);
    EXPECT_TRUE(summary["exact"]["exact_ratio"].is_string());
    EXPECT_TRUE(fs::exists(dir_ / "c" / "records_ea.csv"));

    ASSERT_EQ(run({"reach-local", "--n", "32", "--k", "2", "--trials", "20", "--out", out("r")}), 0);
    const json reach = load(dir_ / "r" / "summary.json");
    EXPECT_EQ(reach["params"]["lambda_m"], "16");
    EXPECT_EQ(reach["iterations"]["censored_count"], 0);

    ASSERT_EQ(run({"run", "--n", "12", "--k", "2", "--trials", "20", "--out", out("f")}), 0);
}

TEST_F(CliTest, ThreadCapFromEnvironment) {
    ASSERT_EQ(setenv("OLLGA_THREADS", "zero", 1), 0);
    EXPECT_EQ(run({"escape", "--n", "12", "--k", "2", "--trials", "10", "--out", out("a")}), 2);
    ASSERT_EQ(setenv("OLLGA_THREADS", "1", 1), 0);
    ASSERT_EQ(run({"escape", "--n", "12", "--k", "2", "--trials", "100", "--out", out("b")}), 0);
    ASSERT_EQ(setenv("OLLGA_THREADS", "3", 1), 0);
    ASSERT_EQ(run({"escape", "--n", "12", "--k", "2", "--trials", "100", "--out", out("c")}), 0);
    unsetenv("OLLGA_THREADS");
    EXPECT_EQ(slurp(dir_ / "b" / "records.csv"), slurp(dir_ / "c" / "records.csv"));
}

TEST_F(CliTest, UnwritableOutputExitsTwo) {
    std::ofstream(dir_ / "file") << "x";
    EXPECT_EQ(run({"theory", "--n", "16", "--k", "2", "--out", out("file/sub")}), 2);
}
