#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "glad/experiment.hpp"

using namespace glad;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::path(::testing::TempDir()) / name;
    fs::remove_all(d);
    return d;
}

ExperimentConfig small_config() {
    return config_from_json(nlohmann::json::parse(R"({
        "topology": {"source": "generated", "seed": 2, "links": 3, "area_side_m": 5, "link_length_m": [1, 2]},
        "grid": {"levels": 3}, "beta": [0.1, 1, 10, 100], "events": 300, "seeds": [1, 2]})"));
}

}  // namespace

TEST(Experiment, SweepWritesOneSummaryRowPerBetaAndSeed) {
    const auto dir = fresh_dir("glad_sweep");
    const auto out = run_experiment(small_config(), RunMode::sweep, {dir, 0, nullptr});
    EXPECT_EQ(out.cells.size(), 8u);
    const auto rows = lines(dir / "summary.csv");
    ASSERT_EQ(rows.size(), 2u + 8u);
    EXPECT_EQ(rows[0], kSummarySchema);
    for (const char* f : {"summary.txt", "analysis.csv", "optimum.txt", "trace_glad-discrete_b3_s2.csv"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const auto analysis = lines(dir / "analysis.csv");
    EXPECT_EQ(analysis[0], kAnalysisSchema);
    EXPECT_EQ(analysis[1], "beta,mean_utility,variance,variance_bound,prob_optimal,lambda2");
    EXPECT_EQ(analysis.size(), 2u + 4u);
    const auto trace = lines(dir / "trace_glad-discrete_b0_s1.csv");
    EXPECT_EQ(trace[0], kTraceSchema);
    EXPECT_EQ(trace[1], "time,link,power,utility,broadcasts,processed");
    EXPECT_EQ(trace.size(), 2u + 301u);
}

TEST(Experiment, RunUsesFirstBetaOnly) {
    const auto dir = fresh_dir("glad_run");
    const auto out = run_experiment(small_config(), RunMode::single, {dir, 0, nullptr});
    EXPECT_EQ(out.cells.size(), 2u);
}

TEST(Experiment, ByteIdenticalAcrossRuns) {
    const auto a = fresh_dir("glad_det_a"), b = fresh_dir("glad_det_b");
    auto cfg = small_config();
    cfg.per_link_columns = true;
    run_experiment(cfg, RunMode::sweep, {a, 0, nullptr});
    run_experiment(cfg, RunMode::sweep, {b, 0, nullptr});
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename())) << e.path();
        ++files;
    }
    EXPECT_GT(files, 5u);
}

TEST(Experiment, SeedOffsetShiftsSeeds) {
    const auto dir = fresh_dir("glad_offset");
    const auto out = run_experiment(small_config(), RunMode::single, {dir, 10, nullptr});
    EXPECT_EQ(out.cells[0].cell.seed, 11u);
    EXPECT_TRUE(fs::exists(dir / "trace_glad-discrete_b0_s11.csv"));
}

TEST(Experiment, CompareRowsPerVariantAndGammaBar) {
    auto cfg = config_from_json(nlohmann::json::parse(R"({
        "topology": {"source": "generated", "seed": 3, "links": 6, "area_side_m": 20, "link_length_m": [1, 2]},
        "grid": {"levels": 3}, "variants": ["glad-discrete", "iglad", "niglad"], "beta": 5,
        "gamma_bar_db": [null, 0, 10, 20, 30], "events": 400, "seeds": [1, 2]})"));
    const auto dir = fresh_dir("glad_compare");
    const auto out = run_experiment(cfg, RunMode::compare, {dir, 0, nullptr});
    const auto rows = lines(dir / "comparison.csv");
    ASSERT_EQ(rows.size(), 2u + 1u + 1u + 5u);
    EXPECT_EQ(rows[0], kCompareSchema);
    // fields: variant,gamma_bar_db,beta,seeds,tail_mean,tail_variance,broadcasts,processed,mean_neighborhood
    auto fields = [](const std::string& row) {
        std::vector<std::string> f;
        std::stringstream ss(row);
        for (std::string x; std::getline(ss, x, ',');) f.push_back(x);
        return f;
    };
    const auto glad_row = fields(rows[2]), iglad_row = fields(rows[3]);
    EXPECT_EQ(glad_row[0], "glad-discrete");
    EXPECT_EQ(iglad_row[0], "iglad");
    EXPECT_DOUBLE_EQ(std::stod(glad_row[6]), 6 * std::stod(iglad_row[6]));
    // gamma_bar off and 0 dB... the null row passes everything, like I-GLAD
    const auto off = fields(rows[4]);
    EXPECT_EQ(off[1], "off");
    for (std::size_t k = 4; k < 9; ++k) EXPECT_EQ(fields(rows[k])[0], "niglad");
    for (std::size_t col : {4u, 5u, 6u, 7u, 8u}) EXPECT_EQ(off[col], iglad_row[col]) << col;
    double prev = 1e9;
    for (std::size_t k = 4; k < 9; ++k) {
        const double hood = std::stod(fields(rows[k])[8]);
        EXPECT_LE(hood, prev);
        prev = hood;
    }
}

TEST(Experiment, CapExceededSkipsAnalysisButRuns) {
    auto cfg = config_from_json(nlohmann::json::parse(R"({
        "topology": {"source": "generated", "seed": 3, "links": 9, "area_side_m": 20, "link_length_m": [1, 2]},
        "grid": {"levels": 4}, "events": 50})"));
    const auto dir = fresh_dir("glad_cap");
    std::ostringstream log;
    const auto out = run_experiment(cfg, RunMode::single, {dir, 0, &log});
    EXPECT_NE(log.str().find("chain analysis skipped"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir / "analysis.csv"));
    EXPECT_TRUE(fs::exists(dir / "summary.csv"));
}

TEST(Experiment, AnalyzeWritesMixing) {
    auto cfg = config_from_json(nlohmann::json::parse(R"({
        "topology": {"source": "generated", "seed": 3, "links": 2, "area_side_m": 5, "link_length_m": [1, 2]},
        "grid": {"levels": 3}, "beta": [1, 10], "mixing_steps": 50})"));
    const auto dir = fresh_dir("glad_analyze");
    analyze(cfg, {dir, 0, nullptr});
    const auto mix = lines(dir / "mixing.csv");
    EXPECT_EQ(mix[0], kMixingSchema);
    EXPECT_EQ(mix[2], "k,tv_distance");
    EXPECT_EQ(mix.size(), 3u + 51u);
    const auto an = lines(dir / "analysis.csv");
    EXPECT_EQ(an.size(), 4u);
    EXPECT_NE(an[2].substr(an[2].rfind(',') + 1), "");  // lambda2 present
}

TEST(Experiment, AnalyzeNeedsDiscreteGrid) {
    auto cfg = config_from_json(nlohmann::json::parse(R"({"variant": "iglad", "grid": {"continuous": 32}})"));
    EXPECT_THROW(analyze(cfg, {fresh_dir("glad_an2"), 0, nullptr}), ConfigError);
}
