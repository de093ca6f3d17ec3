#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rfold/experiment.hpp"

using namespace rfold;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.cells = {{PolicyKind::FirstFit, ClusterSpec::static_torus(8, 8, 8)},
                 {PolicyKind::Folding, ClusterSpec::static_torus(8, 8, 8)},
                 {PolicyKind::Reconfig, ClusterSpec::reconfigurable(8, 4)},
                 {PolicyKind::RFold, ClusterSpec::reconfigurable(8, 4)}};
    cfg.trials = 3;
    cfg.gen.job_count = 40;
    cfg.gen.size_scale = 24;
    cfg.gen.size_max = 512;
    cfg.gen.extent_cap = 32;
    cfg.base_seed = 9;
    cfg.parallelism = 2;
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("run_sweep: per-cell trial metrics and summaries") {
    ExperimentConfig cfg = small_config();
    SweepResult res = run_sweep(cfg);
    CHECK(!res.any_failed);
    REQUIRE(res.cells.size() == 4);
    for (const auto& cell : res.cells) {
        CHECK(cell.error.empty());
        CHECK(cell.trials.size() == 3);
        CHECK(cell.summary.runs == 3);
        for (const auto& m : cell.trials) {
            CHECK(m.jcr >= 0.0);
            CHECK(m.jcr <= 1.0);
            CHECK(m.util_mean >= 0.0);
            CHECK(m.util_mean <= 1.0);
        }
    }
    // Folding accepts at least what FirstFit does, per trial (shared traces).
    for (int t = 0; t < 3; ++t)
        CHECK(res.cells[1].trials[t].jcr >= res.cells[0].trials[t].jcr);
    // RFold likewise covers Reconfig.
    for (int t = 0; t < 3; ++t)
        CHECK(res.cells[3].trials[t].jcr >= res.cells[2].trials[t].jcr);
}

TEST_CASE("run_sweep: trials=1 summary equals the single run") {
    ExperimentConfig cfg = small_config();
    cfg.cells = {{PolicyKind::Reconfig, ClusterSpec::reconfigurable(8, 4)}};
    cfg.trials = 1;
    SweepResult res = run_sweep(cfg);
    REQUIRE(res.cells.size() == 1);
    const CellResult& cell = res.cells[0];
    REQUIRE(cell.trials.size() == 1);
    CHECK(cell.summary.mean_jcr == cell.trials[0].jcr);
    CHECK(cell.summary.mean_jct_p50 == cell.trials[0].jct_p50);
    CHECK(cell.summary.mean_utilization == doctest::Approx(cell.trials[0].util_mean));
}

TEST_CASE("run_sweep: invalid cells rejected up front") {
    ExperimentConfig cfg = small_config();
    cfg.cells.push_back({PolicyKind::FirstFit, ClusterSpec::reconfigurable(8, 4)});
    CHECK_THROWS_AS(run_sweep(cfg), ConfigError);
    ExperimentConfig none = small_config();
    none.cells.clear();
    CHECK_THROWS_AS(run_sweep(none), ConfigError);
    ExperimentConfig bad_trials = small_config();
    bad_trials.trials = 0;
    CHECK_THROWS_AS(run_sweep(bad_trials), ConfigError);
}

TEST_CASE("sweep outputs: deterministic bytes and expected row counts") {
    ExperimentConfig cfg = small_config();
    auto dir1 = std::filesystem::temp_directory_path() / "rfold_sweep_a";
    auto dir2 = std::filesystem::temp_directory_path() / "rfold_sweep_b";
    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
    write_sweep_outputs(run_sweep(cfg), dir1.string());
    write_sweep_outputs(run_sweep(cfg), dir2.string());

    std::vector<std::string> names{"jcr.csv", "jct.csv", "jct.svg", "util_cdf.svg"};
    for (const auto& cell : cfg.cells) names.push_back("util_cdf_" + cell.name() + ".csv");
    for (const auto& name : names) {
        CHECK_MESSAGE(slurp(dir1 / name) == slurp(dir2 / name), name);
    }

    // jcr.csv: one header + one row per cell
    std::istringstream jcr(slurp(dir1 / "jcr.csv"));
    std::string line;
    int rows = 0;
    std::getline(jcr, line);
    CHECK(line == "cell,policy,cube,metric,value");
    while (std::getline(jcr, line))
        if (!line.empty()) ++rows;
    CHECK(rows == static_cast<int>(cfg.cells.size()));

    // jct.csv: three metric rows per cell
    std::istringstream jct(slurp(dir1 / "jct.csv"));
    rows = 0;
    std::getline(jct, line);
    while (std::getline(jct, line))
        if (!line.empty()) ++rows;
    CHECK(rows == static_cast<int>(3 * cfg.cells.size()));

    std::filesystem::remove_all(dir1);
    std::filesystem::remove_all(dir2);
}

TEST_CASE("default lineup matches the comparison table") {
    auto cells = ExperimentConfig::default_cells();
    REQUIRE(cells.size() == 6);
    CHECK(cells[0].name() == "firstfit_static16x16x16");
    CHECK(cells[1].name() == "folding_static16x16x16");
    CHECK(cells[2].name() == "reconfig_cube8x8");
    CHECK(cells[3].name() == "rfold_cube8x8");
    CHECK(cells[4].name() == "reconfig_cube4x64");
    CHECK(cells[5].name() == "rfold_cube4x64");
}
