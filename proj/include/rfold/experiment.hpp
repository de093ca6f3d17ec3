#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rfold/simulator.hpp"
#include "rfold/workload.hpp"

namespace rfold {

/// One table cell: a policy on a cluster configuration.
struct CellSpec {
    PolicyKind policy = PolicyKind::FirstFit;
    ClusterSpec cluster;

    std::string name() const;  // e.g. "rfold_cube4x64"
};

struct TrialMetrics {
    double jcr = 0;
    double jct_p50 = 0, jct_p90 = 0, jct_p99 = 0;  // NaN when no job completed
    double util_mean = 0;
};

struct CellResult {
    CellSpec cell;
    std::string error;  // nonempty when any trial of this cell failed
    std::vector<TrialMetrics> trials;
    Summary summary;
};

struct ExperimentConfig {
    std::vector<CellSpec> cells = default_cells();
    int trials = 100;
    GenConfig gen;
    uint64_t base_seed = 1;
    int parallelism = 0;  // 0 = hardware concurrency
    bool check_invariants = false;

    /// FirstFit + Folding on the 16^3 static torus, Reconfig + RFold on
    /// 8x8^3 and 64x4^3 cube fabrics: the standard comparison lineup.
    static std::vector<CellSpec> default_cells();
    void validate() const;
};

struct SweepResult {
    std::vector<CellResult> cells;
    bool any_failed = false;
};

/// All cells x trials on a bounded worker pool. Trial t of every cell replays
/// the same trace (seed = base_seed + t) so policies face identical
/// workloads. Deterministic: results are keyed by (cell, trial).
SweepResult run_sweep(const ExperimentConfig& config);

/// jcr.csv, jct.csv, util_cdf_<cell>.csv (header cell,policy,cube,metric,value)
/// plus jct.svg and util_cdf.svg under out_dir.
void write_sweep_outputs(const SweepResult& result, const std::string& out_dir);

}  // namespace rfold
