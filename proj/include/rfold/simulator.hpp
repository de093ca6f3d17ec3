#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "rfold/placement.hpp"
#include "rfold/topology.hpp"
#include "rfold/workload.hpp"

namespace rfold {

enum class JobStatus : int { Completed = 0, Rejected = 1 };

std::string to_string(JobStatus s);

struct JobRecord {
    std::string id;
    JobStatus status = JobStatus::Rejected;
    double arrival_s = 0;
    double start_s = -1;   // -1 when rejected
    double finish_s = -1;  // start + duration
    Mode mode = Mode::LineComplete;
    int cubes_used = 0;
    int circuits_used = 0;
    std::string variant_kind;
};

struct UtilizationSample {
    double time_s = 0;
    double busy_fraction = 0;
};

struct RunReport {
    PolicyKind policy = PolicyKind::FirstFit;
    ClusterSpec spec;
    uint64_t seed = 0;
    std::vector<JobRecord> jobs;
    long completed = 0;
    long rejected = 0;
    double jcr = 1.0;            // completed / total (1.0 for an empty trace)
    std::vector<double> jct_s;   // finish - arrival, completed jobs in trace order
    std::vector<UtilizationSample> utilization;  // piecewise-constant, event times
};

struct RunOptions {
    /// Deep structural checks after every event plus a mapping audit before
    /// every commit. Slower; used by tests and the acceptance sweep.
    bool check_invariants = false;
};

/// Job-level discrete-event simulation with FIFO blocking admission: a
/// feasible-but-unplaceable head waits (blocking everyone behind it) and is
/// retried when a departure frees resources; a head whose shape can never be
/// placed on this fabric is removed. Departures sort before arrivals at
/// equal timestamps. Deterministic.
RunReport run(const Trace& trace, PolicyKind policy, const ClusterSpec& spec,
              const RunOptions& options = {});

/// Time-weighted CDF of the utilization series: sorted (busy_fraction,
/// cumulative weight) with weights normalized over the simulated horizon.
/// Throws ConfigError when the report has no samples.
std::vector<std::pair<double, double>> utilization_cdf(const RunReport& report);

/// Smallest CDF value whose cumulative weight reaches q (q in [0,1]).
double cdf_value_at(const std::vector<std::pair<double, double>>& cdf, double q);

/// Nearest-rank percentile: the ceil(pct/100 * n)-th smallest value.
/// NaN for an empty list.
double nearest_rank(std::vector<double> values, double pct);

double time_weighted_mean_utilization(const RunReport& report);

struct Summary {
    int runs = 0;
    double mean_jcr = 0;
    // Per-run nearest-rank JCT percentiles averaged across runs that
    // completed at least one job (NaN when none did).
    double mean_jct_p50 = 0, mean_jct_p90 = 0, mean_jct_p99 = 0;
    double mean_utilization = 0;
    std::array<double, 101> util_percentiles{};  // CDF values averaged per percentile
};

/// Averages across repeated runs of one (policy, spec) cell.
Summary aggregate(const std::vector<RunReport>& reports);

}  // namespace rfold
