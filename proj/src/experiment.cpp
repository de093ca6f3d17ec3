#include "rfold/experiment.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "rfold/report.hpp"
#include "rfold/svg.hpp"

namespace rfold {

std::string CellSpec::name() const { return to_string(policy) + "_" + cluster.to_string(); }

std::vector<CellSpec> ExperimentConfig::default_cells() {
    return {
        {PolicyKind::FirstFit, ClusterSpec::static_torus(16, 16, 16)},
        {PolicyKind::Folding, ClusterSpec::static_torus(16, 16, 16)},
        {PolicyKind::Reconfig, ClusterSpec::reconfigurable(8, 8)},
        {PolicyKind::RFold, ClusterSpec::reconfigurable(8, 8)},
        {PolicyKind::Reconfig, ClusterSpec::reconfigurable(64, 4)},
        {PolicyKind::RFold, ClusterSpec::reconfigurable(64, 4)},
    };
}

void ExperimentConfig::validate() const {
    if (cells.empty()) throw ConfigError("sweep needs at least one cell");
    if (trials < 1) throw ConfigError("trials must be >= 1");
    gen.validate();
    for (const auto& c : cells) {
        c.cluster.validate();
        if (!policy_compatible(c.policy, c.cluster))
            throw ConfigError("cell " + c.name() + ": policy incompatible with cluster");
    }
}

SweepResult run_sweep(const ExperimentConfig& config) {
    config.validate();
    const size_t n_cells = config.cells.size();
    const size_t n_tasks = n_cells * config.trials;

    struct TaskResult {
        RunReport report;
        std::string error;
    };
    std::vector<TaskResult> results(n_tasks);

    std::atomic<size_t> next{0};
    auto worker = [&]() {
        for (size_t task = next.fetch_add(1); task < n_tasks; task = next.fetch_add(1)) {
            const size_t cell_idx = task / config.trials;
            const int trial = static_cast<int>(task % config.trials);
            const CellSpec& cell = config.cells[cell_idx];
            try {
                GenConfig gen = config.gen;
                gen.seed = config.base_seed + trial;
                Trace trace = generate_trace(gen);
                RunOptions opts;
                opts.check_invariants = config.check_invariants;
                RunReport r = run(trace, cell.policy, cell.cluster, opts);
                r.seed = gen.seed;
                results[task].report = std::move(r);
            } catch (const std::exception& e) {
                results[task].error = e.what();
            }
        }
    };

    int workers = config.parallelism > 0
                      ? config.parallelism
                      : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::max(1, std::min<int>(workers, static_cast<int>(n_tasks)));
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    SweepResult out;
    out.cells.resize(n_cells);
    for (size_t ci = 0; ci < n_cells; ++ci) {
        CellResult& cr = out.cells[ci];
        cr.cell = config.cells[ci];
        std::vector<RunReport> reports;
        reports.reserve(config.trials);
        for (int t = 0; t < config.trials; ++t) {
            TaskResult& task = results[ci * config.trials + t];
            if (!task.error.empty()) {
                if (cr.error.empty())
                    cr.error = "trial " + std::to_string(t) + ": " + task.error;
                out.any_failed = true;
                continue;
            }
            TrialMetrics m;
            m.jcr = task.report.jcr;
            m.jct_p50 = nearest_rank(task.report.jct_s, 50);
            m.jct_p90 = nearest_rank(task.report.jct_s, 90);
            m.jct_p99 = nearest_rank(task.report.jct_s, 99);
            m.util_mean = time_weighted_mean_utilization(task.report);
            cr.trials.push_back(m);
            reports.push_back(std::move(task.report));
        }
        if (!reports.empty()) cr.summary = aggregate(reports);
    }
    return out;
}

namespace {

void write_metric_rows(std::ostream& out, const CellResult& cr,
                       const std::vector<std::pair<std::string, double>>& metrics) {
    for (const auto& [metric, value] : metrics)
        out << cr.cell.name() << "," << to_string(cr.cell.policy) << ","
            << cr.cell.cluster.to_string() << "," << metric << "," << format_double(value)
            << "\n";
}

}  // namespace

void write_sweep_outputs(const SweepResult& result, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(out_dir + "/" + name);
        if (!f) throw ConfigError("cannot open output file: " + out_dir + "/" + name);
        f << "cell,policy,cube,metric,value\n";
        return f;
    };

    {
        std::ofstream f = open("jcr.csv");
        for (const auto& cr : result.cells) {
            if (!cr.error.empty()) {
                f << cr.cell.name() << "," << to_string(cr.cell.policy) << ","
                  << cr.cell.cluster.to_string() << ",error,nan\n";
                continue;
            }
            write_metric_rows(f, cr, {{"jcr_mean", cr.summary.mean_jcr}});
        }
    }
    {
        std::ofstream f = open("jct.csv");
        for (const auto& cr : result.cells) {
            if (!cr.error.empty()) continue;
            write_metric_rows(f, cr,
                              {{"jct_p50_mean_s", cr.summary.mean_jct_p50},
                               {"jct_p90_mean_s", cr.summary.mean_jct_p90},
                               {"jct_p99_mean_s", cr.summary.mean_jct_p99}});
        }
    }
    for (const auto& cr : result.cells) {
        if (!cr.error.empty()) continue;
        std::ofstream f = open("util_cdf_" + cr.cell.name() + ".csv");
        std::vector<std::pair<std::string, double>> rows;
        rows.emplace_back("util_mean", cr.summary.mean_utilization);
        for (int k = 0; k <= 100; ++k)
            rows.emplace_back("util_p" + std::to_string(k), cr.summary.util_percentiles[k]);
        write_metric_rows(f, cr, rows);
    }

    // Charts: JCT percentiles per cell (only cells that completed jobs) and
    // the averaged utilization CDF.
    std::vector<SvgBarGroup> groups;
    for (const auto& cr : result.cells) {
        if (!cr.error.empty() || std::isnan(cr.summary.mean_jct_p50)) continue;
        groups.push_back(SvgBarGroup{
            cr.cell.name(),
            {cr.summary.mean_jct_p50, cr.summary.mean_jct_p90, cr.summary.mean_jct_p99}});
    }
    write_bar_chart(out_dir + "/jct.svg", "Job completion time (mean of per-run percentiles)",
                    "seconds", {"p50", "p90", "p99"}, groups);

    std::vector<SvgSeries> series;
    for (const auto& cr : result.cells) {
        if (!cr.error.empty()) continue;
        SvgSeries s;
        s.label = cr.cell.name();
        for (int k = 0; k <= 100; ++k)
            s.points.emplace_back(cr.summary.util_percentiles[k], k / 100.0);
        series.push_back(std::move(s));
    }
    write_line_chart(out_dir + "/util_cdf.svg", "Cluster utilization CDF (averaged per percentile)",
                     "busy fraction", "cumulative", series);
}

}  // namespace rfold
