#include "rfold/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <queue>

namespace rfold {

std::string to_string(JobStatus s) {
    return s == JobStatus::Completed ? "completed" : "rejected";
}

namespace {

struct Event {
    double time = 0;
    int kind = 0;  // 0 = departure, 1 = arrival; departures first at equal times
    long seq = 0;
    long job = 0;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.time != b.time) return a.time > b.time;
        if (a.kind != b.kind) return a.kind > b.kind;
        return a.seq > b.seq;
    }
};

}  // namespace

RunReport run(const Trace& trace, PolicyKind policy, const ClusterSpec& spec,
              const RunOptions& options) {
    if (!policy_compatible(policy, spec))
        throw ConfigError("policy " + to_string(policy) + " incompatible with " +
                          spec.to_string());
    trace.validate();

    RunReport report;
    report.policy = policy;
    report.spec = spec;
    report.jobs.resize(trace.jobs.size());

    ClusterState state = build_cluster(spec);
    FeasibilityCache feasible(policy, spec);

    std::priority_queue<Event, std::vector<Event>, EventAfter> events;
    long seq = 0;
    for (size_t i = 0; i < trace.jobs.size(); ++i) {
        events.push(Event{trace.jobs[i].arrival_s, 1, seq++, static_cast<long>(i)});
        report.jobs[i].id = trace.jobs[i].id;
        report.jobs[i].arrival_s = trace.jobs[i].arrival_s;
    }

    std::deque<long> queue;
    long blocked_head = -1;  // head that failed under the current resources

    auto audit = [&]() {
        if (!options.check_invariants) return;
        auto bad = state.check_invariants();
        if (!bad.empty()) throw std::logic_error("invariant violated: " + bad.front());
    };

    auto checked_commit = [&](const PlacementPlan& plan, const std::string& job_id) {
        if (options.check_invariants) {
            ClusterState scratch = state;
            for (const auto& [out_port, in_port] : plan.circuits_to_set)
                scratch.set_circuit(out_port, in_port);
            auto violations = verify_mapping(plan.mapping, comm_graph(plan.shape), scratch);
            if (!violations.empty())
                throw std::logic_error("plan failed verification at commit: " +
                                       violations.front().what);
        }
        commit(state, plan, job_id);
    };

    auto sample = [&](double now) {
        double frac = state.total_xpus() == 0
                          ? 0.0
                          : static_cast<double>(state.busy_xpus()) / state.total_xpus();
        if (!report.utilization.empty() && report.utilization.back().time_s == now)
            report.utilization.back().busy_fraction = frac;
        else
            report.utilization.push_back({now, frac});
    };

    while (!events.empty()) {
        Event ev = events.top();
        events.pop();
        const double now = ev.time;

        if (ev.kind == 0) {
            state.release(trace.jobs[ev.job].id);
            blocked_head = -1;  // resources changed, retry the head
        } else {
            queue.push_back(ev.job);
        }

        while (!queue.empty() && queue.front() != blocked_head) {
            const long j = queue.front();
            const Job& job = trace.jobs[j];
            JobRecord& rec = report.jobs[j];
            if (!feasible.feasible_on_empty(job.shape)) {
                rec.status = JobStatus::Rejected;
                report.rejected++;
                queue.pop_front();
                continue;
            }
            auto plan = place(policy, state, job.shape);
            if (!plan) {
                blocked_head = j;  // waits; blocks all subsequent jobs
                break;
            }
            checked_commit(*plan, job.id);
            rec.status = JobStatus::Completed;
            rec.start_s = now;
            rec.finish_s = now + job.duration_s;
            rec.mode = plan->mode();
            rec.cubes_used = plan->cost.cubes_used;
            rec.circuits_used = plan->cost.ocs_circuits_used;
            rec.variant_kind = plan->variant_kind;
            report.completed++;
            events.push(Event{rec.finish_s, 0, seq++, j});
            queue.pop_front();
        }

        audit();
        sample(now);
    }

    const long total = static_cast<long>(trace.jobs.size());
    report.jcr = total == 0 ? 1.0 : static_cast<double>(report.completed) / total;
    for (size_t i = 0; i < report.jobs.size(); ++i)
        if (report.jobs[i].status == JobStatus::Completed)
            report.jct_s.push_back(report.jobs[i].finish_s - report.jobs[i].arrival_s);
    return report;
}

std::vector<std::pair<double, double>> utilization_cdf(const RunReport& report) {
    if (report.utilization.empty())
        throw ConfigError("utilization_cdf requires at least one sample");
    const auto& samples = report.utilization;
    std::vector<std::pair<double, double>> weighted;  // (value, weight)
    double total = 0;
    for (size_t i = 0; i + 1 < samples.size(); ++i) {
        double w = samples[i + 1].time_s - samples[i].time_s;
        weighted.emplace_back(samples[i].busy_fraction, w);
        total += w;
    }
    if (total <= 0) {
        // Degenerate horizon: a single step at the final value.
        return {{samples.back().busy_fraction, 1.0}};
    }
    std::sort(weighted.begin(), weighted.end());
    std::vector<std::pair<double, double>> cdf;
    double cum = 0;
    for (const auto& [v, w] : weighted) {
        cum += w / total;
        if (!cdf.empty() && cdf.back().first == v)
            cdf.back().second = cum;
        else
            cdf.emplace_back(v, cum);
    }
    cdf.back().second = 1.0;  // guard against rounding drift
    return cdf;
}

double cdf_value_at(const std::vector<std::pair<double, double>>& cdf, double q) {
    for (const auto& [v, cum] : cdf)
        if (cum >= q) return v;
    return cdf.empty() ? std::numeric_limits<double>::quiet_NaN() : cdf.back().first;
}

double nearest_rank(std::vector<double> values, double pct) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    long rank = static_cast<long>(std::ceil(pct / 100.0 * static_cast<double>(values.size())));
    rank = std::clamp<long>(rank, 1, static_cast<long>(values.size()));
    return values[rank - 1];
}

double time_weighted_mean_utilization(const RunReport& report) {
    if (report.utilization.empty()) return 0.0;
    const auto& samples = report.utilization;
    double total = 0, acc = 0;
    for (size_t i = 0; i + 1 < samples.size(); ++i) {
        double w = samples[i + 1].time_s - samples[i].time_s;
        acc += samples[i].busy_fraction * w;
        total += w;
    }
    if (total <= 0) return samples.back().busy_fraction;
    return acc / total;
}

Summary aggregate(const std::vector<RunReport>& reports) {
    if (reports.empty()) throw ConfigError("aggregate requires at least one report");
    Summary s;
    s.runs = static_cast<int>(reports.size());
    double jcr = 0, util = 0;
    double p50 = 0, p90 = 0, p99 = 0;
    int with_jct = 0;
    std::array<double, 101> curve{};
    for (const auto& r : reports) {
        jcr += r.jcr;
        util += time_weighted_mean_utilization(r);
        if (!r.jct_s.empty()) {
            p50 += nearest_rank(r.jct_s, 50);
            p90 += nearest_rank(r.jct_s, 90);
            p99 += nearest_rank(r.jct_s, 99);
            ++with_jct;
        }
        auto cdf = utilization_cdf(r);
        for (int k = 0; k <= 100; ++k) curve[k] += cdf_value_at(cdf, k / 100.0);
    }
    s.mean_jcr = jcr / s.runs;
    s.mean_utilization = util / s.runs;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    s.mean_jct_p50 = with_jct ? p50 / with_jct : nan;
    s.mean_jct_p90 = with_jct ? p90 / with_jct : nan;
    s.mean_jct_p99 = with_jct ? p99 / with_jct : nan;
    for (int k = 0; k <= 100; ++k) s.util_percentiles[k] = curve[k] / s.runs;
    return s;
}

}  // namespace rfold
