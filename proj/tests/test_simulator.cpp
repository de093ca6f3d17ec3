#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "rfold/report.hpp"
#include "rfold/simulator.hpp"

using namespace rfold;

namespace {

Job job(const std::string& id, double arrival, double duration, Shape shape) {
    return Job{id, arrival, duration, shape};
}

RunReport report_with_samples(std::vector<UtilizationSample> samples) {
    RunReport r;
    r.utilization = std::move(samples);
    return r;
}

}  // namespace

TEST_CASE("run: one job that fits starts on arrival") {
    Trace t;
    t.jobs.push_back(job("a", 5.0, 100.0, Shape{2, 2, 2}));
    RunOptions opts;
    opts.check_invariants = true;
    RunReport r = run(t, PolicyKind::RFold, ClusterSpec::reconfigurable(4, 4), opts);
    CHECK(r.jcr == 1.0);
    REQUIRE(r.jct_s.size() == 1);
    CHECK(r.jct_s[0] == 100.0);
    CHECK(r.jobs[0].start_s == 5.0);
    CHECK(r.jobs[0].finish_s == 105.0);
    CHECK(r.jobs[0].status == JobStatus::Completed);
}

TEST_CASE("run: whole-cluster jobs queue behind each other") {
    // Two jobs each needing the entire 2x2x1 torus; the second waits for the
    // first departure: start 10, finish 20, jct 19.
    Trace t;
    t.jobs.push_back(job("a", 0.0, 10.0, Shape{2, 2, 1}));
    t.jobs.push_back(job("b", 1.0, 10.0, Shape{2, 2, 1}));
    RunOptions opts;
    opts.check_invariants = true;
    RunReport r = run(t, PolicyKind::FirstFit, ClusterSpec::static_torus(2, 2, 1), opts);
    CHECK(r.jcr == 1.0);
    CHECK(r.jobs[1].start_s == 10.0);
    CHECK(r.jobs[1].finish_s == 20.0);
    CHECK(r.jct_s[1] == 19.0);
}

TEST_CASE("run: infeasible shapes are rejected at the head, not waited for") {
    Trace t;
    t.jobs.push_back(job("a", 0.0, 50.0, Shape{4, 4, 1}));
    t.jobs.push_back(job("b", 1.0, 50.0, Shape{17, 1, 1}));  // exceeds every dimension
    t.jobs.push_back(job("c", 2.0, 50.0, Shape{4, 4, 1}));
    RunReport r = run(t, PolicyKind::FirstFit, ClusterSpec::static_torus(16, 16, 16));
    CHECK(r.jobs[1].status == JobStatus::Rejected);
    CHECK(r.jobs[2].status == JobStatus::Completed);
    CHECK(r.jcr == doctest::Approx(2.0 / 3));
    // The rejected job never delayed the one behind it.
    CHECK(r.jobs[2].start_s == 2.0);
}

TEST_CASE("run: two-job rejection example") {
    Trace t;
    t.jobs.push_back(job("a", 0.0, 10.0, Shape{4, 4, 1}));
    t.jobs.push_back(job("b", 1.0, 10.0, Shape{17, 1, 1}));
    RunReport r = run(t, PolicyKind::FirstFit, ClusterSpec::static_torus(16, 16, 16));
    CHECK(r.jcr == 0.5);
    CHECK(r.completed == 1);
    CHECK(r.rejected == 1);
}

TEST_CASE("run: a blocked feasible head blocks later jobs (FIFO)") {
    // b needs the whole torus and blocks c, which would otherwise fit at its
    // arrival.
    Trace t;
    t.jobs.push_back(job("a", 0.0, 10.0, Shape{2, 2, 1}));
    t.jobs.push_back(job("b", 1.0, 10.0, Shape{2, 2, 1}));
    t.jobs.push_back(job("c", 2.0, 10.0, Shape{1, 1, 1}));
    RunReport r = run(t, PolicyKind::FirstFit, ClusterSpec::static_torus(2, 2, 1));
    CHECK(r.jcr == 1.0);
    CHECK(r.jobs[1].start_s == 10.0);
    CHECK(r.jobs[2].start_s >= 20.0);  // c waited for b to finish, not just to start
}

TEST_CASE("run: departures beat arrivals at equal timestamps") {
    Trace t;
    t.jobs.push_back(job("a", 0.0, 10.0, Shape{2, 2, 1}));
    t.jobs.push_back(job("b", 10.0, 5.0, Shape{2, 2, 1}));  // arrives exactly at a's finish
    RunReport r = run(t, PolicyKind::FirstFit, ClusterSpec::static_torus(2, 2, 1));
    CHECK(r.jobs[1].start_s == 10.0);
}

TEST_CASE("run: FIFO start order respects arrival order") {
    GenConfig cfg;
    cfg.job_count = 60;
    cfg.seed = 31;
    cfg.size_scale = 16;
    cfg.size_max = 128;
    cfg.extent_cap = 64;
    Trace t = generate_trace(cfg);
    RunOptions opts;
    opts.check_invariants = true;
    RunReport r = run(t, PolicyKind::RFold, ClusterSpec::reconfigurable(4, 4), opts);
    double last_start = -1;
    for (const auto& rec : r.jobs) {
        if (rec.status != JobStatus::Completed) continue;
        CHECK(rec.start_s >= last_start);
        last_start = rec.start_s;
        CHECK(rec.start_s >= rec.arrival_s);
        CHECK(rec.finish_s == rec.start_s + (rec.finish_s - rec.start_s));
    }
    CHECK(r.completed + r.rejected == static_cast<long>(t.jobs.size()));
}

TEST_CASE("run: empty trace reports vacuous jcr") {
    Trace t;
    RunReport r = run(t, PolicyKind::FirstFit, ClusterSpec::static_torus(4, 4, 4));
    CHECK(r.jcr == 1.0);
    CHECK(r.jobs.empty());
    CHECK_THROWS_AS(utilization_cdf(r), ConfigError);
}

TEST_CASE("run: incompatible policy and cluster is a configuration error") {
    Trace t;
    CHECK_THROWS_AS(run(t, PolicyKind::RFold, ClusterSpec::static_torus(4, 4, 4)), ConfigError);
    CHECK_THROWS_AS(run(t, PolicyKind::FirstFit, ClusterSpec::reconfigurable(4, 4)), ConfigError);
}

TEST_CASE("run: determinism, byte-identical serialized reports") {
    GenConfig cfg;
    cfg.job_count = 40;
    cfg.seed = 77;
    cfg.size_scale = 32;
    cfg.extent_cap = 64;
    Trace t = generate_trace(cfg);
    RunReport r1 = run(t, PolicyKind::Reconfig, ClusterSpec::reconfigurable(8, 4));
    RunReport r2 = run(t, PolicyKind::Reconfig, ClusterSpec::reconfigurable(8, 4));
    std::ostringstream s1, s2;
    write_report_csv(r1, s1);
    write_report_csv(r2, s2);
    CHECK(s1.str() == s2.str());
    std::ostringstream j1, j2;
    write_report_json(r1, {}, j1);
    write_report_json(r2, {}, j2);
    CHECK(j1.str() == j2.str());
}

TEST_CASE("utilization_cdf: constant utilization is a single step") {
    RunReport r = report_with_samples({{0.0, 0.5}, {10.0, 0.0}});
    auto cdf = utilization_cdf(r);
    REQUIRE(cdf.size() == 1);
    CHECK(cdf[0].first == 0.5);
    CHECK(cdf[0].second == 1.0);
}

TEST_CASE("utilization_cdf: two-interval split puts p25 at 0 and p75 at 1") {
    RunReport r = report_with_samples({{0.0, 0.0}, {5.0, 1.0}, {10.0, 1.0}});
    auto cdf = utilization_cdf(r);
    REQUIRE(cdf.size() == 2);
    CHECK(cdf_value_at(cdf, 0.25) == 0.0);
    CHECK(cdf_value_at(cdf, 0.75) == 1.0);
    CHECK(time_weighted_mean_utilization(r) == doctest::Approx(0.5));
}

TEST_CASE("utilization_cdf: degenerate single-sample horizon") {
    RunReport r = report_with_samples({{3.0, 0.25}});
    auto cdf = utilization_cdf(r);
    REQUIRE(cdf.size() == 1);
    CHECK(cdf[0].first == 0.25);
    CHECK(cdf[0].second == 1.0);
}

TEST_CASE("nearest_rank: textbook values on 1..100") {
    std::vector<double> v;
    for (int i = 1; i <= 100; ++i) v.push_back(i);
    CHECK(nearest_rank(v, 50) == 50);
    CHECK(nearest_rank(v, 90) == 90);
    CHECK(nearest_rank(v, 99) == 99);
    CHECK(std::isnan(nearest_rank({}, 50)));
}

TEST_CASE("aggregate: means and single-run identity") {
    RunReport a = report_with_samples({{0.0, 0.5}, {10.0, 0.0}});
    a.jcr = 0.4;
    a.jct_s = {10, 20, 30};
    RunReport b = report_with_samples({{0.0, 0.25}, {10.0, 0.0}});
    b.jcr = 0.6;
    b.jct_s = {40};
    Summary s = aggregate({a, b});
    CHECK(s.mean_jcr == doctest::Approx(0.5));
    CHECK(s.mean_jct_p50 == doctest::Approx((20 + 40) / 2.0));

    Summary single = aggregate({a});
    CHECK(single.mean_jcr == a.jcr);
    CHECK(single.mean_jct_p50 == nearest_rank(a.jct_s, 50));
    CHECK(single.mean_utilization == doctest::Approx(time_weighted_mean_utilization(a)));

    CHECK_THROWS_AS(aggregate({}), ConfigError);
}

TEST_CASE("run: utilization samples change only at event times and stay in [0,1]") {
    GenConfig cfg;
    cfg.job_count = 30;
    cfg.seed = 5;
    cfg.size_scale = 16;
    cfg.extent_cap = 32;
    Trace t = generate_trace(cfg);
    RunReport r = run(t, PolicyKind::Folding, ClusterSpec::static_torus(8, 8, 8));
    REQUIRE(!r.utilization.empty());
    for (size_t i = 0; i < r.utilization.size(); ++i) {
        CHECK(r.utilization[i].busy_fraction >= 0.0);
        CHECK(r.utilization[i].busy_fraction <= 1.0);
        if (i > 0) CHECK(r.utilization[i].time_s > r.utilization[i - 1].time_s);
    }
    // Horizon ends at the last departure.
    double last_finish = 0;
    for (const auto& rec : r.jobs)
        if (rec.status == JobStatus::Completed) last_finish = std::max(last_finish, rec.finish_s);
    CHECK(r.utilization.back().time_s == doctest::Approx(last_finish));
    CHECK(r.utilization.back().busy_fraction == doctest::Approx(0.0));
}
