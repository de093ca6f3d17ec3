#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <map>
#include <sstream>

#include "rfold/workload.hpp"

using namespace rfold;

namespace {

// Independent enumeration for the factorize oracle: plain triple loop.
std::vector<Shape> brute_factorizations(long size, int dims) {
    std::vector<Shape> out;
    if (dims == 1) {
        out.push_back({static_cast<int>(size), 1, 1});
        return out;
    }
    for (int a = 1; a <= size; ++a) {
        if (size % a) continue;
        for (int b = 1; a * static_cast<long>(b) <= size; ++b) {
            if ((size / a) % b) continue;
            long c = size / a / b;
            Shape s{a, b, static_cast<int>(c)};
            if (dims == 2 && (a < 2 || b < 2 || c != 1)) continue;
            if (dims == 3 && (a < 2 || b < 2 || c < 2)) continue;
            out.push_back(s);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("factorize matches exhaustive enumeration") {
    auto got = factorize(24, 3);
    auto want = brute_factorizations(24, 3);
    std::sort(want.begin(), want.end());
    auto sorted = got;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == want);
    CHECK(got.size() == 9);  // (2,2,6) x3 orderings + (2,3,4) x6
    CHECK(std::count(got.begin(), got.end(), Shape{2, 3, 4}) == 1);
    CHECK(std::count(got.begin(), got.end(), Shape{4, 2, 3}) == 1);
}

TEST_CASE("factorize edge cases") {
    CHECK(factorize(7, 2).empty());
    CHECK(factorize(18, 1) == std::vector<Shape>{Shape{18, 1, 1}});
    CHECK(factorize(1, 3).empty());
    CHECK(factorize(8, 3) == std::vector<Shape>{Shape{2, 2, 2}});
    // product invariant + no duplicates, sizes 1..64, all dims
    for (long size = 1; size <= 64; ++size)
        for (int d = 1; d <= 3; ++d) {
            auto fs = factorize(size, d);
            auto copy = fs;
            std::sort(copy.begin(), copy.end());
            CHECK(std::adjacent_find(copy.begin(), copy.end()) == copy.end());
            for (const auto& s : fs) CHECK(s.size() == size);
        }
}

TEST_CASE("sample_shape: prime 2D request falls back to 1D") {
    Rng rng(3);
    CHECK(sample_shape(7, 2, std::nullopt, rng) == Shape{7, 1, 1});
    CHECK(sample_shape(1, 3, std::nullopt, rng) == Shape{1, 1, 1});
}

TEST_CASE("sample_shape: uniform over the factorization list") {
    Rng rng(12345);
    std::map<Shape, long> counts;
    const long draws = 100000;
    for (long i = 0; i < draws; ++i) counts[sample_shape(24, 3, std::nullopt, rng)]++;
    CHECK(counts.size() == 9);
    for (const auto& [s, n] : counts) {
        double freq = static_cast<double>(n) / draws;
        CHECK(freq == doctest::Approx(1.0 / 9).epsilon(0.02 * 9));  // 1/9 +- 2% absolute-ish
        CHECK(std::abs(freq - 1.0 / 9) < 0.02);
    }
}

TEST_CASE("sample_shape: extent cap filters before the draw") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        Shape s = sample_shape(512, 2, 128, rng);
        CHECK(s.a <= 128);
        CHECK(s.b <= 128);
        CHECK(s.size() == 512);
        CHECK(s.dims() == 2);
    }
    // Cap that kills every 2D option falls through to 1D (which it also
    // kills), ending at the bare 1D shape.
    Shape s = sample_shape(509, 2, 16, rng);  // 509 is prime
    CHECK(s == Shape{509, 1, 1});
}

TEST_CASE("generate_trace: deterministic for a fixed seed") {
    GenConfig cfg;
    cfg.job_count = 200;
    cfg.seed = 42;
    Trace t1 = generate_trace(cfg);
    Trace t2 = generate_trace(cfg);
    std::ostringstream s1, s2;
    save_trace(t1, s1);
    save_trace(t2, s2);
    CHECK(s1.str() == s2.str());
    cfg.seed = 43;
    std::ostringstream s3;
    save_trace(generate_trace(cfg), s3);
    CHECK(s1.str() != s3.str());
}

TEST_CASE("generate_trace: sizes stay inside [1, size_max]") {
    GenConfig cfg;
    cfg.job_count = 10000;
    cfg.extent_cap = std::nullopt;
    cfg.seed = 7;
    Trace t = generate_trace(cfg);
    for (const Job& j : t.jobs) {
        CHECK(j.shape.size() >= 1);
        CHECK(j.shape.size() <= 4096);
        CHECK(j.duration_s > 0);
    }
    // arrivals are non-decreasing
    for (size_t i = 1; i < t.jobs.size(); ++i)
        CHECK(t.jobs[i].arrival_s >= t.jobs[i - 1].arrival_s);
}

TEST_CASE("generate_trace: dimensionality follows the size-class tables") {
    GenConfig cfg;
    cfg.job_count = 4000;
    cfg.seed = 99;
    cfg.small_dims = {1.0, 0.0, 0.0};
    cfg.large_dims = {0.0, 0.0, 1.0};
    cfg.extent_cap = std::nullopt;
    Trace t = generate_trace(cfg);
    for (const Job& j : t.jobs) {
        long size = j.shape.size();
        if (size <= cfg.small_job_threshold) {
            CHECK(j.shape.dims() <= 1);  // 1D table, (s,1,1)
        } else if (!factorize(size, 3).empty()) {
            CHECK(j.shape.dims() == 3);  // large table says 3D and 3D exists
        }
    }
}

TEST_CASE("generate_trace: truncated-exponential mean tracks the analytic value") {
    GenConfig cfg;
    cfg.job_count = 100000;
    cfg.seed = 2024;
    cfg.extent_cap = std::nullopt;
    Trace t = generate_trace(cfg);
    double mean = 0;
    for (const Job& j : t.jobs) mean += static_cast<double>(j.shape.size());
    mean /= static_cast<double>(t.jobs.size());
    double want = cfg.analytic_size_mean();
    CHECK(std::abs(mean - want) / want < 0.05);
}

TEST_CASE("generate_trace: bad configs rejected") {
    GenConfig cfg;
    cfg.size_scale = 0;
    CHECK_THROWS_AS(generate_trace(cfg), ConfigError);
    GenConfig cfg2;
    cfg2.small_dims = {0.5, 0.2, 0.2};
    CHECK_THROWS_AS(generate_trace(cfg2), ConfigError);
}

TEST_CASE("trace files: single record round trip") {
    std::istringstream in(
        R"({"id":"a","arrival_s":1.5,"duration_s":100.0,"shape":[4,6,1]})" "\n");
    Trace t = load_trace(in);
    REQUIRE(t.jobs.size() == 1);
    CHECK(t.jobs[0].id == "a");
    CHECK(t.jobs[0].shape == Shape{4, 6, 1});
    std::ostringstream out;
    save_trace(t, out);
    std::istringstream again(out.str());
    Trace t2 = load_trace(again);
    CHECK(t2.jobs.size() == 1);
    CHECK(t2.jobs[0].arrival_s == t.jobs[0].arrival_s);
    CHECK(t2.jobs[0].shape == t.jobs[0].shape);
}

TEST_CASE("trace files: generated trace round trips exactly") {
    GenConfig cfg;
    cfg.job_count = 300;
    cfg.seed = 5;
    Trace t = generate_trace(cfg);
    std::ostringstream out;
    save_trace(t, out);
    std::istringstream in(out.str());
    Trace back = load_trace(in);
    REQUIRE(back.jobs.size() == t.jobs.size());
    for (size_t i = 0; i < t.jobs.size(); ++i) {
        CHECK(back.jobs[i].id == t.jobs[i].id);
        CHECK(back.jobs[i].arrival_s == t.jobs[i].arrival_s);
        CHECK(back.jobs[i].duration_s == t.jobs[i].duration_s);
        CHECK(back.jobs[i].shape == t.jobs[i].shape);
    }
}

TEST_CASE("trace files: errors carry line numbers") {
    std::istringstream empty("");
    CHECK(load_trace(empty).jobs.empty());

    std::istringstream bad_json("{\"id\":\"a\"\n");
    try {
        load_trace(bad_json);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line_number == 1);
    }

    std::istringstream zero_duration(
        R"({"id":"a","arrival_s":0,"duration_s":0,"shape":[1,1,1]})" "\n");
    CHECK_THROWS_AS(load_trace(zero_duration), ConfigError);

    std::istringstream unsorted(
        R"({"id":"a","arrival_s":5,"duration_s":1,"shape":[1,1,1]})" "\n"
        R"({"id":"b","arrival_s":2,"duration_s":1,"shape":[1,1,1]})" "\n");
    CHECK_THROWS_AS(load_trace(unsorted), ConfigError);
}
