#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rfold/errors.hpp"

namespace rfold {

/// A job's (A,B,C) XPU arrangement. Stored as given; rotation is a placement
/// concern.
struct Shape {
    int a = 1, b = 1, c = 1;

    int operator[](int i) const { return i == 0 ? a : (i == 1 ? b : c); }
    int& operator[](int i) { return i == 0 ? a : (i == 1 ? b : c); }
    long size() const { return static_cast<long>(a) * b * c; }
    /// Number of extents > 1 (0 to 3).
    int dims() const { return (a > 1) + (b > 1) + (c > 1); }
    std::string to_string() const;

    auto operator<=>(const Shape&) const = default;
    bool operator==(const Shape&) const = default;
};

struct ShapeHash {
    size_t operator()(const Shape& s) const {
        return (static_cast<size_t>(s.a) * 1000003u + s.b) * 1000003u + s.c;
    }
};

struct Job {
    std::string id;
    double arrival_s = 0;
    double duration_s = 0;
    Shape shape;
};

struct Trace {
    std::vector<Job> jobs;  // sorted by arrival, ties by id

    void validate() const;  // throws ConfigError on bad records or ordering
};

/// Deterministic uniform source. All sampling goes through inverse-CDF /
/// Box-Muller on these bits so a seed fully pins the trace.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}
    /// Uniform double in [0,1), 53 bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform integer in [0, n).
    size_t below(size_t n) { return static_cast<size_t>(uniform01() * static_cast<double>(n)); }

  private:
    std::mt19937_64 engine_;
};

struct DimProbs {
    double p1d = 0, p2d = 0, p3d = 0;
    void validate() const;
};

struct GenConfig {
    int job_count = 500;
    double inter_arrival_mean_s = 60.0;  // exponential
    double duration_log_mean = 7.5;      // log-normal mu (log-seconds)
    double duration_log_sigma = 1.0;     // log-normal sigma
    // Job sizes: truncated exponential on [1, size_max], inverse-CDF sampled
    // then rounded half-up and clamped.
    double size_scale = 64.0;
    int size_max = 4096;
    int small_job_threshold = 256;
    DimProbs small_dims{0.4, 0.4, 0.2};
    DimProbs large_dims{0.0, 0.5, 0.5};
    std::optional<int> extent_cap = 256;
    uint64_t seed = 1;

    void validate() const;
    /// Analytic mean of the continuous truncated exponential (test oracle
    /// and documentation; not used by sampling).
    double analytic_size_mean() const;
};

/// Deterministic synthetic trace; a pure function of the config.
Trace generate_trace(const GenConfig& config);

/// All ordered factorizations of `size` into `dims` factors, padded with 1s:
/// dims=1 -> [(size,1,1)]; dims=2 -> (a,b,1) with a,b >= 2; dims=3 -> all
/// (a,b,c) with a,b,c >= 2. Lexicographic, no duplicates. May be empty for
/// dims >= 2 (primes, small sizes).
std::vector<Shape> factorize(long size, int dims);

/// Uniform choice over factorize(size, dims) after applying the extent cap;
/// falls back 3 -> 2 -> 1 when a level is empty. A capped-out 1D request
/// returns the bare (size,1,1).
Shape sample_shape(long size, int dims, std::optional<int> extent_cap, Rng& rng);

/// Trace files are JSONL: {"id":..,"arrival_s":..,"duration_s":..,"shape":[a,b,c]}
Trace load_trace(std::istream& in);
Trace load_trace_file(const std::string& path);
void save_trace(const Trace& trace, std::ostream& out);
void save_trace_file(const Trace& trace, const std::string& path);

}  // namespace rfold
