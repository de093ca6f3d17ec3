#include "rfold/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace rfold {

std::string Shape::to_string() const {
    std::ostringstream os;
    os << a << "x" << b << "x" << c;
    return os.str();
}

void Trace::validate() const {
    double prev = -1;
    for (size_t i = 0; i < jobs.size(); ++i) {
        const Job& j = jobs[i];
        if (j.arrival_s < 0) throw ConfigError("job " + j.id + ": negative arrival");
        if (!(j.duration_s > 0)) throw ConfigError("job " + j.id + ": duration must be positive");
        if (j.shape.a < 1 || j.shape.b < 1 || j.shape.c < 1)
            throw ConfigError("job " + j.id + ": shape extents must be positive");
        if (j.arrival_s < prev)
            throw ConfigError("trace arrivals not sorted at job " + j.id);
        prev = j.arrival_s;
    }
}

void DimProbs::validate() const {
    if (p1d < 0 || p2d < 0 || p3d < 0) throw ConfigError("dimensionality probabilities negative");
    if (std::abs(p1d + p2d + p3d - 1.0) > 1e-9)
        throw ConfigError("dimensionality probabilities must sum to 1");
}

void GenConfig::validate() const {
    if (job_count < 0) throw ConfigError("job_count negative");
    if (!(inter_arrival_mean_s > 0)) throw ConfigError("inter_arrival_mean_s must be positive");
    if (!(duration_log_sigma >= 0)) throw ConfigError("duration_log_sigma must be non-negative");
    if (!(size_scale > 0)) throw ConfigError("size_scale must be positive");
    if (size_max < 1) throw ConfigError("size_max must be >= 1");
    if (small_job_threshold < 1) throw ConfigError("small_job_threshold must be >= 1");
    if (extent_cap && *extent_cap < 1) throw ConfigError("extent_cap must be >= 1");
    try {
        small_dims.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("small_dims: ") + e.what());
    }
    try {
        large_dims.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("large_dims: ") + e.what());
    }
}

double GenConfig::analytic_size_mean() const {
    const double beta = size_scale, lo = 1.0, hi = static_cast<double>(size_max);
    const double el = std::exp(-lo / beta), eh = std::exp(-hi / beta);
    return ((lo + beta) * el - (hi + beta) * eh) / (el - eh);
}

// Inverse CDF of the exponential truncated to [lo, hi].
static double truncated_exp(double beta, double lo, double hi, double u) {
    const double el = std::exp(-lo / beta), eh = std::exp(-hi / beta);
    return -beta * std::log(el - u * (el - eh));
}

static double box_muller(Rng& rng) {
    double u1 = rng.uniform01(), u2 = rng.uniform01();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::vector<Shape> factorize(long size, int dims) {
    std::vector<Shape> out;
    if (size < 1) return out;
    if (dims <= 1) {
        out.push_back(Shape{static_cast<int>(size), 1, 1});
        return out;
    }
    if (dims == 2) {
        for (long a = 2; a * 2 <= size; ++a)
            if (size % a == 0 && size / a >= 2)
                out.push_back(Shape{static_cast<int>(a), static_cast<int>(size / a), 1});
        return out;
    }
    for (long a = 2; a * 4 <= size; ++a) {
        if (size % a) continue;
        long rest = size / a;
        for (long b = 2; b * 2 <= rest; ++b)
            if (rest % b == 0 && rest / b >= 2)
                out.push_back(
                    Shape{static_cast<int>(a), static_cast<int>(b), static_cast<int>(rest / b)});
    }
    return out;
}

Shape sample_shape(long size, int dims, std::optional<int> extent_cap, Rng& rng) {
    for (int d = std::max(dims, 1); d >= 1; --d) {
        std::vector<Shape> options = factorize(size, d);
        if (extent_cap) {
            std::erase_if(options, [&](const Shape& s) {
                return s.a > *extent_cap || s.b > *extent_cap || s.c > *extent_cap;
            });
        }
        if (!options.empty()) return options[rng.below(options.size())];
    }
    return Shape{static_cast<int>(size), 1, 1};
}

static int sample_dims(const DimProbs& p, Rng& rng) {
    double u = rng.uniform01();
    if (u < p.p1d) return 1;
    if (u < p.p1d + p.p2d) return 2;
    return 3;
}

Trace generate_trace(const GenConfig& config) {
    config.validate();
    Rng rng(config.seed);
    Trace trace;
    trace.jobs.reserve(config.job_count);
    double clock = 0;
    int width = 1;
    for (long n = config.job_count; n >= 10; n /= 10) ++width;
    for (int i = 0; i < config.job_count; ++i) {
        Job job;
        std::ostringstream id;
        id << "j";
        std::string num = std::to_string(i);
        id << std::string(width > static_cast<int>(num.size()) ? width - num.size() : 0, '0')
           << num;
        job.id = id.str();

        clock += -config.inter_arrival_mean_s * std::log(1.0 - rng.uniform01());
        job.arrival_s = clock;
        job.duration_s =
            std::exp(config.duration_log_mean + config.duration_log_sigma * box_muller(rng));

        // A size whose only shape busts the extent cap (a prime above the
        // cap) is redrawn; with the cap on, every emitted shape honors it.
        for (int attempt = 0; attempt < 100; ++attempt) {
            double raw = truncated_exp(config.size_scale, 1.0, config.size_max, rng.uniform01());
            long size = std::llround(std::floor(raw + 0.5));
            size = std::clamp<long>(size, 1, config.size_max);

            const DimProbs& table =
                size <= config.small_job_threshold ? config.small_dims : config.large_dims;
            int dims = sample_dims(table, rng);
            job.shape = sample_shape(size, dims, config.extent_cap, rng);
            if (!config.extent_cap ||
                std::max({job.shape.a, job.shape.b, job.shape.c}) <= *config.extent_cap)
                break;
        }
        trace.jobs.push_back(std::move(job));
    }
    trace.validate();
    return trace;
}

Trace load_trace(std::istream& in) {
    Trace trace;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad JSON: ") + e.what(), lineno);
        }
        try {
            Job job;
            job.id = rec.at("id").get<std::string>();
            job.arrival_s = rec.at("arrival_s").get<double>();
            job.duration_s = rec.at("duration_s").get<double>();
            auto shape = rec.at("shape");
            if (!shape.is_array() || shape.size() != 3)
                throw ParseError("shape must be a 3-element array", lineno);
            job.shape = Shape{shape[0].get<int>(), shape[1].get<int>(), shape[2].get<int>()};
            trace.jobs.push_back(std::move(job));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("bad record: ") + e.what(), lineno);
        }
    }
    trace.validate();
    return trace;
}

Trace load_trace_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open trace file: " + path);
    return load_trace(in);
}

void save_trace(const Trace& trace, std::ostream& out) {
    for (const Job& j : trace.jobs) {
        nlohmann::json rec;
        rec["id"] = j.id;
        rec["arrival_s"] = j.arrival_s;
        rec["duration_s"] = j.duration_s;
        rec["shape"] = {j.shape.a, j.shape.b, j.shape.c};
        out << rec.dump() << "\n";
    }
}

void save_trace_file(const Trace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    save_trace(trace, out);
}

}  // namespace rfold
