#include <filesystem>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "rfold/experiment.hpp"
#include "rfold/report.hpp"
#include "rfold/shapes.hpp"

using namespace rfold;

namespace {

Shape parse_shape(const std::string& s) {
    int a, b, c;
    char x1, x2;
    std::istringstream is(s);
    if (!(is >> a >> x1 >> b >> x2 >> c) || x1 != 'x' || x2 != 'x' || a < 1 || b < 1 || c < 1)
        throw CLI::ValidationError("shape", "expected AxBxC, got '" + s + "'");
    return Shape{a, b, c};
}

ClusterSpec parse_cluster(const std::string& s) {
    // "static:16x16x16" or "cube:4:64" (cube size, cube count)
    if (s.rfind("static:", 0) == 0) {
        Shape e = parse_shape(s.substr(7));
        return ClusterSpec::static_torus(e.a, e.b, e.c);
    }
    if (s.rfind("cube:", 0) == 0) {
        std::string rest = s.substr(5);
        for (char& ch : rest)
            if (ch == 'x') ch = ':';
        int n, g;
        char sep;
        std::istringstream is(rest);
        if (!(is >> n >> sep >> g) || sep != ':' || n < 1 || g < 1)
            throw CLI::ValidationError("cluster", "expected cube:N:G, got '" + s + "'");
        return ClusterSpec::reconfigurable(g, n);
    }
    throw CLI::ValidationError("cluster", "expected static:LxLxL or cube:N:G, got '" + s + "'");
}

PolicyKind parse_policy(const std::string& s) {
    auto p = policy_from_string(s);
    if (!p)
        throw CLI::ValidationError("policy",
                                   "expected firstfit|folding|reconfig|rfold, got '" + s + "'");
    return *p;
}

struct GenFlags {
    GenConfig config;
    std::string small_dims = "0.4,0.4,0.2";
    std::string large_dims = "0.0,0.5,0.5";
    bool no_extent_cap = false;
    int extent_cap = 256;

    void attach(CLI::App* app) {
        app->add_option("--jobs", config.job_count, "jobs per generated trace")
            ->capture_default_str();
        app->add_option("--ia-mean", config.inter_arrival_mean_s,
                        "mean inter-arrival time (s, exponential)")
            ->capture_default_str();
        app->add_option("--dur-log-mean", config.duration_log_mean,
                        "log-normal duration mu (log-seconds)")
            ->capture_default_str();
        app->add_option("--dur-log-sigma", config.duration_log_sigma,
                        "log-normal duration sigma")
            ->capture_default_str();
        app->add_option("--size-scale", config.size_scale,
                        "truncated-exponential size scale")
            ->capture_default_str();
        app->add_option("--size-max", config.size_max, "largest job size")
            ->capture_default_str();
        app->add_option("--small-threshold", config.small_job_threshold,
                        "size at or below which a job is small")
            ->capture_default_str();
        app->add_option("--small-dims", small_dims, "p1d,p2d,p3d for small jobs")
            ->capture_default_str();
        app->add_option("--large-dims", large_dims, "p1d,p2d,p3d for large jobs")
            ->capture_default_str();
        app->add_option("--extent-cap", extent_cap, "per-dimension shape extent cap")
            ->capture_default_str();
        app->add_flag("--no-extent-cap", no_extent_cap, "disable the extent cap");
    }

    static DimProbs parse_probs(const std::string& s) {
        DimProbs p;
        char c1, c2;
        std::istringstream is(s);
        if (!(is >> p.p1d >> c1 >> p.p2d >> c2 >> p.p3d) || c1 != ',' || c2 != ',')
            throw CLI::ValidationError("dims", "expected p1,p2,p3, got '" + s + "'");
        return p;
    }

    GenConfig resolve(uint64_t seed) {
        config.small_dims = parse_probs(small_dims);
        config.large_dims = parse_probs(large_dims);
        config.extent_cap = no_extent_cap ? std::nullopt : std::optional<int>(extent_cap);
        config.seed = seed;
        config.validate();
        return config;
    }

    std::map<std::string, std::string> echo() const {
        std::map<std::string, std::string> m;
        m["jobs"] = std::to_string(config.job_count);
        m["ia_mean_s"] = format_double(config.inter_arrival_mean_s);
        m["dur_log_mean"] = format_double(config.duration_log_mean);
        m["dur_log_sigma"] = format_double(config.duration_log_sigma);
        m["size_scale"] = format_double(config.size_scale);
        m["size_max"] = std::to_string(config.size_max);
        m["small_threshold"] = std::to_string(config.small_job_threshold);
        m["small_dims"] = small_dims;
        m["large_dims"] = large_dims;
        m["extent_cap"] = config.extent_cap ? std::to_string(*config.extent_cap) : "off";
        m["seed"] = std::to_string(config.seed);
        return m;
    }
};

std::vector<CellSpec> parse_cells(const std::string& spec) {
    // "firstfit:static:16x16x16,rfold:cube:4:64,..."
    std::vector<CellSpec> cells;
    std::istringstream is(spec);
    std::string item;
    while (std::getline(is, item, ',')) {
        if (item.empty()) continue;
        auto colon = item.find(':');
        if (colon == std::string::npos)
            throw CLI::ValidationError("cells", "expected policy:cluster in '" + item + "'");
        CellSpec cell;
        cell.policy = parse_policy(item.substr(0, colon));
        cell.cluster = parse_cluster(item.substr(colon + 1));
        cells.push_back(cell);
    }
    if (cells.empty()) throw CLI::ValidationError("cells", "no cells given");
    return cells;
}

int cmd_gen_trace(GenFlags& gen, uint64_t seed, const std::string& out) {
    Trace trace = generate_trace(gen.resolve(seed));
    save_trace_file(trace, out);
    std::cout << "wrote " << trace.jobs.size() << " jobs to " << out << "\n";
    return 0;
}

int cmd_run(GenFlags& gen, uint64_t seed, const std::string& trace_path,
            const std::string& policy_s, const std::string& cluster_s, const std::string& out_dir,
            bool check_invariants) {
    PolicyKind policy = parse_policy(policy_s);
    ClusterSpec cluster = parse_cluster(cluster_s);
    auto echo = gen.echo();
    Trace trace;
    if (!trace_path.empty()) {
        trace = load_trace_file(trace_path);
        echo["trace"] = trace_path;
    } else {
        trace = generate_trace(gen.resolve(seed));
    }
    RunOptions opts;
    opts.check_invariants = check_invariants;
    RunReport report = run(trace, policy, cluster, opts);
    report.seed = seed;
    echo["policy"] = to_string(policy);
    echo["cluster"] = cluster.to_string();

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_report_json_file(report, echo, out_dir + "/report.json");
        write_report_csv_file(report, out_dir + "/jobs.csv");
    }
    std::ostringstream line;
    line << to_string(policy) << " on " << cluster.to_string() << ": jcr="
         << format_double(report.jcr) << " jct_p50=" << format_double(nearest_rank(report.jct_s, 50))
         << " jct_p90=" << format_double(nearest_rank(report.jct_s, 90))
         << " jct_p99=" << format_double(nearest_rank(report.jct_s, 99))
         << " util=" << format_double(time_weighted_mean_utilization(report));
    if (trace.jobs.empty()) line << " (no jobs: jcr is vacuous)";
    std::cout << line.str() << "\n";
    return 0;
}

int cmd_sweep(GenFlags& gen, uint64_t seed, const std::string& cells_s, int trials,
              const std::string& out_dir, int parallelism, bool check_invariants) {
    ExperimentConfig config;
    if (!cells_s.empty()) config.cells = parse_cells(cells_s);
    config.trials = trials;
    config.gen = gen.resolve(seed);
    config.base_seed = seed;
    config.parallelism = parallelism;
    config.check_invariants = check_invariants;

    SweepResult result = run_sweep(config);
    write_sweep_outputs(result, out_dir);
    for (const auto& cr : result.cells) {
        if (!cr.error.empty()) {
            std::cout << cr.cell.name() << ": FAILED (" << cr.error << ")\n";
            continue;
        }
        std::cout << cr.cell.name() << ": jcr=" << format_double(cr.summary.mean_jcr)
                  << " jct_p50=" << format_double(cr.summary.mean_jct_p50)
                  << " util=" << format_double(cr.summary.mean_utilization) << "\n";
    }
    std::cout << "outputs in " << out_dir << "\n";
    return result.any_failed ? 2 : 0;
}

int cmd_oracle(const std::string& shape_s, const std::string& target_s, const std::string& wrap_s,
               const std::string& mode_s, long bound) {
    Shape shape = parse_shape(shape_s);
    Shape target = parse_shape(target_s);
    std::array<bool, 3> wrap{false, false, false};
    if (wrap_s == "all") {
        wrap = {true, true, true};
    } else if (wrap_s != "none") {
        for (char c : wrap_s) {
            if (c == 'x') wrap[0] = true;
            else if (c == 'y') wrap[1] = true;
            else if (c == 'z') wrap[2] = true;
            else throw CLI::ValidationError("wrap", "expected subset of xyz, all or none");
        }
    }
    Mode mode = mode_s == "line" ? Mode::LineComplete : Mode::RingComplete;
    bool ok = brute_force_embeddable(shape, Coord{target.a, target.b, target.c}, wrap, mode,
                                     bound);
    std::cout << (ok ? "true" : "false") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Placement policies and a job-level simulator for reconfigurable 3D-torus"
                 " ML clusters"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "read options from a key=value config file");

    uint64_t seed = 1;
    app.add_option("--seed", seed, "base RNG seed")->capture_default_str();

    GenFlags gen_trace_flags, run_flags, sweep_flags;

    auto* gen = app.add_subcommand("gen-trace", "generate a synthetic trace file");
    std::string gen_out = "trace.jsonl";
    gen->add_option("--out", gen_out, "output JSONL path")->capture_default_str();
    gen_trace_flags.attach(gen);

    auto* runc = app.add_subcommand("run", "simulate one trace under one policy");
    std::string trace_path, policy_s = "rfold", cluster_s = "cube:4:64", run_out;
    bool run_check = false;
    runc->add_option("--trace", trace_path, "trace JSONL (generated when omitted)");
    runc->add_option("--policy", policy_s, "firstfit|folding|reconfig|rfold")
        ->capture_default_str();
    runc->add_option("--cluster", cluster_s, "static:LxLxL or cube:N:G")->capture_default_str();
    runc->add_option("--out-dir", run_out, "write report.json and jobs.csv here");
    runc->add_flag("--check-invariants", run_check, "deep structural checks every event");
    run_flags.attach(runc);

    auto* sweep = app.add_subcommand("sweep", "multi-seed sweep across policy/cluster cells");
    std::string cells_s, sweep_out = "sweep_out";
    int trials = 100, parallelism = 0;
    bool sweep_check = false;
    sweep->add_option("--cells", cells_s, "comma list of policy:cluster cells (default lineup)");
    sweep->add_option("--trials", trials, "trials per cell")->capture_default_str();
    sweep->add_option("--out-dir", sweep_out, "output directory")->capture_default_str();
    sweep->add_option("--parallelism", parallelism, "worker threads (0 = cores)")
        ->capture_default_str();
    sweep->add_flag("--check-invariants", sweep_check, "deep structural checks every event");
    sweep_flags.attach(sweep);

    auto* oracle = app.add_subcommand("oracle", "exhaustive small-shape embedding check");
    oracle->group("");  // test tooling; hidden from help
    std::string o_shape, o_target, o_wrap = "none", o_mode = "ring";
    long o_bound = 24;
    oracle->add_option("--shape", o_shape, "job shape AxBxC")->required();
    oracle->add_option("--target", o_target, "target torus AxBxC")->required();
    oracle->add_option("--wrap", o_wrap, "wrapped dims: subset of xyz, all, none")
        ->capture_default_str();
    oracle->add_option("--mode", o_mode, "ring|line")->capture_default_str();
    oracle->add_option("--bound", o_bound, "largest shape product accepted")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;  // usage/config errors exit 1
    }

    try {
        if (gen->parsed()) return cmd_gen_trace(gen_trace_flags, seed, gen_out);
        if (runc->parsed())
            return cmd_run(run_flags, seed, trace_path, policy_s, cluster_s, run_out, run_check);
        if (sweep->parsed())
            return cmd_sweep(sweep_flags, seed, cells_s, trials, sweep_out, parallelism,
                             sweep_check);
        if (oracle->parsed()) return cmd_oracle(o_shape, o_target, o_wrap, o_mode, o_bound);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
