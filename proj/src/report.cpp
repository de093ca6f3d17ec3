#include "rfold/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "json.hpp"

namespace rfold {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_report_json(const RunReport& report,
                       const std::map<std::string, std::string>& config_echo,
                       std::ostream& out) {
    nlohmann::json j;
    j["policy"] = to_string(report.policy);
    j["cluster"] = report.spec.to_string();
    j["seed"] = report.seed;
    j["config"] = config_echo;
    j["jcr"] = report.jcr;
    j["completed"] = report.completed;
    j["rejected"] = report.rejected;
    j["mean_utilization"] = time_weighted_mean_utilization(report);
    nlohmann::json jobs = nlohmann::json::array();
    for (const auto& rec : report.jobs) {
        nlohmann::json r;
        r["id"] = rec.id;
        r["status"] = to_string(rec.status);
        r["arrival_s"] = rec.arrival_s;
        if (rec.status == JobStatus::Completed) {
            r["start_s"] = rec.start_s;
            r["finish_s"] = rec.finish_s;
            r["mode"] = to_string(rec.mode);
            r["cubes_used"] = rec.cubes_used;
            r["circuits_used"] = rec.circuits_used;
            r["variant"] = rec.variant_kind;
        }
        jobs.push_back(std::move(r));
    }
    j["jobs"] = std::move(jobs);
    nlohmann::json util = nlohmann::json::array();
    for (const auto& s : report.utilization) util.push_back({s.time_s, s.busy_fraction});
    j["utilization"] = std::move(util);
    out << j.dump(2) << "\n";
}

void write_report_csv(const RunReport& report, std::ostream& out) {
    out << "id,status,arrival_s,start_s,finish_s,mode,cubes_used,circuits_used\n";
    for (const auto& rec : report.jobs) {
        out << rec.id << "," << to_string(rec.status) << "," << format_double(rec.arrival_s)
            << ",";
        if (rec.status == JobStatus::Completed) {
            out << format_double(rec.start_s) << "," << format_double(rec.finish_s) << ","
                << to_string(rec.mode) << "," << rec.cubes_used << "," << rec.circuits_used;
        } else {
            out << ",,,,";
        }
        out << "\n";
    }
}

void write_report_json_file(const RunReport& report,
                            const std::map<std::string, std::string>& config_echo,
                            const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    write_report_json(report, config_echo, out);
}

void write_report_csv_file(const RunReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open output file: " + path);
    write_report_csv(report, out);
}

}  // namespace rfold
