#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "rfold/simulator.hpp"

namespace rfold {

/// Shortest round-trip decimal form of a double (deterministic output files).
std::string format_double(double v);

/// Full report: policy, cluster, seed, the resolved configuration used to
/// produce it, per-job records and the utilization series.
void write_report_json(const RunReport& report,
                       const std::map<std::string, std::string>& config_echo, std::ostream& out);

/// Per-job rows: id,status,arrival_s,start_s,finish_s,mode,cubes_used,circuits_used
void write_report_csv(const RunReport& report, std::ostream& out);

void write_report_json_file(const RunReport& report,
                            const std::map<std::string, std::string>& config_echo,
                            const std::string& path);
void write_report_csv_file(const RunReport& report, const std::string& path);

}  // namespace rfold
