#pragma once

#include <string>
#include <vector>

namespace rfold {

/// Minimal self-contained SVG charts (axes, ticks, legend); no external
/// charting dependency. Output is deterministic for equal inputs.

struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series);

struct SvgBarGroup {
    std::string label;           // one cluster of bars
    std::vector<double> values;  // one value per series
};

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::string& y_label, const std::vector<std::string>& series_labels,
                     const std::vector<SvgBarGroup>& groups);

}  // namespace rfold
