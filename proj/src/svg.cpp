#include "rfold/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rfold/errors.hpp"
#include "rfold/report.hpp"

namespace rfold {

namespace {

constexpr int kWidth = 820, kHeight = 520;
constexpr int kLeft = 70, kRight = 180, kTop = 50, kBottom = 60;

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) { return format_double(std::round(v * 100.0) / 100.0); }

struct Canvas {
    std::ostringstream body;

    void text(double x, double y, const std::string& s, const std::string& anchor = "start",
              int size = 12) {
        body << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
             << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s
             << "</text>\n";
    }
    void line(double x1, double y1, double x2, double y2, const std::string& stroke = "#444") {
        body << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
             << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\"/>\n";
    }
    void rect(double x, double y, double w, double h, const std::string& fill) {
        body << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
             << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
    }
    void save(const std::string& path) {
        std::ofstream out(path);
        if (!out) throw ConfigError("cannot open output file: " + path);
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
            << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
            << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
            << body.str() << "</svg>\n";
    }
};

double nice_step(double range) {
    if (range <= 0) return 1;
    double raw = range / 6.0;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (raw <= m * mag) return m * mag;
    return 10 * mag;
}

}  // namespace

void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series) {
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool first = true;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            if (first) {
                xmin = xmax = x;
                ymin = ymax = y;
                first = false;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kTop + ph - (y - ymin) / (ymax - ymin) * ph; };

    Canvas c;
    c.text(kWidth / 2.0, 24, title, "middle", 16);
    c.line(kLeft, kTop + ph, kLeft + pw, kTop + ph);
    c.line(kLeft, kTop, kLeft, kTop + ph);
    const double xs = nice_step(xmax - xmin), ys = nice_step(ymax - ymin);
    for (double x = std::ceil(xmin / xs) * xs; x <= xmax + 1e-9; x += xs) {
        c.line(px(x), kTop + ph, px(x), kTop + ph + 5);
        c.text(px(x), kTop + ph + 20, format_double(std::round(x * 1000) / 1000), "middle", 11);
    }
    for (double y = std::ceil(ymin / ys) * ys; y <= ymax + 1e-9; y += ys) {
        c.line(kLeft - 5, py(y), kLeft, py(y));
        c.text(kLeft - 8, py(y) + 4, format_double(std::round(y * 1000) / 1000), "end", 11);
    }
    c.text(kLeft + pw / 2, kHeight - 14, x_label, "middle");
    c.text(18, kTop - 14, y_label, "start");

    for (size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % 8];
        std::ostringstream pts;
        for (auto [x, y] : series[i].points) pts << num(px(x)) << "," << num(py(y)) << " ";
        c.body << "<polyline fill=\"none\" stroke=\"" << color
               << "\" stroke-width=\"2\" points=\"" << pts.str() << "\"/>\n";
        double ly = kTop + 18.0 * i;
        c.line(kLeft + pw + 14, ly, kLeft + pw + 38, ly, color);
        c.text(kLeft + pw + 44, ly + 4, series[i].label, "start", 11);
    }
    c.save(path);
}

void write_bar_chart(const std::string& path, const std::string& title,
                     const std::string& y_label, const std::vector<std::string>& series_labels,
                     const std::vector<SvgBarGroup>& groups) {
    double ymax = 1;
    for (const auto& g : groups)
        for (double v : g.values) ymax = std::max(ymax, v);

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto py = [&](double y) { return kTop + ph - y / ymax * ph; };

    Canvas c;
    c.text(kWidth / 2.0, 24, title, "middle", 16);
    c.line(kLeft, kTop + ph, kLeft + pw, kTop + ph);
    c.line(kLeft, kTop, kLeft, kTop + ph);
    const double ys = nice_step(ymax);
    for (double y = 0; y <= ymax + 1e-9; y += ys) {
        c.line(kLeft - 5, py(y), kLeft, py(y));
        c.text(kLeft - 8, py(y) + 4, format_double(std::round(y * 100) / 100), "end", 11);
    }
    c.text(18, kTop - 14, y_label, "start");

    const size_t ng = groups.size(), ns = series_labels.size();
    if (ng && ns) {
        const double group_w = pw / ng;
        const double bar_w = group_w * 0.8 / ns;
        for (size_t gi = 0; gi < ng; ++gi) {
            double gx = kLeft + group_w * gi + group_w * 0.1;
            for (size_t si = 0; si < ns && si < groups[gi].values.size(); ++si) {
                double v = groups[gi].values[si];
                c.rect(gx + bar_w * si, py(v), bar_w - 1, kTop + ph - py(v), kPalette[si % 8]);
            }
            c.text(gx + group_w * 0.4, kTop + ph + 20, groups[gi].label, "middle", 11);
        }
        for (size_t si = 0; si < ns; ++si) {
            double ly = kTop + 18.0 * si;
            c.rect(kLeft + pw + 14, ly - 8, 24, 10, kPalette[si % 8]);
            c.text(kLeft + pw + 44, ly + 2, series_labels[si], "start", 11);
        }
    }
    c.save(path);
}

}  // namespace rfold
