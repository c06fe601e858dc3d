#include "tvnet/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "tvnet/common.hpp"

namespace tvnet::plot {

void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<double>& x, const std::vector<Series>& series) {
    require(!x.empty() && !series.empty(), "svg: nothing to plot");
    for (const auto& s : series)
        require(s.y.size() == x.size(), "svg: series '" + s.name + "' length mismatch");

    const int width = 720, height = 400, margin = 50;
    double xmin = *std::min_element(x.begin(), x.end());
    double xmax = *std::max_element(x.begin(), x.end());
    double ymin = series[0].y[0], ymax = series[0].y[0];
    for (const auto& s : series)
        for (double v : s.y) {
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;

    auto px = [&](double v) {
        return margin + (v - xmin) / (xmax - xmin) * (width - 2 * margin);
    };
    auto py = [&](double v) {
        return height - margin - (v - ymin) / (ymax - ymin) * (height - 2 * margin);
    };

    static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

    std::ofstream os(path);
    require(bool(os), "svg: cannot open " + path);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
       << "'>\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << width / 2 << "' y='20' text-anchor='middle' font-size='14'>" << title
       << "</text>\n";
    os << "<line x1='" << margin << "' y1='" << height - margin << "' x2='" << width - margin
       << "' y2='" << height - margin << "' stroke='black'/>\n";
    os << "<line x1='" << margin << "' y1='" << margin << "' x2='" << margin << "' y2='"
       << height - margin << "' stroke='black'/>\n";
    os << "<text x='" << margin << "' y='" << height - margin + 16 << "' font-size='10'>" << xmin
       << "</text>\n<text x='" << width - margin << "' y='" << height - margin + 16
       << "' text-anchor='end' font-size='10'>" << xmax << "</text>\n";
    os << "<text x='" << margin - 4 << "' y='" << height - margin << "' text-anchor='end' "
       << "font-size='10'>" << ymin << "</text>\n<text x='" << margin - 4 << "' y='" << margin
       << "' text-anchor='end' font-size='10'>" << ymax << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        os << "<polyline fill='none' stroke='" << colors[s % 8] << "' stroke-width='1.5' points='";
        for (std::size_t i = 0; i < x.size(); ++i)
            os << px(x[i]) << "," << py(series[s].y[i]) << " ";
        os << "'/>\n";
        os << "<text x='" << width - margin + 4 << "' y='" << margin + 14 * s
           << "' font-size='10' fill='" << colors[s % 8] << "'>" << series[s].name << "</text>\n";
    }
    os << "</svg>\n";
}

}  // namespace tvnet::plot
