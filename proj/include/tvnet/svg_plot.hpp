#pragma once

#include <string>
#include <vector>

namespace tvnet::plot {

struct Series {
    std::string name;
    std::vector<double> y;
};

// Minimal line chart, one polyline per series over a shared x axis.
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<double>& x, const std::vector<Series>& series);

}  // namespace tvnet::plot
