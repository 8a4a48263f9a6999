#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace urnflow {

// one polyline on a chart; x and y must have equal length
struct SvgSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

// static 640x400 line chart with axes, tick labels and a legend; points that
// are not finite (or not positive on a log axis) are dropped from their line
void write_line_chart(std::ostream& out, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<SvgSeries>& series, bool log_x = false,
                      bool log_y = false);

}  // namespace urnflow
