#pragma once

#include <string>
#include <vector>

namespace liftlab {

struct BoxStat {
    double x = 0;
    double p10 = 0, p25 = 0, p50 = 0, p75 = 0, p90 = 0;
};

struct Series {
    std::string name;
    std::vector<double> x, y;
};

struct PlotAxes {
    std::string title, xlabel, ylabel;
    bool log_x = false, log_y = false;
};

// Self-contained SVG documents. Non-positive values are skipped on log axes
// and non-finite values are skipped everywhere.
std::string svg_box_plot(const PlotAxes& axes, const std::vector<BoxStat>& boxes);
std::string svg_line_plot(const PlotAxes& axes, const std::vector<Series>& series);

}  // namespace liftlab
