#pragma once

#include <string>
#include <vector>

namespace smac {

// One curve; when y_lo/y_hi are non-empty (same length as y) a shaded
// confidence band is drawn behind the line.
struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> y_lo;
    std::vector<double> y_hi;
};

// Hand-rolled SVG line plot: axes, ticks, legend, optional bands. Output is
// deterministic (no timestamps, fixed float formatting).
void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series, bool log_x = false);

}  // namespace smac
