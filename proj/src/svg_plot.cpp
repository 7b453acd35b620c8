#include "smac/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace smac {

namespace {

constexpr int kWidth = 760;
constexpr int kHeight = 480;
constexpr int kMarginL = 70, kMarginR = 20, kMarginT = 40, kMarginB = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

void write_svg_plot(const std::string& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<PlotSeries>& series, bool log_x) {
    if (series.empty()) throw std::invalid_argument("write_svg_plot: no series");

    auto tx = [&](double x) { return log_x ? std::log10(std::max(x, 1e-300)) : x; };

    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& s : series) {
        for (double x : s.x) {
            xmin = std::min(xmin, tx(x));
            xmax = std::max(xmax, tx(x));
        }
        for (double y : s.y) {
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
        }
        for (double y : s.y_lo) ymin = std::min(ymin, y);
        for (double y : s.y_hi) ymax = std::max(ymax, y);
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    if (ymax <= ymin) ymax = ymin + 1.0;
    double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    double pw = kWidth - kMarginL - kMarginR;
    double ph = kHeight - kMarginT - kMarginB;
    auto px = [&](double x) { return kMarginL + (tx(x) - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return kMarginT + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open svg for writing: " + path);

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";

    // axes box and ticks
    out << "<rect x=\"" << kMarginL << "\" y=\"" << kMarginT << "\" width=\"" << pw
        << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        double fx = xmin + (xmax - xmin) * i / 5.0;
        double fy = ymin + (ymax - ymin) * i / 5.0;
        double gx = kMarginL + pw * i / 5.0;
        double gy = kMarginT + ph - ph * i / 5.0;
        out << "<line x1=\"" << gx << "\" y1=\"" << kMarginT + ph << "\" x2=\"" << gx << "\" y2=\""
            << kMarginT + ph + 5 << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << gx << "\" y=\"" << kMarginT + ph + 18
            << "\" text-anchor=\"middle\">" << (log_x ? "1e" + num(fx) : num(fx)) << "</text>\n";
        out << "<line x1=\"" << kMarginL - 5 << "\" y1=\"" << gy << "\" x2=\"" << kMarginL
            << "\" y2=\"" << gy << "\" stroke=\"#444\"/>\n";
        out << "<text x=\"" << kMarginL - 8 << "\" y=\"" << gy + 4
            << "\" text-anchor=\"end\">" << num(fy) << "</text>\n";
    }
    out << "<text x=\"" << kMarginL + pw / 2 << "\" y=\"" << kHeight - 12
        << "\" text-anchor=\"middle\">" << x_label << "</text>\n";
    out << "<text x=\"18\" y=\"" << kMarginT + ph / 2
        << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << kMarginT + ph / 2 << ")\">"
        << y_label << "</text>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        const char* color = kPalette[si % 6];
        if (!s.y_lo.empty() && s.y_lo.size() == s.y.size() && s.y_hi.size() == s.y.size()) {
            out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i)
                out << num(px(s.x[i])) << "," << num(py(s.y_hi[i])) << " ";
            for (std::size_t i = s.x.size(); i-- > 0;)
                out << num(px(s.x[i])) << "," << num(py(s.y_lo[i])) << " ";
            out << "\"/>\n";
        }
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            out << num(px(s.x[i])) << "," << num(py(s.y[i])) << " ";
        out << "\"/>\n";
        // legend
        double ly = kMarginT + 16.0 + 18.0 * static_cast<double>(si);
        out << "<line x1=\"" << kMarginL + pw - 130 << "\" y1=\"" << ly << "\" x2=\""
            << kMarginL + pw - 105 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kMarginL + pw - 100 << "\" y=\"" << ly + 4 << "\">" << s.label
            << "</text>\n";
    }
    out << "</svg>\n";
}

}  // namespace smac
