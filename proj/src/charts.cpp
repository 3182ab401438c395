#include "sentinel/charts.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace sentinel::charts {

namespace {

std::string esc(const std::string& s) {
    std::string o;
    for (char c : s) {
        switch (c) {
        case '<': o += "&lt;"; break;
        case '>': o += "&gt;"; break;
        case '&': o += "&amp;"; break;
        case '"': o += "&quot;"; break;
        default: o.push_back(c);
        }
    }
    return o;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

} // namespace

std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series) {
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : series)
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    y0 = std::min(y0, 0.0);
    if (x1 <= x0) x1 = x0 + 1;
    if (y1 <= y0) y1 = y0 + 1;

    const double left = 64, right = 20, top = 36, bottom = 48;
    const double pw = spec.width - left - right, ph = spec.height - top - bottom;
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + ph - (y - y0) / (y1 - y0) * ph; };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\"" << spec.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << spec.width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << esc(spec.title)
      << "</text>\n";
    o << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
        o << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"middle\">"
          << tick(xv) << "</text>\n";
        o << "<text x=\"" << num(left - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">" << tick(yv)
          << "</text>\n";
    }
    o << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << spec.height - 10 << "\" text-anchor=\"middle\">"
      << esc(spec.x_label) << "</text>\n";
    o << "<text transform=\"translate(14," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << esc(spec.y_label) << "</text>\n";
    if (spec.diagonal)
        o << "<line x1=\"" << num(px(x0)) << "\" y1=\"" << num(py(x0)) << "\" x2=\"" << num(px(x1)) << "\" y2=\""
          << num(py(x1)) << "\" stroke=\"#999\" stroke-dasharray=\"4 4\"/>\n";

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& s = series[si];
        o << "<polyline fill=\"none\" stroke=\"" << kPalette[si % 6] << "\" stroke-width=\"1.5\" points=\"";
        bool first = true;
        double prev_y = 0;
        for (auto [x, y] : s.points) {
            if (!std::isfinite(x) || !std::isfinite(y)) continue;
            if (spec.step && !first) o << num(px(x)) << ',' << num(py(prev_y)) << ' ';
            o << num(px(x)) << ',' << num(py(y)) << ' ';
            prev_y = y;
            first = false;
        }
        o << "\"/>\n";
        o << "<text x=\"" << num(left + 8) << "\" y=\"" << num(top + 16 + 14.0 * si) << "\" fill=\"" << kPalette[si % 6]
          << "\">" << esc(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

} // namespace sentinel::charts
