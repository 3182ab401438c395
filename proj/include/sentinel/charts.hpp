#pragma once

#include <string>
#include <utility>
#include <vector>

namespace sentinel::charts {

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool step = false;  // draw as a staircase (ROC style)
    bool diagonal = false;  // add the y = x reference line
    int width = 640;
    int height = 420;
};

/// Self-contained SVG line chart.
std::string line_chart(const ChartSpec& spec, const std::vector<Series>& series);

} // namespace sentinel::charts
