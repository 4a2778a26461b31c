#pragma once

// Minimal self-contained SVG line charts (no external assets).

#include <string>
#include <vector>

namespace copylab {

struct ChartSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartSpec {
    std::string title;
    std::string x_label = "L";
    std::string y_label = "accuracy";
    double y_min = 0.0;
    double y_max = 1.0;
};

std::string render_line_chart(const ChartSpec& spec, const std::vector<ChartSeries>& series);

}  // namespace copylab
