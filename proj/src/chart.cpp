#include "copylab/chart.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace copylab {

namespace {

const char* kPalette[] = {"#4d4dff", "#76abdf", "#0f52ba", "#fa8072", "#b80f0a",
                          "#48bf91", "#ffd500", "#082567"};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

}  // namespace

std::string render_line_chart(const ChartSpec& spec, const std::vector<ChartSeries>& series) {
    const int width = 640, height = 420;
    const int ml = 60, mr = 20, mt = 40, mb = 50;
    const double pw = width - ml - mr;
    const double ph = height - mt - mb;

    double xmin = 0.0, xmax = 1.0;
    bool first = true;
    for (const auto& s : series) {
        for (double x : s.x) {
            if (first) {
                xmin = xmax = x;
                first = false;
            }
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1.0;
    const double ymin = spec.y_min, ymax = spec.y_max;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\" "
       << "font-family=\"sans-serif\">" << spec.title << "</text>\n";

    // Axes and ticks.
    os << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
       << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double xv = xmin + (xmax - xmin) * i / 5.0;
        const double yv = ymin + (ymax - ymin) * i / 5.0;
        os << "<text x=\"" << px(xv) << "\" y=\"" << mt + ph + 18
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(xv)
           << "</text>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">" << fmt(yv)
           << "</text>\n";
        os << "<line x1=\"" << ml << "\" y1=\"" << py(yv) << "\" x2=\"" << ml + pw << "\" y2=\""
           << py(yv) << "\" stroke=\"#dddddd\" stroke-width=\"0.5\"/>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">" << spec.x_label
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" transform=\"rotate(-90 16 "
       << mt + ph / 2 << ")\">" << spec.y_label << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            os << px(series[s].x[i]) << ',' << py(std::clamp(series[s].y[i], ymin, ymax)) << ' ';
        }
        os << "\"/>\n";
        for (std::size_t i = 0; i < series[s].x.size(); ++i) {
            os << "<circle cx=\"" << px(series[s].x[i]) << "\" cy=\""
               << py(std::clamp(series[s].y[i], ymin, ymax)) << "\" r=\"3\" fill=\"" << color
               << "\"/>\n";
        }
        os << "<rect x=\"" << ml + 10 << "\" y=\"" << mt + 8 + 18 * static_cast<int>(s)
           << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
        os << "<text x=\"" << ml + 27 << "\" y=\"" << mt + 18 + 18 * static_cast<int>(s)
           << "\" font-size=\"12\" font-family=\"sans-serif\">" << series[s].label << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace copylab
