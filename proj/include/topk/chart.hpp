#pragma once

#include <string>
#include <vector>

namespace topk {

struct ChartSeries {
    std::string label;
    std::vector<double> values;  // one point per round, x = 1..T
};

// Static SVG line chart: labeled axes (round vs the given metric), one
// polyline per series, legend. Pure function of its inputs; identical inputs
// give identical bytes.
std::string render_chart_svg(const std::vector<ChartSeries>& series,
                             const std::string& metric_label,
                             const std::string& title);

void write_chart_svg_file(const std::vector<ChartSeries>& series,
                          const std::string& metric_label,
                          const std::string& title, const std::string& path);

}  // namespace topk
