#include "topk/chart.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "topk/errors.hpp"

namespace topk {

namespace {

constexpr double kWidth = 880, kHeight = 540;
constexpr double kLeft = 80, kRight = 30, kTop = 50, kBottom = 60;

const char* kPalette[10] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                            "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                            "#bcbd22", "#17becf"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string fmt_tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '&') out += "&amp;";
        else if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else out += c;
    }
    return out;
}

}  // namespace

std::string render_chart_svg(const std::vector<ChartSeries>& series,
                             const std::string& metric_label,
                             const std::string& title) {
    if (series.empty())
        throw InvalidConfigError("chart requires at least one series");
    std::size_t rounds = 0;
    double lo = 0.0, hi = 0.0;
    for (const auto& s : series) {
        if (s.values.empty())
            throw InvalidConfigError("chart series '" + s.label + "' is empty");
        rounds = std::max(rounds, s.values.size());
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    if (hi <= lo) hi = lo + 1.0;

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double round) {
        return kLeft + plot_w * (round - 1.0) /
                           std::max<double>(1.0, static_cast<double>(rounds) - 1.0);
    };
    auto sy = [&](double v) { return kTop + plot_h * (hi - v) / (hi - lo); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
        << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
        << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"18\">"
        << escape(title) << "</text>\n";

    // gridlines + ticks
    for (int i = 0; i <= 5; ++i) {
        const double v = lo + (hi - lo) * i / 5.0;
        const double y = sy(v);
        svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(y) << "\" x2=\""
            << fmt(kWidth - kRight) << "\" y2=\"" << fmt(y)
            << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
               "font-size=\"12\">"
            << fmt_tick(v) << "</text>\n";
    }
    for (int i = 0; i <= 5; ++i) {
        const double round = 1.0 + (static_cast<double>(rounds) - 1.0) * i / 5.0;
        const double x = sx(round);
        svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kTop) << "\" x2=\""
            << fmt(x) << "\" y2=\"" << fmt(kHeight - kBottom)
            << "\" stroke=\"#eeeeee\" stroke-width=\"1\"/>\n";
        svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kHeight - kBottom + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"12\">"
            << std::llround(round) << "</text>\n";
    }

    // axes
    svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kTop) << "\" x2=\""
        << fmt(kLeft) << "\" y2=\"" << fmt(kHeight - kBottom)
        << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    svg << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(kHeight - kBottom)
        << "\" x2=\"" << fmt(kWidth - kRight) << "\" y2=\""
        << fmt(kHeight - kBottom) << "\" stroke=\"black\" "
           "stroke-width=\"1.5\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 16
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">round</text>\n";
    svg << "<text x=\"20\" y=\"" << kHeight / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\" transform=\"rotate(-90 20 "
        << kHeight / 2 << ")\">" << escape(metric_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        svg << "<polyline fill=\"none\" stroke=\"" << kPalette[s % 10]
            << "\" stroke-width=\"1.8\" points=\"";
        const auto& vals = series[s].values;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            if (i) svg << ' ';
            svg << fmt(sx(static_cast<double>(i + 1))) << ',' << fmt(sy(vals[i]));
        }
        svg << "\"/>\n";
    }

    for (std::size_t s = 0; s < series.size(); ++s) {
        const double y = kTop + 10 + 20.0 * static_cast<double>(s);
        svg << "<rect x=\"" << fmt(kLeft + 12) << "\" y=\"" << fmt(y)
            << "\" width=\"14\" height=\"4\" fill=\"" << kPalette[s % 10]
            << "\"/>\n";
        svg << "<text x=\"" << fmt(kLeft + 32) << "\" y=\"" << fmt(y + 6)
            << "\" font-family=\"sans-serif\" font-size=\"12\">"
            << escape(series[s].label) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

void write_chart_svg_file(const std::vector<ChartSeries>& series,
                          const std::string& metric_label,
                          const std::string& title, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write chart file " + path);
    out << render_chart_svg(series, metric_label, title);
}

}  // namespace topk
