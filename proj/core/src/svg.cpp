#include "cvgeo/svg.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "cvgeo/errors.hpp"

namespace cvgeo {

namespace {

constexpr double kW = 640.0;
constexpr double kH = 400.0;
constexpr double kPad = 50.0;

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    void add(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void widen() {
        if (lo > hi) {
            lo = 0.0;
            hi = 1.0;
        }
        if (hi == lo) hi = lo + 1.0;
    }
    double map(double v, double out_lo, double out_hi) const {
        return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
    }
};

std::ofstream open_svg(const std::string& path, const std::string& title) {
    std::ofstream f(path);
    if (!f) throw FormatError("svg: cannot open " + path, 0);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
      << "\" height=\"" << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">"
      << title << "</text>\n";
    return f;
}

}  // namespace

void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<SvgSeries>& series) {
    Range rx, ry;
    for (const auto& s : series) {
        for (double v : s.x) rx.add(v);
        for (double v : s.y) ry.add(v);
    }
    rx.widen();
    ry.widen();

    auto f = open_svg(path, title);
    f << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\""
      << kW - kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n<line x1=\"" << kPad << "\" y1=\"" << kPad
      << "\" x2=\"" << kPad << "\" y2=\"" << kH - kPad
      << "\" stroke=\"black\"/>\n";
    double legend_y = 40.0;
    for (const auto& s : series) {
        f << "<polyline fill=\"none\" stroke=\"" << s.color
          << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
            f << rx.map(s.x[i], kPad, kW - kPad) << ","
              << ry.map(s.y[i], kH - kPad, kPad) << " ";
        f << "\"/>\n";
        f << "<text x=\"" << kW - kPad - 150 << "\" y=\"" << legend_y
          << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\""
          << s.color << "\">" << s.label << "</text>\n";
        legend_y += 16.0;
    }
    f << "<text x=\"" << kPad << "\" y=\"" << kH - kPad + 16
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << rx.lo
      << "</text>\n<text x=\"" << kW - kPad << "\" y=\"" << kH - kPad + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << rx.hi << "</text>\n<text x=\"" << kPad - 4 << "\" y=\"" << kPad
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << ry.hi << "</text>\n<text x=\"" << kPad - 4 << "\" y=\"" << kH - kPad
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << ry.lo << "</text>\n</svg>\n";
}

void write_svg_bars(const std::string& path, const std::string& title,
                    const std::vector<double>& bin_centers,
                    const std::vector<double>& heights) {
    if (bin_centers.size() != heights.size())
        throw ShapeError("write_svg_bars: length mismatch");
    Range rx, ry;
    for (double v : bin_centers) rx.add(v);
    ry.add(0.0);
    for (double v : heights) ry.add(v);
    rx.widen();
    ry.widen();

    auto f = open_svg(path, title);
    double bar_w = (kW - 2 * kPad) / std::max<std::size_t>(1, heights.size());
    for (std::size_t i = 0; i < heights.size(); ++i) {
        double x = rx.map(bin_centers[i], kPad, kW - kPad) - bar_w / 2;
        double y = ry.map(heights[i], kH - kPad, kPad);
        f << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\""
          << bar_w * 0.9 << "\" height=\"" << (kH - kPad) - y
          << "\" fill=\"#1f77b4\"/>\n";
    }
    f << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\""
      << kW - kPad << "\" y2=\"" << kH - kPad << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kPad << "\" y=\"" << kH - kPad + 16
      << "\" font-family=\"sans-serif\" font-size=\"10\">" << rx.lo
      << "</text>\n<text x=\"" << kW - kPad << "\" y=\"" << kH - kPad + 16
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">"
      << rx.hi << "</text>\n</svg>\n";
}

}  // namespace cvgeo
