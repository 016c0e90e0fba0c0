#ifndef CVGEO_SVG_HPP
#define CVGEO_SVG_HPP

#include <string>
#include <vector>

namespace cvgeo {

struct SvgSeries {
    std::string label;
    std::string color;  // e.g. "#1f77b4"
    std::vector<double> x;
    std::vector<double> y;
};

// Minimal plot writers for run reports; axes are auto-scaled.
void write_svg_lines(const std::string& path, const std::string& title,
                     const std::vector<SvgSeries>& series);

void write_svg_bars(const std::string& path, const std::string& title,
                    const std::vector<double>& bin_centers,
                    const std::vector<double>& heights);

}  // namespace cvgeo

#endif
