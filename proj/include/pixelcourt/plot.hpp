#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace pixelcourt {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct PlotStyle {
    std::string title;
    std::string x_label;
    std::string y_label;
    int width = 640;
    int height = 420;
    /// Fixed y range; when lo >= hi the range is fitted to the data.
    double y_lo = 0.0;
    double y_hi = 1.0;
};

/// Line plot with markers, axes, ticks and a legend, written as PNG.
void render_line_plot(const std::vector<Series>& series, const PlotStyle& style, const std::filesystem::path& path);

}  // namespace pixelcourt
