#include "pixelcourt/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace pixelcourt {

namespace {

const cv::Scalar kPalette[] = {{180, 119, 31}, {14, 127, 255}, {44, 160, 44}, {40, 39, 214}, {189, 103, 148}};

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

}  // namespace

void render_line_plot(const std::vector<Series>& series, const PlotStyle& style, const std::filesystem::path& path) {
    double x_lo = std::numeric_limits<double>::infinity();
    double x_hi = -x_lo;
    double y_lo = style.y_lo;
    double y_hi = style.y_hi;
    const bool fit_y = !(y_lo < y_hi);
    if (fit_y) {
        y_lo = std::numeric_limits<double>::infinity();
        y_hi = -y_lo;
    }
    for (const auto& s : series) {
        if (s.x.size() != s.y.size()) {
            throw std::invalid_argument("plot series " + s.label + ": x and y differ in length");
        }
        for (size_t i = 0; i < s.x.size(); ++i) {
            x_lo = std::min(x_lo, s.x[i]);
            x_hi = std::max(x_hi, s.x[i]);
            if (fit_y) {
                y_lo = std::min(y_lo, s.y[i]);
                y_hi = std::max(y_hi, s.y[i]);
            }
        }
    }
    if (!std::isfinite(x_lo)) {
        x_lo = 0.0;
        x_hi = 1.0;
    }
    if (!std::isfinite(y_lo)) {
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if (x_hi <= x_lo) x_hi = x_lo + 1.0;
    if (y_hi <= y_lo) y_hi = y_lo + 1.0;

    cv::Mat img(style.height, style.width, CV_8UC3, cv::Scalar(255, 255, 255));
    const int left = 64, right = 20, top = 48, bottom = 52;
    const int pw = style.width - left - right;
    const int ph = style.height - top - bottom;
    auto px = [&](double x) { return left + static_cast<int>(std::lround((x - x_lo) / (x_hi - x_lo) * pw)); };
    auto py = [&](double y) { return top + ph - static_cast<int>(std::lround((y - y_lo) / (y_hi - y_lo) * ph)); };

    const auto font = cv::FONT_HERSHEY_SIMPLEX;
    const cv::Scalar ink(40, 40, 40);
    const cv::Scalar grid(225, 225, 225);
    for (int i = 0; i <= 5; ++i) {
        const double yv = y_lo + (y_hi - y_lo) * i / 5.0;
        const double xv = x_lo + (x_hi - x_lo) * i / 5.0;
        cv::line(img, {left, py(yv)}, {left + pw, py(yv)}, grid, 1);
        cv::line(img, {px(xv), top}, {px(xv), top + ph}, grid, 1);
        cv::putText(img, tick_label(yv), {6, py(yv) + 4}, font, 0.38, ink, 1, cv::LINE_AA);
        cv::putText(img, tick_label(xv), {px(xv) - 12, top + ph + 16}, font, 0.38, ink, 1, cv::LINE_AA);
    }
    cv::rectangle(img, {left, top}, {left + pw, top + ph}, ink, 1);
    cv::putText(img, style.title, {left, 22}, font, 0.55, ink, 1, cv::LINE_AA);
    cv::putText(img, style.x_label, {left + pw / 2 - 30, style.height - 12}, font, 0.45, ink, 1, cv::LINE_AA);
    cv::putText(img, style.y_label, {6, top - 14}, font, 0.4, ink, 1, cv::LINE_AA);

    for (size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const auto color = kPalette[k % std::size(kPalette)];
        std::vector<cv::Point> pts;
        for (size_t i = 0; i < s.x.size(); ++i) {
            pts.emplace_back(px(s.x[i]), py(s.y[i]));
        }
        if (pts.size() > 1) {
            cv::polylines(img, pts, false, color, 2, cv::LINE_AA);
        }
        for (const auto& p : pts) {
            cv::circle(img, p, 3, color, cv::FILLED, cv::LINE_AA);
        }
        const int ly = top + 14 + static_cast<int>(k) * 16;
        cv::line(img, {left + pw - 120, ly - 4}, {left + pw - 100, ly - 4}, color, 2);
        cv::putText(img, s.label, {left + pw - 95, ly}, font, 0.4, ink, 1, cv::LINE_AA);
    }

    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!cv::imwrite(path.string(), img)) {
        throw std::runtime_error("cannot write plot: " + path.string());
    }
}

}  // namespace pixelcourt
