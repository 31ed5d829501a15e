#pragma once

#include "settle/mlcore.hpp"
#include "settle/vector_io.hpp"

#include <map>
#include <optional>
#include <span>
#include <string>

namespace settle {

/// Maps a data interval onto a pixel interval, optionally on a log10 scale.
struct AxisMap {
    double lo = 0.0;
    double hi = 1.0;
    double pixel_lo = 0.0;
    double pixel_hi = 1.0;
    bool log = false;

    double operator()(double v) const;
};

/// Pixel coordinates are written with two decimals.
std::string svg_coord(double v);

/// theta 0 -> #d7191c, 0.5 -> #ffffbf, 1 -> #1a9641 (linear in RGB between stops); missing -> #cccccc.
std::string theta_color(std::optional<double> theta);

struct ScatterChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<double> xs;
    std::vector<double> ys;
};

/// Both axes share one range starting at 0 so the dashed y = x line is the diagonal.
AxisMap scatter_x_axis(const ScatterChart& chart);
AxisMap scatter_y_axis(const ScatterChart& chart);
std::string scatter_svg(const ScatterChart& chart);

/// Equirectangular map of the regions, one path per region, filled by theta_color.
std::string choropleth_svg(std::span<const AdminRegion> regions,
                           const std::map<std::string, std::optional<double>>& theta_by_region,
                           const std::string& title);

/// Horizontal log-scale chart of point estimates with interval whiskers and a line at 1.
AxisMap odds_ratio_axis(std::span<const OddsRatio> ratios);
std::string odds_ratio_svg(std::span<const OddsRatio> ratios, const std::string& title);

} // namespace settle
