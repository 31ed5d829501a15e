#include "settle/svg.hpp"

#include "settle/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace settle {
namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 480;
constexpr double kLeft = 80;
constexpr double kRight = 30;
constexpr double kTop = 50;
constexpr double kBottom = 60;

std::string escape(std::string_view text) {
    std::string out;
    for (const char c : text) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

void open_svg(std::ostringstream& os, const std::string& title) {
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"#ffffff\"/>\n";
    os << "<text x=\"" << svg_coord(kWidth / 2) << "\" y=\"28\" text-anchor=\"middle\" font-size=\"16\">"
       << escape(title) << "</text>\n";
}

void line(std::ostringstream& os, double x1, double y1, double x2, double y2, const char* cls, const char* stroke,
          const char* extra = "") {
    os << "<line class=\"" << cls << "\" x1=\"" << svg_coord(x1) << "\" y1=\"" << svg_coord(y1) << "\" x2=\""
       << svg_coord(x2) << "\" y2=\"" << svg_coord(y2) << "\" stroke=\"" << stroke << "\"" << extra << "/>\n";
}

void text(std::ostringstream& os, double x, double y, const std::string& s, const char* anchor, const char* extra = "") {
    os << "<text x=\"" << svg_coord(x) << "\" y=\"" << svg_coord(y) << "\" text-anchor=\"" << anchor << "\"" << extra
       << ">" << escape(s) << "</text>\n";
}

double scatter_max(const ScatterChart& chart) {
    double m = 1.0;
    for (const double v : chart.xs) m = std::max(m, v);
    for (const double v : chart.ys) m = std::max(m, v);
    return m * 1.05;
}

int channel(const char* hex) {
    int v = 0;
    std::sscanf(hex, "%2x", &v);
    return v;
}

} // namespace

double AxisMap::operator()(double v) const {
    double t;
    if (log)
        t = (std::log10(v) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    else
        t = (v - lo) / (hi - lo);
    return pixel_lo + t * (pixel_hi - pixel_lo);
}

std::string svg_coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", std::abs(v) < 0.005 ? 0.0 : v);
    return buf;
}

std::string theta_color(std::optional<double> theta) {
    if (!theta || !std::isfinite(*theta)) return "#cccccc";
    static constexpr std::array<const char*, 3> stops = {"d7191c", "ffffbf", "1a9641"};
    const double t = std::clamp(*theta, 0.0, 1.0) * 2.0;
    const std::size_t seg = t >= 1.0 ? 1 : 0;
    const double f = t - static_cast<double>(seg);
    char out[8];
    int rgb[3];
    for (int c = 0; c < 3; ++c) {
        const int a = channel(stops[seg] + 2 * c);
        const int b = channel(stops[seg + 1] + 2 * c);
        rgb[c] = static_cast<int>(std::lround(a + f * (b - a)));
    }
    std::snprintf(out, sizeof out, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
    return out;
}

AxisMap scatter_x_axis(const ScatterChart& chart) { return {0.0, scatter_max(chart), kLeft, kWidth - kRight, false}; }
AxisMap scatter_y_axis(const ScatterChart& chart) { return {0.0, scatter_max(chart), kHeight - kBottom, kTop, false}; }

std::string scatter_svg(const ScatterChart& chart) {
    if (chart.xs.size() != chart.ys.size()) throw DomainError("scatter needs equally many x and y values");
    const AxisMap ax = scatter_x_axis(chart), ay = scatter_y_axis(chart);
    std::ostringstream os;
    open_svg(os, chart.title);
    line(os, ax.pixel_lo, ay.pixel_lo, ax.pixel_hi, ay.pixel_lo, "axis", "#000000");
    line(os, ax.pixel_lo, ay.pixel_lo, ax.pixel_lo, ay.pixel_hi, "axis", "#000000");
    for (int i = 0; i <= 5; ++i) {
        const double v = ax.hi * i / 5.0;
        line(os, ax(v), ay.pixel_lo, ax(v), ay.pixel_lo + 5, "tick", "#000000");
        text(os, ax(v), ay.pixel_lo + 18, tick_label(v), "middle");
        line(os, ax.pixel_lo - 5, ay(v), ax.pixel_lo, ay(v), "tick", "#000000");
        text(os, ax.pixel_lo - 8, ay(v) + 4, tick_label(v), "end");
    }
    line(os, ax(0), ay(0), ax(ax.hi), ay(ay.hi), "identity", "#888888", " stroke-dasharray=\"4 3\"");
    for (std::size_t i = 0; i < chart.xs.size(); ++i)
        os << "<circle class=\"point\" cx=\"" << svg_coord(ax(chart.xs[i])) << "\" cy=\"" << svg_coord(ay(chart.ys[i]))
           << "\" r=\"3\" fill=\"#2c7bb6\" fill-opacity=\"0.7\"/>\n";
    text(os, (ax.pixel_lo + ax.pixel_hi) / 2, kHeight - 15, chart.x_label, "middle");
    os << "<text x=\"20\" y=\"" << svg_coord((ay.pixel_lo + ay.pixel_hi) / 2)
       << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " << svg_coord((ay.pixel_lo + ay.pixel_hi) / 2)
       << ")\">" << escape(chart.y_label) << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

std::string choropleth_svg(std::span<const AdminRegion> regions,
                           const std::map<std::string, std::optional<double>>& theta_by_region,
                           const std::string& title) {
    std::optional<BBox> found;
    for (const auto& r : regions) {
        const auto b = bounds(r.shape);
        if (!b) continue;
        if (found)
            found->extend(*b);
        else
            found = b;
    }
    const BBox box = found.value_or(BBox{0, 0, 1, 1});
    std::ostringstream os;
    open_svg(os, title);
    const double legend = 40;
    const double avail_w = kWidth - 40, avail_h = kHeight - kTop - 20 - legend;
    const double dx = std::max(box.max_lon - box.min_lon, 1e-12), dy = std::max(box.max_lat - box.min_lat, 1e-12);
    const double s = std::min(avail_w / dx, avail_h / dy);
    const double ox = 20 + (avail_w - dx * s) / 2, oy = kTop + (avail_h - dy * s) / 2;
    for (const auto& r : regions) {
        const auto it = theta_by_region.find(r.region_id);
        const std::optional<double> theta = it == theta_by_region.end() ? std::nullopt : it->second;
        os << "<path id=\"" << escape(r.region_id) << "\" fill=\"" << theta_color(theta)
           << "\" stroke=\"#333333\" stroke-width=\"0.5\" fill-rule=\"evenodd\" d=\"";
        bool first_ring = true;
        for (const auto& poly : r.shape)
            for (const auto& ring : poly.rings) {
                for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
                    if (!first_ring || i) os << ' ';
                    os << (i == 0 ? 'M' : 'L') << svg_coord(ox + (ring[i].lon - box.min_lon) * s) << ' '
                       << svg_coord(oy + (box.max_lat - ring[i].lat) * s);
                }
                os << " Z";
                first_ring = false;
            }
        os << "\"><title>" << escape(r.name) << ": " << (theta ? tick_label(*theta) : "no data") << "</title></path>\n";
    }
    const double ly = kHeight - legend;
    for (int i = 0; i < 10; ++i) {
        os << "<rect x=\"" << svg_coord(170 + i * 30.0) << "\" y=\"" << svg_coord(ly) << "\" width=\"30\" height=\"12\" fill=\""
           << theta_color((i + 0.5) / 10.0) << "\"/>\n";
    }
    text(os, 165, ly + 10, "theta 0", "end");
    text(os, 475, ly + 10, "1", "start");
    os << "<rect x=\"520\" y=\"" << svg_coord(ly) << "\" width=\"12\" height=\"12\" fill=\"#cccccc\"/>\n";
    text(os, 537, ly + 10, "no data", "start");
    os << "</svg>\n";
    return os.str();
}

AxisMap odds_ratio_axis(std::span<const OddsRatio> ratios) {
    double lo = 1.0, hi = 1.0;
    for (const auto& r : ratios) {
        for (const double v : {r.point, r.lo, r.hi}) {
            if (!(v > 0) || !std::isfinite(v)) throw DomainError("odds ratios must be positive and finite");
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double pad = std::max((std::log10(hi) - std::log10(lo)) * 0.08, 0.02);
    return {std::pow(10.0, std::log10(lo) - pad), std::pow(10.0, std::log10(hi) + pad), 200, kWidth - kRight, true};
}

std::string odds_ratio_svg(std::span<const OddsRatio> ratios, const std::string& title) {
    const AxisMap ax = odds_ratio_axis(ratios);
    std::ostringstream os;
    open_svg(os, title);
    const double bottom = kHeight - kBottom;
    const double step = ratios.empty() ? 0.0 : (bottom - kTop) / static_cast<double>(ratios.size());
    line(os, ax.pixel_lo, bottom, ax.pixel_hi, bottom, "axis", "#000000");
    for (const double base : {1.0, 2.0, 5.0}) {
        for (int e = -4; e <= 4; ++e) {
            const double v = base * std::pow(10.0, e);
            if (v < ax.lo || v > ax.hi) continue;
            line(os, ax(v), bottom, ax(v), bottom + 5, "tick", "#000000");
            text(os, ax(v), bottom + 18, tick_label(v), "middle");
        }
    }
    line(os, ax(1.0), kTop, ax(1.0), bottom, "reference", "#888888", " stroke-dasharray=\"4 3\"");
    for (std::size_t i = 0; i < ratios.size(); ++i) {
        const auto& r = ratios[i];
        const double y = kTop + step * (static_cast<double>(i) + 0.5);
        text(os, ax.pixel_lo - 10, y + 4, r.feature, "end");
        line(os, ax(r.lo), y, ax(r.hi), y, "ci", "#000000", " stroke-width=\"1.5\"");
        line(os, ax(r.lo), y - 4, ax(r.lo), y + 4, "ci-cap", "#000000");
        line(os, ax(r.hi), y - 4, ax(r.hi), y + 4, "ci-cap", "#000000");
        os << "<circle class=\"estimate\" cx=\"" << svg_coord(ax(r.point)) << "\" cy=\"" << svg_coord(y)
           << "\" r=\"4\" fill=\"" << (r.point >= 1.0 ? "#1a9641" : "#d7191c") << "\"/>\n";
    }
    text(os, (ax.pixel_lo + ax.pixel_hi) / 2, kHeight - 15, "odds ratio (log scale)", "middle");
    os << "</svg>\n";
    return os.str();
}

} // namespace settle
