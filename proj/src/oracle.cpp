#include "settle/oracle.hpp"

#include "settle/error.hpp"

#include <cmath>

namespace settle::oracle {
namespace {

void check_size(const GridSpec& spec) {
    if (spec.width() > kMaxSide || spec.height() > kMaxSide)
        throw DomainError("oracle inputs are capped at 64x64 cells");
}

void check_shapes(std::span<const MultiPolygon> shapes) {
    if (shapes.size() > kMaxPolygons) throw DomainError("oracle inputs are capped at 10000 polygons");
}

struct Pt {
    double x, y;
};

// Vertex in cell units: x grows east, y grows south. Values within 1e-9 of a
// grid line count as on it, the same input rule the production path applies.
double on_line(double x) {
    const double r = std::round(x);
    return std::abs(x - r) < 1e-9 ? r : x;
}

Pt cell_point(const GridSpec& spec, const LonLat& p) {
    const double res = spec.resolution() / 3600.0;
    return {on_line((p.lon - spec.origin_lon()) / res), on_line((spec.origin_lat() - p.lat) / res)};
}

bool inside(const MultiPolygon& shape, const GridSpec& spec, Pt q) {
    bool in = false;
    for (const auto& poly : shape)
        for (const auto& ring : poly.rings)
            for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
                const Pt a = cell_point(spec, ring[i]), b = cell_point(spec, ring[i + 1]);
                if ((a.y > q.y) == (b.y > q.y)) continue;
                const double x = a.x + (q.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if (q.x < x) in = !in;
            }
    return in;
}

bool meets_open_box(Pt a, Pt b, double x0, double y0, double x1, double y1) {
    double lo = -INFINITY, hi = INFINITY;
    const double d[2] = {b.x - a.x, b.y - a.y};
    const double p[2] = {a.x, a.y};
    const double mins[2] = {x0, y0}, maxs[2] = {x1, y1};
    for (int k = 0; k < 2; ++k) {
        if (d[k] == 0.0) {
            if (!(p[k] > mins[k] && p[k] < maxs[k])) return false;
            continue;
        }
        double t0 = (mins[k] - p[k]) / d[k], t1 = (maxs[k] - p[k]) / d[k];
        if (t0 > t1) std::swap(t0, t1);
        lo = std::max(lo, t0);
        hi = std::min(hi, t1);
    }
    return lo < hi && lo < 1.0 && hi > 0.0;
}

bool touches_cell(const MultiPolygon& shape, const GridSpec& spec, std::int64_t row, std::int64_t col) {
    const double x0 = static_cast<double>(col), y0 = static_cast<double>(row);
    if (inside(shape, spec, {x0 + 0.5, y0 + 0.5})) return true;
    for (const auto& poly : shape)
        for (const auto& ring : poly.rings) {
            if (ring.size() == 1) {
                const Pt a = cell_point(spec, ring[0]);
                if (a.x > x0 && a.x < x0 + 1 && a.y > y0 && a.y < y0 + 1) return true;
            }
            for (std::size_t i = 0; i + 1 < ring.size(); ++i)
                if (meets_open_box(cell_point(spec, ring[i]), cell_point(spec, ring[i + 1]), x0, y0, x0 + 1, y0 + 1))
                    return true;
        }
    return false;
}

bool fan_centroid(const MultiPolygon& shape, double& cx, double& cy) {
    double total = 0.0, sx = 0.0, sy = 0.0;
    for (const auto& poly : shape)
        for (std::size_t k = 0; k < poly.rings.size(); ++k) {
            const Ring& ring = poly.rings[k];
            if (ring.size() < 4) continue;
            const LonLat o = ring[0];
            double ring_area = 0.0, rx = 0.0, ry = 0.0;
            for (std::size_t i = 1; i + 2 < ring.size(); ++i) {
                const LonLat b = ring[i], c = ring[i + 1];
                const double area = 0.5 * ((b.lon - o.lon) * (c.lat - o.lat) - (c.lon - o.lon) * (b.lat - o.lat));
                ring_area += area;
                rx += area * (o.lon + b.lon + c.lon) / 3.0;
                ry += area * (o.lat + b.lat + c.lat) / 3.0;
            }
            const double sign = (k == 0) == (ring_area >= 0.0) ? 1.0 : -1.0;
            total += sign * ring_area;
            sx += sign * rx;
            sy += sign * ry;
        }
    if (std::abs(total) <= 1e-18) return false;
    cx = sx / total;
    cy = sy / total;
    return true;
}

} // namespace

std::int64_t count(const BinaryRaster& x) {
    check_size(x.spec());
    std::int64_t n = 0;
    for (std::int64_t r = 0; r < x.height(); ++r)
        for (std::int64_t c = 0; c < x.width(); ++c) n += x.get(r, c) ? 1 : 0;
    return n;
}

PairCounts counts(const BinaryRaster& x, const BinaryRaster& y) {
    check_size(x.spec());
    if (!(x.spec() == y.spec())) throw AlignmentError("oracle: specs differ");
    PairCounts out;
    for (std::int64_t r = 0; r < x.height(); ++r)
        for (std::int64_t c = 0; c < x.width(); ++c) {
            const bool a = x.get(r, c), b = y.get(r, c);
            out.intersection += (a && b) ? 1 : 0;
            out.union_size += (a || b) ? 1 : 0;
        }
    return out;
}

double jaccard(const BinaryRaster& x, const BinaryRaster& y) {
    const auto c = counts(x, y);
    return c.union_size == 0 ? 1.0 : static_cast<double>(c.intersection) / static_cast<double>(c.union_size);
}

double average_overlap(std::span<const BinaryRaster> rasters) {
    double sum = 0.0;
    int pairs = 0;
    for (std::size_t i = 0; i < rasters.size(); ++i)
        for (std::size_t j = i + 1; j < rasters.size(); ++j) {
            sum += oracle::jaccard(rasters[i], rasters[j]);
            ++pairs;
        }
    if (pairs == 0) throw DomainError("oracle: need at least two rasters");
    return sum / pairs;
}

double upper_limit(const BinaryRaster& x, const BinaryRaster& y) {
    const auto a = count(x), b = count(y);
    if (a == 0 && b == 0) throw DomainError("oracle: both rasters empty");
    return static_cast<double>(std::min(a, b)) / static_cast<double>(std::max(a, b));
}

BinaryRaster blockor(const BinaryRaster& raster, int factor) {
    const auto& s = raster.spec();
    check_size(s);
    if (factor < 1) throw DomainError("oracle: factor must be positive");
    auto floor_div = [](std::int64_t a, std::int64_t b) { return a >= 0 ? a / b : -((-a + b - 1) / b); };
    const std::int64_t c0 = floor_div(s.lattice_col(), factor);
    const std::int64_t r0 = floor_div(s.lattice_row(), factor);
    const std::int64_t c1 = floor_div(s.lattice_col() + s.width() - 1, factor);
    const std::int64_t r1 = floor_div(s.lattice_row() + s.height() - 1, factor);
    BinaryRaster out(GridSpec(s.resolution() * factor, c0, r0, c1 - c0 + 1, r1 - r0 + 1));
    for (std::int64_t R = r0; R <= r1; ++R)
        for (std::int64_t C = c0; C <= c1; ++C) {
            bool any = false;
            for (std::int64_t gr = R * factor; gr < (R + 1) * factor; ++gr)
                for (std::int64_t gc = C * factor; gc < (C + 1) * factor; ++gc) {
                    const std::int64_t r = gr - s.lattice_row(), c = gc - s.lattice_col();
                    if (r >= 0 && c >= 0 && r < s.height() && c < s.width() && raster.get(r, c)) any = true;
                }
            if (any) out.set(R - r0, C - c0);
        }
    return out;
}

BinaryRaster rasterize_coverage(std::span<const MultiPolygon> shapes, const GridSpec& spec) {
    check_size(spec);
    check_shapes(shapes);
    BinaryRaster out(spec);
    for (const auto& shape : shapes)
        for (std::int64_t r = 0; r < spec.height(); ++r)
            for (std::int64_t c = 0; c < spec.width(); ++c)
                if (!out.get(r, c) && touches_cell(shape, spec, r, c)) out.set(r, c);
    return out;
}

BinaryRaster rasterize_centroid(std::span<const MultiPolygon> shapes, const GridSpec& spec) {
    check_size(spec);
    check_shapes(shapes);
    BinaryRaster out(spec);
    const double res = spec.resolution() / 3600.0;
    for (const auto& shape : shapes) {
        double lon = 0, lat = 0;
        if (!fan_centroid(shape, lon, lat)) {
            if (shape.empty() || shape.front().rings.empty() || shape.front().rings.front().empty()) continue;
            lon = shape.front().rings.front().front().lon;
            lat = shape.front().rings.front().front().lat;
        }
        for (std::int64_t r = 0; r < spec.height(); ++r)
            for (std::int64_t c = 0; c < spec.width(); ++c) {
                const double west = spec.origin_lon() + static_cast<double>(c) * res;
                const double north = spec.origin_lat() - static_cast<double>(r) * res;
                if (lon >= west && lon < west + res && lat <= north && lat > north - res) out.set(r, c);
            }
    }
    return out;
}

BinaryRaster rasterize_supersample(std::span<const MultiPolygon> shapes, const GridSpec& spec, int samples) {
    check_size(spec);
    check_shapes(shapes);
    BinaryRaster out(spec);
    for (const auto& shape : shapes)
        for (std::int64_t r = 0; r < spec.height(); ++r)
            for (std::int64_t c = 0; c < spec.width(); ++c) {
                if (out.get(r, c)) continue;
                for (int i = 0; i < samples && !out.get(r, c); ++i)
                    for (int j = 0; j < samples; ++j) {
                        const Pt q{static_cast<double>(c) + (j + 0.5) / samples, static_cast<double>(r) + (i + 0.5) / samples};
                        if (inside(shape, spec, q)) {
                            out.set(r, c);
                            break;
                        }
                    }
            }
    return out;
}

} // namespace settle::oracle
