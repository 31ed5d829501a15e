#include "settle/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace settle {

void BBox::extend(const BBox& o) noexcept {
    min_lon = std::min(min_lon, o.min_lon);
    min_lat = std::min(min_lat, o.min_lat);
    max_lon = std::max(max_lon, o.max_lon);
    max_lat = std::max(max_lat, o.max_lat);
}

void close_ring(Ring& ring) {
    if (ring.size() >= 3 && !(ring.front() == ring.back())) ring.push_back(ring.front());
}

std::optional<BBox> bounds(const Polygon& polygon) {
    std::optional<BBox> box;
    for (const auto& ring : polygon.rings) {
        for (const auto& p : ring) {
            const BBox b{p.lon, p.lat, p.lon, p.lat};
            if (box)
                box->extend(b);
            else
                box = b;
        }
    }
    return box;
}

std::optional<BBox> bounds(const MultiPolygon& shape) {
    std::optional<BBox> box;
    for (const auto& polygon : shape) {
        if (auto b = bounds(polygon)) {
            if (box)
                box->extend(*b);
            else
                box = b;
        }
    }
    return box;
}

double signed_area(const Ring& ring) {
    if (ring.size() < 3) return 0.0;
    // Shift to the first vertex to limit cancellation at large coordinates.
    const LonLat o = ring.front();
    double twice = 0.0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const double x0 = ring[i].lon - o.lon, y0 = ring[i].lat - o.lat;
        const double x1 = ring[i + 1].lon - o.lon, y1 = ring[i + 1].lat - o.lat;
        twice += x0 * y1 - x1 * y0;
    }
    return 0.5 * twice;
}

double area(const Polygon& polygon) {
    if (polygon.rings.empty()) return 0.0;
    double a = std::abs(signed_area(polygon.rings.front()));
    for (std::size_t i = 1; i < polygon.rings.size(); ++i) a -= std::abs(signed_area(polygon.rings[i]));
    return a;
}

double area(const MultiPolygon& shape) {
    double a = 0.0;
    for (const auto& p : shape) a += area(p);
    return a;
}

std::optional<LonLat> area_centroid(const MultiPolygon& shape) {
    const auto box = bounds(shape);
    if (!box) return std::nullopt;
    const LonLat o{box->min_lon, box->min_lat};
    double total = 0.0, sx = 0.0, sy = 0.0;
    for (const auto& polygon : shape) {
        for (std::size_t k = 0; k < polygon.rings.size(); ++k) {
            const Ring& ring = polygon.rings[k];
            if (ring.size() < 3) continue;
            // Orient the outer ring positive and holes negative.
            const double sa = signed_area(ring);
            const double sign = (k == 0) == (sa >= 0.0) ? 1.0 : -1.0;
            double a2 = 0.0, cx = 0.0, cy = 0.0;
            for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
                const double x0 = ring[i].lon - o.lon, y0 = ring[i].lat - o.lat;
                const double x1 = ring[i + 1].lon - o.lon, y1 = ring[i + 1].lat - o.lat;
                const double cross = x0 * y1 - x1 * y0;
                a2 += cross;
                cx += (x0 + x1) * cross;
                cy += (y0 + y1) * cross;
            }
            total += sign * a2 / 2.0;
            sx += sign * cx / 6.0;
            sy += sign * cy / 6.0;
        }
    }
    if (std::abs(total) <= 1e-18) return std::nullopt;
    return LonLat{o.lon + sx / total, o.lat + sy / total};
}

bool contains(const Polygon& polygon, LonLat p) {
    bool inside = false;
    for (const auto& ring : polygon.rings) {
        for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
            const LonLat a = ring[i], b = ring[i + 1];
            if ((a.lat > p.lat) != (b.lat > p.lat)) {
                const double x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
                if (p.lon < x) inside = !inside;
            }
        }
    }
    return inside;
}

bool contains(const MultiPolygon& shape, LonLat p) {
    return std::any_of(shape.begin(), shape.end(), [&](const Polygon& poly) { return contains(poly, p); });
}

namespace {

double orient(LonLat a, LonLat b, LonLat c) {
    return (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon);
}

bool on_segment(LonLat a, LonLat b, LonLat p) {
    return std::min(a.lon, b.lon) <= p.lon && p.lon <= std::max(a.lon, b.lon) &&
           std::min(a.lat, b.lat) <= p.lat && p.lat <= std::max(a.lat, b.lat);
}

bool segments_touch(LonLat a, LonLat b, LonLat c, LonLat d) {
    const double o1 = orient(a, b, c), o2 = orient(a, b, d);
    const double o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (((o1 > 0 && o2 < 0) || (o1 < 0 && o2 > 0)) && ((o3 > 0 && o4 < 0) || (o3 < 0 && o4 > 0)))
        return true;
    if (o1 == 0 && on_segment(a, b, c)) return true;
    if (o2 == 0 && on_segment(a, b, d)) return true;
    if (o3 == 0 && on_segment(c, d, a)) return true;
    if (o4 == 0 && on_segment(c, d, b)) return true;
    return false;
}

} // namespace

bool self_intersects(const Ring& ring) {
    const std::size_t n = ring.size() < 2 ? 0 : ring.size() - 1;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_touch(ring[i], ring[i + 1], ring[j], ring[j + 1])) return true;
        }
    }
    return false;
}

} // namespace settle
