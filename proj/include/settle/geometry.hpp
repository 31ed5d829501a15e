#pragma once

#include <optional>
#include <span>
#include <vector>

namespace settle {

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
    bool operator==(const LonLat&) const = default;
};

/// Closed ring: first vertex repeated as the last.
using Ring = std::vector<LonLat>;

/// rings[0] is the outer boundary, the rest are holes. Filling uses the
/// even-odd rule over all rings, which also cleans self-intersections.
struct Polygon {
    std::vector<Ring> rings;
};

using MultiPolygon = std::vector<Polygon>;

struct BBox {
    double min_lon, min_lat, max_lon, max_lat;

    void extend(const BBox& o) noexcept;
};

/// Appends the first vertex if the ring is open. Rings with fewer than 3
/// distinct vertices are left as they are.
void close_ring(Ring& ring);

std::optional<BBox> bounds(const MultiPolygon& shape);
std::optional<BBox> bounds(const Polygon& polygon);

/// Shoelace area in squared degrees, positive for counter-clockwise rings.
double signed_area(const Ring& ring);

/// Even-odd area of the polygon: outer minus holes, squared degrees.
double area(const Polygon& polygon);
double area(const MultiPolygon& shape);

/// Area centroid in lon/lat. Empty when the total area is zero.
std::optional<LonLat> area_centroid(const MultiPolygon& shape);

/// Even-odd point-in-polygon over all rings of the polygon.
bool contains(const Polygon& polygon, LonLat p);
bool contains(const MultiPolygon& shape, LonLat p);

/// True if two non-adjacent edges of the ring cross or touch.
bool self_intersects(const Ring& ring);

} // namespace settle
