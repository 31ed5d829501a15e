#pragma once

#include "settle/grid.hpp"
#include "settle/vector_io.hpp"

#include <span>

namespace settle {

/// How a polygon marks cells.
///  - Centroid: the single cell holding the polygon's area centroid.
///  - Coverage: every cell whose centre is inside the polygon (even-odd,
///    holes respected) or whose open rectangle the boundary passes through.
///    For area objects this is the same set as "cell rectangle intersects
///    the polygon", so it also serves the any-intersection policy.
enum class RasterizeMode { Centroid, Coverage };

struct RasterizePolicy {
    RasterizeMode mode = RasterizeMode::Centroid;
};

struct RasterizeStats {
    std::uint64_t records = 0;
    /// Zero-area shapes (centroid falls back to the first vertex).
    std::uint64_t degenerate = 0;
    /// Records with any part outside the grid; those cells are dropped.
    std::uint64_t out_of_grid = 0;
    std::uint64_t self_intersecting = 0;

    RasterizeStats& operator+=(const RasterizeStats& o) noexcept;
};

/// Incremental rasterizer: feed shapes one at a time, read the raster at the end.
class Rasterizer {
public:
    Rasterizer(const GridSpec& spec, RasterizeMode mode);

    void add(const MultiPolygon& shape);

    const BinaryRaster& raster() const noexcept { return raster_; }
    BinaryRaster take() && { return std::move(raster_); }
    const RasterizeStats& stats() const noexcept { return stats_; }

private:
    void add_centroid(const MultiPolygon& shape);
    void add_coverage(const MultiPolygon& shape);

    BinaryRaster raster_;
    RasterizeMode mode_;
    RasterizeStats stats_;
};

BinaryRaster rasterize_footprints(std::span<const FootprintRecord> records, const GridSpec& spec,
                                  RasterizePolicy policy = {}, RasterizeStats* stats = nullptr,
                                  unsigned threads = 1);

BinaryRaster rasterize_extents(std::span<const ExtentRecord> records, const GridSpec& spec,
                               RasterizeStats* stats = nullptr, unsigned threads = 1);

/// Sets every cell of `out` whose centre lies inside the shape (even-odd per polygon).
void fill_centers(const MultiPolygon& shape, BinaryRaster& out);

} // namespace settle
