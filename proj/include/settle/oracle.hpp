#pragma once

#include "settle/agreement.hpp"
#include "settle/vector_io.hpp"

#include <span>

/// Deliberately naive reference implementations. They share no code with the
/// production paths (no word tricks, no scanlines) and refuse large inputs.
namespace settle::oracle {

inline constexpr std::int64_t kMaxSide = 64;
inline constexpr std::size_t kMaxPolygons = 10'000;

std::int64_t count(const BinaryRaster& x);
PairCounts counts(const BinaryRaster& x, const BinaryRaster& y);
double jaccard(const BinaryRaster& x, const BinaryRaster& y);
double average_overlap(std::span<const BinaryRaster> rasters);
double upper_limit(const BinaryRaster& x, const BinaryRaster& y);

/// Coarse cell = OR of the fine cells inside it, fine cells found by lattice index.
BinaryRaster blockor(const BinaryRaster& raster, int factor);

/// Cell set iff its centre is inside (ray casting over every edge) or an edge
/// meets the open cell rectangle (Liang-Barsky with strict bounds).
BinaryRaster rasterize_coverage(std::span<const MultiPolygon> shapes, const GridSpec& spec);

/// Cell holding the triangle-fan centroid, found by testing every cell.
BinaryRaster rasterize_centroid(std::span<const MultiPolygon> shapes, const GridSpec& spec);

/// Cell set iff any of samples x samples points inside it lies in a shape.
BinaryRaster rasterize_supersample(std::span<const MultiPolygon> shapes, const GridSpec& spec, int samples = 16);

} // namespace settle::oracle
