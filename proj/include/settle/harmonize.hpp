#pragma once

#include "settle/grid.hpp"
#include "settle/vector_io.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace settle {

/// Cells inside a country (centre-point rule) plus their total area.
struct CountryMask {
    BinaryRaster mask;
    std::string country_code;
    double area_km2 = 0.0;

    const GridSpec& spec() const noexcept { return mask.spec(); }
};

/// cell = 1 iff the value is not no-data and value > threshold.
BinaryRaster binarize(const NumericRaster& raster, double threshold);

/// Block-OR aggregation onto the global lattice at resolution * factor.
/// Blocks follow the coarse lattice, so edge blocks may be ragged on any side
/// and aggregate over the source cells that exist.
BinaryRaster block_or_downscale(const BinaryRaster& raster, int factor);

/// block_or_downscale(raster, 3) for a 1" raster; AlignmentError for any other resolution.
BinaryRaster upscale_1s_to_3s(const BinaryRaster& raster);

/// Copies the cells of `raster` that fall inside `target` (same resolution);
/// target cells outside the source are unset.
BinaryRaster reframe(const BinaryRaster& raster, const GridSpec& target);

/// Sum of cell areas over the set bits.
double masked_area_km2(const BinaryRaster& mask);

/// Mask of the union of region polygons on `spec`. Throws DomainError for an empty list.
CountryMask country_mask(const GridSpec& spec, std::span<const AdminRegion> regions);

/// raster AND mask.
BinaryRaster apply_mask(const BinaryRaster& raster, const CountryMask& mask);

/// Clears every cell whose centre is outside the union of the regions.
std::pair<BinaryRaster, CountryMask> mask_to_country(const BinaryRaster& raster, std::span<const AdminRegion> regions);

/// Lattice-aligned grid covering all regions.
GridSpec country_grid(std::span<const AdminRegion> regions, double resolution_arcsec = 3.0);

} // namespace settle
