#pragma once

#include "settle/agreement.hpp"
#include "settle/vector_io.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace settle {

struct ZonalRow {
    std::string country_code;
    std::string region_id;
    std::string region_name;
    double area_km2 = 0.0;
    /// Missing when every dataset is empty inside the region.
    std::optional<double> theta_avg;
    /// Same pair order as OverlapReport; empty when theta_avg is missing.
    std::vector<double> pairwise_theta;
    std::vector<std::int64_t> counts;
    std::optional<double> hdi;
    /// Region polygon reaches beyond the raster extent.
    bool outside_extent = false;
};

struct ZonalTable {
    std::vector<std::string> dataset_names;
    /// Sorted by (country_code, region_id).
    std::vector<ZonalRow> rows;
    /// Settled cells per dataset whose centre falls in no region.
    std::vector<std::int64_t> unassigned_counts;
    /// Cells claimed by more than one region (kept by the first listed).
    std::int64_t overlapping_cells = 0;
    /// Rows left without an HDI value by join_hdi.
    std::int64_t unmatched_hdi = 0;
};

/// Index of the first listed region whose polygon holds each cell centre, -1
/// for none, row-major. `overlapping` receives the number of cells claimed twice.
std::vector<std::int32_t> region_labels(const GridSpec& spec, std::span<const AdminRegion> regions,
                                        std::int64_t* overlapping = nullptr);

/// Per-region overlap with centre-point membership, first-listed region wins.
ZonalTable zonal_overlap(std::span<const std::string> names, std::span<const BinaryRaster> rasters,
                         std::span<const AdminRegion> regions);

/// Left join on region id. Duplicate ids in `hdi` are a DomainError.
ZonalTable join_hdi(ZonalTable table, const HdiTable& hdi);

/// Pearson correlation of (hdi, theta_avg) over rows that have both.
Correlation hdi_association(const ZonalTable& table);

} // namespace settle
