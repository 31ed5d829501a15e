#pragma once

#include "settle/grid.hpp"
#include "settle/harmonize.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace settle {

struct PairCounts {
    std::int64_t intersection = 0;
    std::int64_t union_size = 0;
};

/// |X ∩ Y| and |X ∪ Y| in one pass over the packed words.
PairCounts pair_counts(const BinaryRaster& x, const BinaryRaster& y);

/// Jaccard index from counts; 1 when both sets are empty.
double theta_from_counts(const PairCounts& counts);

/// |X ∩ Y| / |X ∪ Y|. Two empty rasters agree completely (1), with a warning.
double jaccard(const BinaryRaster& x, const BinaryRaster& y);

/// Mean of the Jaccard index over all unordered pairs, in (0,1), (0,2), ..., (1,2), ... order.
double average_overlap(std::span<const BinaryRaster> rasters);

/// min(|X|, |Y|) / max(|X|, |Y|); DomainError when both are zero.
double upper_limit_from_counts(std::int64_t x, std::int64_t y);
double upper_limit(const BinaryRaster& x, const BinaryRaster& y);

/// Settled cells per km^2 of the mask.
double density(const BinaryRaster& raster, const CountryMask& mask);

struct Correlation {
    double r = 0.0;
    /// Two-sided, from the t statistic with n - 2 degrees of freedom.
    double p_value = 1.0;
    std::size_t n = 0;
};

/// Product-moment correlation. Needs equal lengths >= 3 and non-zero variance.
Correlation pearson(std::span<const double> xs, std::span<const double> ys);

struct PairValue {
    std::size_t first = 0;
    std::size_t second = 0;
    double value = 0.0;
};

struct OverlapReport {
    std::vector<std::string> dataset_names;
    int scale_factor = 1;
    std::vector<PairValue> pairwise_theta;
    double average_theta = 0.0;
    std::vector<PairValue> pairwise_upper;
    double average_upper = 0.0;
    std::vector<std::int64_t> counts;
    /// Present when a country mask was supplied: counts at this scale per km^2 of country.
    std::vector<double> density_per_km2;
};

/// Report for rasters that already share one grid.
OverlapReport overlap_report(std::span<const std::string> names, std::span<const BinaryRaster> rasters,
                             const CountryMask* mask = nullptr, int scale_factor = 1);

/// One report per factor (ascending, starting at 1) on block-OR aggregates.
std::vector<OverlapReport> overlap_pyramid(std::span<const std::string> names, std::span<const BinaryRaster> rasters,
                                           std::span<const int> factors, const CountryMask* mask = nullptr);

} // namespace settle
