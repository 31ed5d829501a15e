#pragma once

#include "settle/grid.hpp"
#include "settle/vector_io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace settle {

/// GHSL degree-of-urbanisation classes, valued by their SMOD codes.
enum class SettlementClass : std::uint8_t {
    UrbanCentre = 30,
    DenseUrbanCluster = 23,
    SemiDenseUrbanCluster = 22,
    Suburban = 21,
    RuralCluster = 13,
    LowDensityRural = 12,
    VeryLowDensityRural = 11,
    Water = 10,
};

inline constexpr std::array<std::uint8_t, 8> kSettlementCodes = {30, 23, 22, 21, 13, 12, 11, 10};

std::optional<SettlementClass> settlement_class_from_code(std::uint8_t code);
std::string_view class_name(SettlementClass cls);

/// Water is folded into very-low-density rural; everything else is unchanged.
SettlementClass effective_class(SettlementClass cls);

/// Rural cluster and denser.
bool is_high_density(SettlementClass cls);

/// One-hot columns in model order; suburban is the omitted reference.
inline constexpr std::array<SettlementClass, 6> kOneHotClasses = {
    SettlementClass::UrbanCentre,     SettlementClass::DenseUrbanCluster, SettlementClass::SemiDenseUrbanCluster,
    SettlementClass::RuralCluster,    SettlementClass::LowDensityRural,   SettlementClass::VeryLowDensityRural,
};

inline constexpr std::size_t kNumericFeatures = 3;
inline constexpr std::size_t kFeatureCount = kNumericFeatures + kOneHotClasses.size();

/// Model column names: rwi, rwi_error, nightlight, then the six indicators.
const std::array<std::string, kFeatureCount>& feature_names();

struct CellLabel {
    std::int64_t row = 0;
    std::int64_t col = 0;
    std::uint8_t label = 0;
};

/// A row for every cell settled in at least one raster, row-major; label 1 iff settled in all three.
std::vector<CellLabel> label_cells(const BinaryRaster& x, const BinaryRaster& y, const BinaryRaster& z);

/// Nearest-neighbour value of the feature cell holding the centre of cell
/// (row, col) of `grid`; empty when outside the layer or no-data.
std::optional<double> sample_feature(const NumericRaster& layer, const GridSpec& grid, std::int64_t row,
                                     std::int64_t col);
std::optional<std::uint8_t> sample_feature(const CategoricalRaster& layer, const GridSpec& grid, std::int64_t row,
                                           std::int64_t col);

struct FeatureLayers {
    NumericRaster rwi;
    NumericRaster rwi_error;
    NumericRaster nightlight;
    CategoricalRaster ghsl;
};

struct FeatureRow {
    std::uint16_t country = 0; // index into FeatureTable::countries
    std::int64_t lattice_row = 0;
    std::int64_t lattice_col = 0;
    std::uint8_t label = 0;
    double rwi = 0.0;
    double rwi_error = 0.0;
    double nightlight = 0.0;
    SettlementClass cls = SettlementClass::Suburban; // already remapped

    /// rwi, rwi_error, nightlight, then one-hot indicators.
    std::array<double, kFeatureCount> features() const noexcept;
};

struct FeatureTable {
    double resolution_arcsec = 3.0;
    std::vector<std::string> countries; // sorted
    std::vector<FeatureRow> rows;       // sorted by (country, lattice_row, lattice_col)
    std::uint64_t dropped_missing = 0;
    std::uint64_t dropped_outside_regions = 0;

    const std::string& country_of(const FeatureRow& row) const { return countries[row.country]; }
};

/// Labels cells of the three rasters, samples features, assigns countries from
/// the regions and drops incomplete rows.
FeatureTable build_table(const BinaryRaster& x, const BinaryRaster& y, const BinaryRaster& z,
                         const FeatureLayers& layers, std::span<const AdminRegion> regions);

/// Merges tables built separately (e.g. one per country).
FeatureTable concat(std::span<const FeatureTable> tables);

/// P(label = 1 | high density) / P(label = 1 | low density).
double density_split_ratio(const FeatureTable& table);

/// Columnar little-endian cache; layout documented in the README.
void write_feature_table(const std::filesystem::path& path, const FeatureTable& table);
FeatureTable read_feature_table(const std::filesystem::path& path);
void write_feature_csv(const std::filesystem::path& path, const FeatureTable& table);

} // namespace settle
