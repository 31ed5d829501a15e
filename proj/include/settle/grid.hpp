#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace settle {

inline constexpr double kArcsecPerDegree = 3600.0;
inline constexpr double kEarthRadiusM = 6'371'000.0;
/// Arc-seconds spanned by the full longitude and latitude ranges.
inline constexpr double kLonSpanArcsec = 360.0 * kArcsecPerDegree;
inline constexpr double kLatSpanArcsec = 180.0 * kArcsecPerDegree;

/// A rectangular window of the global lon/lat lattice at one resolution.
///
/// The lattice is anchored at (-180, +90): cell (0, 0) of the global lattice
/// has its north-west corner there, and a GridSpec is stored as the lattice
/// index of its own cell (0, 0). Two specs with equal resolution are
/// therefore cell-aligned by construction, and moving between them is an
/// integer index translation.
class GridSpec {
public:
    GridSpec(double resolution_arcsec, std::int64_t lattice_col, std::int64_t lattice_row,
             std::int64_t width, std::int64_t height);

    /// Builds a spec from a geographic origin (north-west corner). The origin is
    /// snapped to the lattice when it lies within `snap_tolerance_deg` of a
    /// lattice line, otherwise AlignmentError is thrown.
    static GridSpec from_origin(double origin_lon, double origin_lat, double resolution_arcsec,
                                std::int64_t width, std::int64_t height,
                                double snap_tolerance_deg = 1e-6);

    /// Smallest lattice-aligned spec covering the lon/lat box.
    static GridSpec covering(double min_lon, double min_lat, double max_lon, double max_lat,
                             double resolution_arcsec);

    double resolution() const noexcept { return resolution_; }
    double resolution_degrees() const noexcept { return resolution_ / kArcsecPerDegree; }
    std::int64_t lattice_col() const noexcept { return col0_; }
    std::int64_t lattice_row() const noexcept { return row0_; }
    std::int64_t width() const noexcept { return width_; }
    std::int64_t height() const noexcept { return height_; }
    std::int64_t cell_count() const noexcept { return width_ * height_; }

    double origin_lon() const noexcept { return -180.0 + col0_ * resolution_degrees(); }
    double origin_lat() const noexcept { return 90.0 - row0_ * resolution_degrees(); }
    double east_lon() const noexcept { return -180.0 + (col0_ + width_) * resolution_degrees(); }
    double south_lat() const noexcept { return 90.0 - (row0_ + height_) * resolution_degrees(); }

    double center_lon(std::int64_t col) const noexcept {
        return -180.0 + (static_cast<double>(col0_ + col) + 0.5) * resolution_degrees();
    }
    double center_lat(std::int64_t row) const noexcept {
        return 90.0 - (static_cast<double>(row0_ + row) + 0.5) * resolution_degrees();
    }

    /// Fractional column/row of a coordinate relative to this spec's origin.
    double col_coord(double lon) const noexcept { return (lon + 180.0) * kArcsecPerDegree / resolution_ - col0_; }
    double row_coord(double lat) const noexcept { return (90.0 - lat) * kArcsecPerDegree / resolution_ - row0_; }

    bool same_resolution(const GridSpec& other) const noexcept { return resolution_ == other.resolution_; }
    bool contains(const GridSpec& sub) const noexcept;

    /// Sub-window in local cell offsets. Throws AlignmentError if it leaves this spec.
    GridSpec subgrid(std::int64_t row_offset, std::int64_t col_offset, std::int64_t width,
                     std::int64_t height) const;
    /// Same size, shifted by whole cells on the lattice.
    GridSpec translated(std::int64_t drow, std::int64_t dcol) const;

    bool operator==(const GridSpec&) const = default;

private:
    double resolution_;
    std::int64_t col0_;
    std::int64_t row0_;
    std::int64_t width_;
    std::int64_t height_;
};

/// Surface area of one cell in the given row on a sphere of radius 6371 km:
/// (R * res)^2 * cos(latitude of the row's centres), in km^2.
double cell_area_km2(const GridSpec& spec, std::int64_t row);

/// Bit-per-cell settled/unsettled layer, row-major, packed into 64-bit words.
/// Bits beyond width*height are always zero so whole-word popcounts are exact.
class BinaryRaster {
public:
    explicit BinaryRaster(const GridSpec& spec);

    const GridSpec& spec() const noexcept { return spec_; }
    std::int64_t width() const noexcept { return spec_.width(); }
    std::int64_t height() const noexcept { return spec_.height(); }

    bool get(std::int64_t row, std::int64_t col) const noexcept {
        const auto i = static_cast<std::uint64_t>(row * spec_.width() + col);
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }
    void set(std::int64_t row, std::int64_t col, bool value = true) noexcept {
        const auto i = static_cast<std::uint64_t>(row * spec_.width() + col);
        const std::uint64_t bit = std::uint64_t{1} << (i & 63);
        if (value)
            words_[i >> 6] |= bit;
        else
            words_[i >> 6] &= ~bit;
    }

    std::span<const std::uint64_t> words() const noexcept { return words_; }
    std::span<std::uint64_t> words() noexcept { return words_; }

    BinaryRaster& operator|=(const BinaryRaster& other);
    BinaryRaster& operator&=(const BinaryRaster& other);

    bool operator==(const BinaryRaster&) const = default;

private:
    GridSpec spec_;
    std::vector<std::uint64_t> words_;
};

/// Number of settled cells.
std::int64_t count_settled(const BinaryRaster& raster);

/// Number of settled cells in one row.
std::int64_t count_settled_row(const BinaryRaster& raster, std::int64_t row);

/// Extracts `sub`, which must share the resolution and lie inside raster.spec().
BinaryRaster window(const BinaryRaster& raster, const GridSpec& sub);

/// Throws AlignmentError unless the two specs are identical.
void require_same_spec(const GridSpec& a, const GridSpec& b, const char* what);

inline constexpr double kNoData = std::numeric_limits<double>::quiet_NaN();
inline bool is_nodata(double v) noexcept { return !std::isfinite(v); }

/// Real-valued layer (population, wealth, nightlights). Non-finite values are no-data.
struct NumericRaster {
    GridSpec spec;
    std::vector<double> values;

    explicit NumericRaster(const GridSpec& s, double fill = 0.0)
        : spec(s), values(static_cast<std::size_t>(s.cell_count()), fill) {}

    double at(std::int64_t row, std::int64_t col) const noexcept {
        return values[static_cast<std::size_t>(row * spec.width() + col)];
    }
    double& at(std::int64_t row, std::int64_t col) noexcept {
        return values[static_cast<std::size_t>(row * spec.width() + col)];
    }
};

inline constexpr std::uint8_t kNoDataCode = 255;

/// Small-integer class layer; code 255 is no-data.
struct CategoricalRaster {
    GridSpec spec;
    std::vector<std::uint8_t> codes;

    explicit CategoricalRaster(const GridSpec& s, std::uint8_t fill = kNoDataCode)
        : spec(s), codes(static_cast<std::size_t>(s.cell_count()), fill) {}

    std::uint8_t at(std::int64_t row, std::int64_t col) const noexcept {
        return codes[static_cast<std::size_t>(row * spec.width() + col)];
    }
    std::uint8_t& at(std::int64_t row, std::int64_t col) noexcept {
        return codes[static_cast<std::size_t>(row * spec.width() + col)];
    }

    /// Throws FormatError if a code other than no-data falls outside `allowed`.
    void validate(std::span<const std::uint8_t> allowed) const;
};

} // namespace settle
