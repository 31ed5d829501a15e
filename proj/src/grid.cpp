#include "settle/grid.hpp"

#include "settle/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

namespace settle {
namespace {

// Resolutions read from files carry float noise (3.0000000000004"); snap them
// to micro-arcseconds so equal grids compare equal.
double normalize_resolution(double arcsec) {
    const double scaled = arcsec * 1e6;
    const double rounded = std::round(scaled);
    return std::abs(scaled - rounded) < 1e-3 ? rounded / 1e6 : arcsec;
}

std::int64_t snap_index(double value, double tolerance_cells, const char* axis) {
    const double rounded = std::round(value);
    if (std::abs(value - rounded) > tolerance_cells) {
        throw AlignmentError(std::string("origin ") + axis + " is not on the global lattice (offset " +
                             std::to_string(value - rounded) + " cells)");
    }
    return static_cast<std::int64_t>(rounded);
}

} // namespace

GridSpec::GridSpec(double resolution_arcsec, std::int64_t lattice_col, std::int64_t lattice_row,
                   std::int64_t width, std::int64_t height)
    : resolution_(normalize_resolution(resolution_arcsec)),
      col0_(lattice_col),
      row0_(lattice_row),
      width_(width),
      height_(height) {
    if (!(resolution_ > 0.0) || !std::isfinite(resolution_))
        throw DomainError("grid resolution must be positive");
    if (width_ <= 0 || height_ <= 0) throw DomainError("grid dimensions must be positive");
    const double slack = 1e-9;
    if (col0_ < 0 || (col0_ + width_) * resolution_ > kLonSpanArcsec + slack)
        throw DomainError("grid longitudes leave [-180, 180]");
    if (row0_ < 0 || (row0_ + height_) * resolution_ > kLatSpanArcsec + slack)
        throw DomainError("grid latitudes leave [-90, 90]");
}

GridSpec GridSpec::from_origin(double origin_lon, double origin_lat, double resolution_arcsec,
                               std::int64_t width, std::int64_t height, double snap_tolerance_deg) {
    const double res = normalize_resolution(resolution_arcsec);
    if (!(res > 0.0)) throw DomainError("grid resolution must be positive");
    const double res_deg = res / kArcsecPerDegree;
    const double tol_cells = snap_tolerance_deg / res_deg;
    const auto col = snap_index((origin_lon + 180.0) / res_deg, tol_cells, "longitude");
    const auto row = snap_index((90.0 - origin_lat) / res_deg, tol_cells, "latitude");
    return GridSpec(res, col, row, width, height);
}

GridSpec GridSpec::covering(double min_lon, double min_lat, double max_lon, double max_lat,
                            double resolution_arcsec) {
    const double res = normalize_resolution(resolution_arcsec);
    const double res_deg = res / kArcsecPerDegree;
    const double eps = 1e-9;
    auto col0 = static_cast<std::int64_t>(std::floor((min_lon + 180.0) / res_deg + eps));
    auto col1 = static_cast<std::int64_t>(std::ceil((max_lon + 180.0) / res_deg - eps));
    auto row0 = static_cast<std::int64_t>(std::floor((90.0 - max_lat) / res_deg + eps));
    auto row1 = static_cast<std::int64_t>(std::ceil((90.0 - min_lat) / res_deg - eps));
    if (col1 <= col0) col1 = col0 + 1;
    if (row1 <= row0) row1 = row0 + 1;
    return GridSpec(res, col0, row0, col1 - col0, row1 - row0);
}

bool GridSpec::contains(const GridSpec& sub) const noexcept {
    return same_resolution(sub) && sub.col0_ >= col0_ && sub.row0_ >= row0_ &&
           sub.col0_ + sub.width_ <= col0_ + width_ && sub.row0_ + sub.height_ <= row0_ + height_;
}

GridSpec GridSpec::subgrid(std::int64_t row_offset, std::int64_t col_offset, std::int64_t width,
                           std::int64_t height) const {
    GridSpec sub(resolution_, col0_ + col_offset, row0_ + row_offset, width, height);
    if (!contains(sub)) throw AlignmentError("sub-window leaves the parent grid");
    return sub;
}

GridSpec GridSpec::translated(std::int64_t drow, std::int64_t dcol) const {
    return GridSpec(resolution_, col0_ + dcol, row0_ + drow, width_, height_);
}

double cell_area_km2(const GridSpec& spec, std::int64_t row) {
    if (row < 0 || row >= spec.height())
        throw IndexError("row " + std::to_string(row) + " outside grid of height " +
                         std::to_string(spec.height()));
    const double delta = spec.resolution_degrees() * std::numbers::pi / 180.0;
    const double phi = spec.center_lat(row) * std::numbers::pi / 180.0;
    const double side_m = kEarthRadiusM * delta;
    return side_m * side_m * std::cos(phi) / 1e6;
}

BinaryRaster::BinaryRaster(const GridSpec& spec)
    : spec_(spec), words_(static_cast<std::size_t>((spec.cell_count() + 63) / 64), 0) {}

BinaryRaster& BinaryRaster::operator|=(const BinaryRaster& other) {
    require_same_spec(spec_, other.spec_, "union");
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
    return *this;
}

BinaryRaster& BinaryRaster::operator&=(const BinaryRaster& other) {
    require_same_spec(spec_, other.spec_, "intersection");
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
    return *this;
}

std::int64_t count_settled(const BinaryRaster& raster) {
    std::int64_t n = 0;
    for (const auto w : raster.words()) n += std::popcount(w);
    return n;
}

std::int64_t count_settled_row(const BinaryRaster& raster, std::int64_t row) {
    std::int64_t n = 0;
    for (std::int64_t c = 0; c < raster.width(); ++c) n += raster.get(row, c);
    return n;
}

BinaryRaster window(const BinaryRaster& raster, const GridSpec& sub) {
    if (!raster.spec().contains(sub))
        throw AlignmentError("window is not aligned with, or not contained in, the source grid");
    const std::int64_t dr = sub.lattice_row() - raster.spec().lattice_row();
    const std::int64_t dc = sub.lattice_col() - raster.spec().lattice_col();
    BinaryRaster out(sub);
    for (std::int64_t r = 0; r < sub.height(); ++r)
        for (std::int64_t c = 0; c < sub.width(); ++c)
            if (raster.get(r + dr, c + dc)) out.set(r, c);
    return out;
}

void require_same_spec(const GridSpec& a, const GridSpec& b, const char* what) {
    if (!(a == b)) throw AlignmentError(std::string(what) + ": rasters are on different grids");
}

void CategoricalRaster::validate(std::span<const std::uint8_t> allowed) const {
    for (const auto code : codes) {
        if (code == kNoDataCode) continue;
        if (std::find(allowed.begin(), allowed.end(), code) == allowed.end())
            throw FormatError("category code " + std::to_string(code) + " is not in the declared set");
    }
}

} // namespace settle
