#pragma once

#include "settle/grid.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace settle {

/// Minimal GeoTIFF support: classic little-endian TIFF, one band, uint8 /
/// int16 / float32 samples, striped or tiled, uncompressed or deflate,
/// georeferenced by ModelPixelScale + ModelTiepoint.
///
/// CRS is lon/lat (EPSG:4326) except for one declared projected case,
/// ProjectedCSTypeGeoKey = 54009 (ESRI Mollweide), which is read as-is and
/// brought onto the lattice with resample_mollweide().
enum class SampleType { UInt8, Int16, Float32 };
enum class Compression { None, Deflate };
enum class CrsKind { Geographic, Mollweide };

inline constexpr int kMollweideCode = 54009;
/// Sphere radius of ESRI:54009.
inline constexpr double kMollweideRadiusM = 6'378'137.0;

struct GeoTiffImage {
    std::int64_t width = 0;
    std::int64_t height = 0;
    SampleType type = SampleType::Float32;
    CrsKind crs = CrsKind::Geographic;
    /// North-west corner and pixel size: degrees for Geographic, metres for Mollweide.
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_x = 0.0;
    double pixel_y = 0.0;
    std::vector<double> values;
    std::optional<double> nodata;
};

struct GeoTiffWriteOptions {
    SampleType type = SampleType::Float32;
    Compression compression = Compression::None;
    /// 0 writes strips; otherwise square tiles of this side (multiple of 16).
    int tile_size = 0;
};

GeoTiffImage read_geotiff_image(const std::filesystem::path& path);
void write_geotiff_image(const std::filesystem::path& path, const GeoTiffImage& image,
                         const GeoTiffWriteOptions& options);

/// Reads a lon/lat raster; cells equal to the file's no-data value become NaN.
NumericRaster read_geotiff(const std::filesystem::path& path);

/// Reads a lon/lat class raster. Codes must be integral; no-data maps to 255
/// and every other code must be in `allowed`.
CategoricalRaster read_geotiff_categorical(const std::filesystem::path& path,
                                           std::span<const std::uint8_t> allowed);

/// NaN cells are written as `nodata` (required for integer sample types if any NaN is present).
void write_geotiff(const std::filesystem::path& path, const NumericRaster& raster,
                   const GeoTiffWriteOptions& options, std::optional<double> nodata = std::nullopt);
void write_geotiff(const std::filesystem::path& path, const CategoricalRaster& raster,
                   const GeoTiffWriteOptions& options);

GridSpec grid_of(const GeoTiffImage& image);

/// Forward spherical Mollweide (metres) for a lon/lat in degrees.
struct ProjectedXY {
    double x;
    double y;
};

ProjectedXY mollweide_forward(double lon, double lat);

/// Nearest-neighbour sample of a Mollweide class image at every cell centre of `target`.
CategoricalRaster resample_mollweide(const GeoTiffImage& image, const GridSpec& target,
                                     std::span<const std::uint8_t> allowed);

} // namespace settle
