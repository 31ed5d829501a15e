#pragma once

#include "settle/featurize.hpp"
#include "settle/geotiff.hpp"
#include "settle/vector_io.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace settle {

enum class SynthPattern { Blobs, Checker, Empty };

/// Perturbation applied to the ground truth for one dataset, in 3" cells.
struct Perturbation {
    int dilation = 0;
    double dropout = 0.0;
    int offset_rows = 0;
    int offset_cols = 0;
    int spurious = 0;
};

struct SynthConfig {
    std::uint64_t seed = 1;
    std::int64_t width = 128;
    std::int64_t height = 128;
    double origin_lon = 36.0;
    double origin_lat = -1.0;
    int country_columns = 3;
    int country_rows = 2;
    int regions_per_country = 2;
    SynthPattern pattern = SynthPattern::Blobs;
    int blob_count = 40;
    double blob_radius_min = 1.0;
    double blob_radius_max = 5.0;
    /// footprints, extents, population.
    std::array<Perturbation, 3> perturb{};
    std::array<std::string, 3> names{"footprints", "extents", "population"};
    double confidence_min = 0.7;
    double confidence_max = 1.0;
    int footprint_decoys = 20;
    double false_positive_min = 0.0;
    double false_positive_max = 0.39;
    int extent_decoys = 5;
    double rwi_gradient = 2.0;
    double rwi_noise = 0.3;
    double rwi_missing = 0.0;
    int nightlight_hotspots = 4;
    double nightlight_peak = 60.0;
    double lake_radius = 0.0;
    /// Extra `key = value` lines copied into the emitted pipeline config.
    std::vector<std::pair<std::string, std::string>> pipeline;

    /// Throws UsageError for probabilities outside [0, 1] or non-positive sizes.
    void validate() const;
};

SynthConfig load_synth_config(const std::filesystem::path& path);
SynthConfig parse_synth_config(const std::string& text, const std::string& origin = "<synth>");

struct SynthCountry {
    GridSpec grid;
    BinaryRaster truth;
    /// What each dataset must rasterize to after ingest and masking.
    std::array<BinaryRaster, 3> expected;
    std::vector<FootprintRecord> footprints;
    std::vector<ExtentRecord> extents;
    /// 1" population counts.
    NumericRaster population;
    FeatureLayers layers;
    std::vector<AdminRegion> regions;
    HdiTable hdi;
};

/// Deterministic for a given config.
SynthCountry generate_country(const SynthConfig& config);

/// Writes footprints.csv, extents.geojson, population.tif, rwi.tif,
/// rwi_error.tif, nightlight.tif, ghsl.tif, regions.geojson, hdi.csv,
/// truth.sbr and pipeline.cfg into `dir`.
void write_country(const SynthCountry& country, const SynthConfig& config, const std::filesystem::path& dir);

/// Chebyshev dilation by `radius` cells.
BinaryRaster dilate(const BinaryRaster& raster, int radius);
/// Shift by whole cells; cells leaving the grid are lost.
BinaryRaster shift(const BinaryRaster& raster, int drow, int dcol);

} // namespace settle
