#pragma once

#include "settle/mlcore.hpp"
#include "settle/rasterize.hpp"
#include "settle/vector_io.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace settle {

/// `key = value` lines; '#' starts a comment, blank lines are ignored.
/// Keys keep their file order. Errors are UsageError naming file and line.
class KeyValueFile {
public:
    static KeyValueFile parse(const std::filesystem::path& path);
    static KeyValueFile parse_text(const std::string& text, const std::string& origin = "<config>");

    const std::vector<std::pair<std::string, std::string>>& entries() const noexcept { return entries_; }
    std::optional<std::string> get(const std::string& key) const;

    const std::string& origin() const noexcept { return origin_; }
    int line_of(const std::string& key) const;

private:
    std::string origin_;
    std::vector<std::pair<std::string, std::string>> entries_;
    std::vector<int> lines_;
};

double parse_real(const std::string& text, const std::string& what);
long long parse_integer(const std::string& text, const std::string& what);
std::vector<double> parse_real_list(const std::string& text, const std::string& what);
std::vector<int> parse_factor_list(const std::string& text);

enum class DatasetKind { Footprints, Extents, PopulationRaster };

struct DatasetConfig {
    std::string name;
    DatasetKind kind = DatasetKind::Footprints;
    std::filesystem::path path;
    FootprintCsvOptions footprints;
    ExtentGeoJsonOptions extents;
    /// Population raster cells with value > threshold are settled.
    double population_threshold = 0.0;
    RasterizeMode footprint_mode = RasterizeMode::Centroid;
};

struct PipelineConfig {
    std::filesystem::path source;
    std::string country;
    double resolution_arcsec = 3.0;
    std::vector<DatasetConfig> datasets;
    std::filesystem::path regions;
    RegionGeoJsonOptions region_options;
    std::optional<std::filesystem::path> hdi;
    HdiCsvOptions hdi_options;
    std::optional<std::filesystem::path> rwi;
    std::optional<std::filesystem::path> rwi_error;
    std::optional<std::filesystem::path> nightlight;
    std::optional<std::filesystem::path> ghsl;
    std::filesystem::path output;
    std::vector<int> factors{1};
    ModelConfig model;
};

/// Relative paths are resolved against the directory holding the file.
PipelineConfig load_pipeline_config(const std::filesystem::path& path);
PipelineConfig parse_pipeline_config(const KeyValueFile& file, const std::filesystem::path& base_dir);

std::string_view kind_name(DatasetKind kind);

} // namespace settle
