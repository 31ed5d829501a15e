#pragma once

#include "settle/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace settle {

/// One building outline from a footprint CSV.
struct FootprintRecord {
    MultiPolygon shape;
    double confidence = 0.0;
    std::string id;
};

/// One settlement-extent feature from a GeoJSON FeatureCollection.
struct ExtentRecord {
    MultiPolygon shape;
    double false_positive_probability = 0.0;
};

/// First-level administrative unit.
struct AdminRegion {
    std::string country_code;
    std::string region_id;
    std::string name;
    MultiPolygon shape;
};

struct HdiRow {
    std::string region_id;
    double hdi = 0.0;
};
using HdiTable = std::vector<HdiRow>;

/// Streaming RFC 4180 reader. Memory held is one record plus the stream buffer.
class CsvReader {
public:
    explicit CsvReader(const std::filesystem::path& path);

    /// Reads the next record into `fields`; false at end of file.
    bool next(std::vector<std::string>& fields);

    std::uint64_t line() const noexcept { return line_; }
    /// Largest number of bytes buffered for a single record so far.
    std::size_t max_record_bytes() const noexcept { return max_record_bytes_; }

private:
    std::filesystem::path path_;
    std::ifstream in_;
    std::uint64_t line_ = 0;
    std::size_t max_record_bytes_ = 0;
};

/// Escapes one CSV field (quotes only when needed).
std::string csv_field(std::string_view value);

/// Parses POLYGON / MULTIPOLYGON WKT. Throws FormatError on anything else.
MultiPolygon parse_wkt(std::string_view wkt);
std::string to_wkt(const MultiPolygon& shape);

struct FootprintCsvOptions {
    std::string geometry_column = "geometry";
    std::string confidence_column = "confidence";
    /// Optional; rows get an empty id when the column is absent.
    std::string id_column = "full_plus_code";
    /// Inclusive lower bound.
    double min_confidence = 0.7;
};

struct FootprintReadStats {
    std::uint64_t rows = 0;
    std::uint64_t kept = 0;
    std::uint64_t below_threshold = 0;
    std::uint64_t malformed = 0;
};

/// Pull-style reader yielding records with confidence >= min_confidence.
class FootprintCsvReader {
public:
    FootprintCsvReader(const std::filesystem::path& path, FootprintCsvOptions options = {});

    std::optional<FootprintRecord> next();

    const FootprintReadStats& stats() const noexcept { return stats_; }
    std::size_t max_record_bytes() const noexcept { return csv_.max_record_bytes(); }

private:
    std::filesystem::path path_;
    FootprintCsvOptions options_;
    CsvReader csv_;
    std::vector<std::string> fields_;
    std::size_t geometry_col_ = 0;
    std::size_t confidence_col_ = 0;
    std::optional<std::size_t> id_col_;
    FootprintReadStats stats_;
};

std::vector<FootprintRecord> read_footprints_csv(const std::filesystem::path& path,
                                                 const FootprintCsvOptions& options = {},
                                                 FootprintReadStats* stats = nullptr);

void write_footprints_csv(const std::filesystem::path& path, std::span<const FootprintRecord> records);

enum class MissingProperty { Skip, Error };

struct ExtentGeoJsonOptions {
    std::string property = "prob_false_positive";
    /// Exclusive upper bound.
    double max_false_positive = 0.4;
    MissingProperty on_missing = MissingProperty::Skip;
};

struct ExtentReadStats {
    std::uint64_t features = 0;
    std::uint64_t kept = 0;
    std::uint64_t above_threshold = 0;
    std::uint64_t missing_property = 0;
    std::uint64_t malformed = 0;
};

/// Streams features to `sink` as they are parsed; each feature is discarded
/// after delivery so memory stays bounded by the largest feature.
void read_extents_geojson(const std::filesystem::path& path, const ExtentGeoJsonOptions& options,
                          const std::function<void(ExtentRecord&&)>& sink, ExtentReadStats* stats = nullptr);

std::vector<ExtentRecord> read_extents_geojson(const std::filesystem::path& path,
                                               const ExtentGeoJsonOptions& options = {},
                                               ExtentReadStats* stats = nullptr);

void write_extents_geojson(const std::filesystem::path& path, std::span<const ExtentRecord> records,
                           const std::string& property = "prob_false_positive");

struct RegionGeoJsonOptions {
    std::string country_property = "iso_code";
    std::string region_property = "gdlcode";
    std::string name_property = "region";
};

/// Reads admin-1 polygons. Duplicate region ids within a country are a FormatError.
std::vector<AdminRegion> read_regions_geojson(const std::filesystem::path& path,
                                              const RegionGeoJsonOptions& options = {});
void write_regions_geojson(const std::filesystem::path& path, std::span<const AdminRegion> regions,
                           const RegionGeoJsonOptions& options = {});

struct HdiCsvOptions {
    std::string region_column = "gdlcode";
    std::string hdi_column = "shdi";
};

HdiTable read_hdi_csv(const std::filesystem::path& path, const HdiCsvOptions& options = {});
void write_hdi_csv(const std::filesystem::path& path, const HdiTable& table, const HdiCsvOptions& options = {});

/// Shortest text that round-trips the double exactly.
std::string exact_number(double v);

} // namespace settle
