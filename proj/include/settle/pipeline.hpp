#pragma once

#include "settle/config.hpp"
#include "settle/harmonize.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <vector>

namespace settle {

/// Command-line overrides applied on top of the pipeline config.
struct RunOptions {
    unsigned threads = 1;
    std::optional<std::filesystem::path> output;
    std::optional<std::vector<int>> factors;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> subsample;
};

/// Harmonized rasters of every configured dataset, in config order.
struct HarmonizedSet {
    std::vector<std::string> names;
    std::vector<BinaryRaster> rasters;
    std::vector<AdminRegion> regions;
    CountryMask mask;
};

std::filesystem::path output_dir(const PipelineConfig& config, const RunOptions& options);

/// Every command writes into output_dir() and prints a short summary to `log`.
void run_harmonize(const PipelineConfig& config, const RunOptions& options, std::ostream& log);
void run_overlap(const PipelineConfig& config, const RunOptions& options, std::ostream& log);
void run_zonal(const PipelineConfig& config, const RunOptions& options, std::ostream& log);
void run_features(const PipelineConfig& config, const RunOptions& options, std::ostream& log);
void run_train(const PipelineConfig& config, const RunOptions& options, std::ostream& log);
void run_report(const PipelineConfig& config, const RunOptions& options, std::ostream& log);

/// Generates a synthetic country from a synth config into `dir`.
void run_synth(const std::filesystem::path& synth_config, const std::filesystem::path& dir,
               std::optional<std::uint64_t> seed, std::ostream& log);

/// Loads the rasters written by run_harmonize; UsageError if they are missing.
HarmonizedSet load_harmonized(const PipelineConfig& config, const RunOptions& options);

/// Builds one dataset's masked raster on the country grid (no caching).
BinaryRaster harmonize_dataset(const DatasetConfig& dataset, const CountryMask& mask, unsigned threads,
                               std::ostream* log = nullptr);

} // namespace settle
