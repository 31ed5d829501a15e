#pragma once

#include "settle/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace settle {

/// "SBR1" file: grid spec followed by the deflated bit words.
void write_binary_raster(const std::filesystem::path& path, const BinaryRaster& raster);
BinaryRaster read_binary_raster(const std::filesystem::path& path);

std::uint32_t file_crc32(const std::filesystem::path& path);

/// Harmonized rasters keyed by the parameters that produced them and the
/// content of their input file. The input's size and mtime are checked first;
/// the file is only re-hashed when they changed.
class RasterCache {
public:
    explicit RasterCache(std::filesystem::path dir);

    std::optional<BinaryRaster> load(const std::string& name, const std::filesystem::path& input,
                                     const std::string& params) const;
    void store(const std::string& name, const std::filesystem::path& input, const std::string& params,
               const BinaryRaster& raster) const;

    std::filesystem::path raster_path(const std::string& name) const;
    std::filesystem::path manifest_path(const std::string& name) const;

private:
    std::filesystem::path dir_;
};

} // namespace settle
