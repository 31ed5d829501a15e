#pragma once

#include "settle/grid.hpp"
#include "settle/rng.hpp"
#include "settle/vector_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

namespace testing {

inline settle::BinaryRaster random_raster(const settle::GridSpec& spec, settle::CounterRng& rng, double p) {
    settle::BinaryRaster r(spec);
    for (std::int64_t row = 0; row < spec.height(); ++row)
        for (std::int64_t col = 0; col < spec.width(); ++col)
            if (rng.bernoulli(p)) r.set(row, col);
    return r;
}

/// Small equatorial 3" grid with its origin at lattice (col, row).
inline settle::GridSpec small_grid(std::int64_t width, std::int64_t height, std::int64_t col = 259200,
                                   std::int64_t row = 108000) {
    return settle::GridSpec(3.0, col, row, width, height);
}

inline settle::Ring box_ring(double lon0, double lat0, double lon1, double lat1) {
    return {{lon0, lat0}, {lon1, lat0}, {lon1, lat1}, {lon0, lat1}, {lon0, lat0}};
}

inline settle::MultiPolygon box(double lon0, double lat0, double lon1, double lat1) {
    return {settle::Polygon{{box_ring(lon0, lat0, lon1, lat1)}}};
}

/// Box in cell units of `spec` (columns east, rows south).
inline settle::MultiPolygon cell_box(const settle::GridSpec& spec, double c0, double r0, double c1, double r1) {
    const double d = spec.resolution_degrees();
    return box(spec.origin_lon() + c0 * d, spec.origin_lat() - r1 * d, spec.origin_lon() + c1 * d,
               spec.origin_lat() - r0 * d);
}

/// Random polygon in cell units: a star-shaped ring around a centre, optionally with a hole.
inline settle::MultiPolygon random_shape(const settle::GridSpec& spec, settle::CounterRng& rng) {
    const double cx = rng.uniform(-2.0, spec.width() + 2.0), cy = rng.uniform(-2.0, spec.height() + 2.0);
    const double radius = rng.uniform(0.05, 6.0);
    const int n = 3 + static_cast<int>(rng.below(8));
    const double d = spec.resolution_degrees();
    auto to_lonlat = [&](double x, double y) { return settle::LonLat{spec.origin_lon() + x * d, spec.origin_lat() - y * d}; };
    settle::Ring outer;
    for (int i = 0; i < n; ++i) {
        const double a = 2 * std::numbers::pi * i / n;
        const double r = radius * rng.uniform(0.3, 1.0);
        outer.push_back(to_lonlat(cx + r * std::cos(a), cy + r * std::sin(a)));
    }
    outer.push_back(outer.front());
    settle::Polygon p{{outer}};
    if (rng.bernoulli(0.3)) {
        const double h = radius * 0.2;
        p.rings.push_back({to_lonlat(cx - h, cy - h), to_lonlat(cx + h, cy - h), to_lonlat(cx + h, cy + h),
                           to_lonlat(cx - h, cy + h), to_lonlat(cx - h, cy - h)});
    }
    return {p};
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("settle_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void spit(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

struct CommandResult {
    int status = -1;
    std::string output;
};

/// Runs a shell command, capturing stdout and stderr together.
inline CommandResult run_command(const std::string& command) {
    CommandResult result;
    const std::string full = command + " 2>&1";
    FILE* pipe = ::popen(full.c_str(), "r");
    if (!pipe) return result;
    char buffer[4096];
    std::size_t n;
    while ((n = std::fread(buffer, 1, sizeof buffer, pipe)) > 0) result.output.append(buffer, n);
    const int status = ::pclose(pipe);
    result.status = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

inline std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

} // namespace testing
