#include "settle/harmonize.hpp"

#include "settle/error.hpp"
#include "settle/rasterize.hpp"

#include <algorithm>
#include <bit>
#include <set>

namespace settle {
namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    const std::int64_t q = a / b;
    return (a % b != 0 && (a < 0) != (b < 0)) ? q - 1 : q;
}

// Calls fn(row, col) for every set bit, skipping empty words.
template <class Fn>
void for_each_set(const BinaryRaster& raster, Fn&& fn) {
    const auto words = raster.words();
    const std::int64_t width = raster.width();
    for (std::size_t w = 0; w < words.size(); ++w) {
        std::uint64_t bits = words[w];
        while (bits) {
            const int b = std::countr_zero(bits);
            bits &= bits - 1;
            const auto i = static_cast<std::int64_t>(w * 64 + static_cast<std::size_t>(b));
            fn(i / width, i % width);
        }
    }
}

} // namespace

BinaryRaster binarize(const NumericRaster& raster, double threshold) {
    BinaryRaster out(raster.spec);
    const std::int64_t width = raster.spec.width();
    for (std::size_t i = 0; i < raster.values.size(); ++i) {
        const double v = raster.values[i];
        if (!is_nodata(v) && v > threshold)
            out.set(static_cast<std::int64_t>(i) / width, static_cast<std::int64_t>(i) % width);
    }
    return out;
}

BinaryRaster block_or_downscale(const BinaryRaster& raster, int factor) {
    if (factor < 1) throw DomainError("block factor must be at least 1");
    if (factor == 1) return raster;
    const GridSpec& in = raster.spec();
    const std::int64_t col0 = floor_div(in.lattice_col(), factor);
    const std::int64_t row0 = floor_div(in.lattice_row(), factor);
    const std::int64_t col1 = floor_div(in.lattice_col() + in.width() - 1, factor) + 1;
    const std::int64_t row1 = floor_div(in.lattice_row() + in.height() - 1, factor) + 1;
    const GridSpec out_spec(in.resolution() * factor, col0, row0, col1 - col0, row1 - row0);
    BinaryRaster out(out_spec);
    for_each_set(raster, [&](std::int64_t r, std::int64_t c) {
        out.set(floor_div(in.lattice_row() + r, factor) - row0, floor_div(in.lattice_col() + c, factor) - col0);
    });
    return out;
}

BinaryRaster upscale_1s_to_3s(const BinaryRaster& raster) {
    if (raster.spec().resolution() != 1.0)
        throw AlignmentError("expected a 1 arc-second raster, got " + std::to_string(raster.spec().resolution()) + "\"");
    return block_or_downscale(raster, 3);
}

BinaryRaster reframe(const BinaryRaster& raster, const GridSpec& target) {
    if (!raster.spec().same_resolution(target)) throw AlignmentError("reframe: resolutions differ");
    if (raster.spec() == target) return raster;
    const std::int64_t dr = raster.spec().lattice_row() - target.lattice_row();
    const std::int64_t dc = raster.spec().lattice_col() - target.lattice_col();
    BinaryRaster out(target);
    for_each_set(raster, [&](std::int64_t r, std::int64_t c) {
        const std::int64_t tr = r + dr, tc = c + dc;
        if (tr >= 0 && tc >= 0 && tr < target.height() && tc < target.width()) out.set(tr, tc);
    });
    return out;
}

double masked_area_km2(const BinaryRaster& mask) {
    double total = 0.0;
    for (std::int64_t r = 0; r < mask.height(); ++r) {
        const std::int64_t n = count_settled_row(mask, r);
        if (n) total += static_cast<double>(n) * cell_area_km2(mask.spec(), r);
    }
    return total;
}

CountryMask country_mask(const GridSpec& spec, std::span<const AdminRegion> regions) {
    if (regions.empty()) throw DomainError("country mask needs at least one region");
    CountryMask out{BinaryRaster(spec), {}, 0.0};
    std::set<std::string> codes;
    for (const auto& region : regions) {
        fill_centers(region.shape, out.mask);
        codes.insert(region.country_code);
    }
    for (const auto& code : codes) out.country_code += (out.country_code.empty() ? "" : "+") + code;
    out.area_km2 = masked_area_km2(out.mask);
    return out;
}

BinaryRaster apply_mask(const BinaryRaster& raster, const CountryMask& mask) {
    BinaryRaster out = raster;
    out &= mask.mask;
    return out;
}

std::pair<BinaryRaster, CountryMask> mask_to_country(const BinaryRaster& raster, std::span<const AdminRegion> regions) {
    CountryMask mask = country_mask(raster.spec(), regions);
    BinaryRaster masked = apply_mask(raster, mask);
    return {std::move(masked), std::move(mask)};
}

GridSpec country_grid(std::span<const AdminRegion> regions, double resolution_arcsec) {
    std::optional<BBox> box;
    for (const auto& r : regions) {
        if (auto b = bounds(r.shape)) {
            if (box)
                box->extend(*b);
            else
                box = b;
        }
    }
    if (!box) throw DomainError("regions have no coordinates");
    return GridSpec::covering(box->min_lon, box->min_lat, box->max_lon, box->max_lat, resolution_arcsec);
}

} // namespace settle
