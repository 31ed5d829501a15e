#include "settle/zonal.hpp"

#include "settle/error.hpp"
#include "settle/rasterize.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <map>
#include <tuple>

namespace settle {

std::vector<std::int32_t> region_labels(const GridSpec& spec, std::span<const AdminRegion> regions,
                                        std::int64_t* overlapping) {
    std::vector<std::int32_t> label(static_cast<std::size_t>(spec.cell_count()), -1);
    std::int64_t claimed_twice = 0;
    for (std::size_t k = 0; k < regions.size(); ++k) {
        BinaryRaster member(spec);
        fill_centers(regions[k].shape, member);
        const auto words = member.words();
        for (std::size_t w = 0; w < words.size(); ++w) {
            for (std::uint64_t bits = words[w]; bits; bits &= bits - 1) {
                const std::size_t i = w * 64 + static_cast<std::size_t>(std::countr_zero(bits));
                if (label[i] < 0)
                    label[i] = static_cast<std::int32_t>(k);
                else
                    ++claimed_twice;
            }
        }
    }
    if (overlapping) *overlapping = claimed_twice;
    return label;
}

ZonalTable zonal_overlap(std::span<const std::string> names, std::span<const BinaryRaster> rasters,
                         std::span<const AdminRegion> regions) {
    if (names.size() != rasters.size()) throw DomainError("zonal overlap: one name per raster required");
    if (rasters.size() < 2) throw DomainError("zonal overlap needs at least two datasets");
    const GridSpec& spec = rasters.front().spec();
    for (const auto& r : rasters) require_same_spec(spec, r.spec(), "zonal overlap");

    const std::size_t n_data = rasters.size();
    const std::size_t n_pairs = n_data * (n_data - 1) / 2;
    ZonalTable table;
    table.dataset_names.assign(names.begin(), names.end());
    table.unassigned_counts.assign(n_data, 0);

    const std::vector<std::int32_t> label = region_labels(spec, regions, &table.overlapping_cells);
    std::vector<bool> outside(regions.size(), false);
    for (std::size_t k = 0; k < regions.size(); ++k) {
        if (auto box = bounds(regions[k].shape)) {
            outside[k] = box->min_lon < spec.origin_lon() - 1e-9 || box->max_lon > spec.east_lon() + 1e-9 ||
                         box->min_lat < spec.south_lat() - 1e-9 || box->max_lat > spec.origin_lat() + 1e-9;
        }
    }
    if (table.overlapping_cells)
        spdlog::warn("{} cells are claimed by more than one region; first listed region kept", table.overlapping_cells);

    struct Accumulator {
        std::vector<std::int64_t> counts;
        std::vector<PairCounts> pairs;
        double area = 0.0;
    };
    std::vector<Accumulator> acc(regions.size(), Accumulator{std::vector<std::int64_t>(n_data, 0),
                                                             std::vector<PairCounts>(n_pairs), 0.0});
    std::vector<bool> bits(n_data);
    for (std::int64_t r = 0; r < spec.height(); ++r) {
        const double row_area = cell_area_km2(spec, r);
        for (std::int64_t c = 0; c < spec.width(); ++c) {
            const std::int32_t k = label[static_cast<std::size_t>(r * spec.width() + c)];
            bool any = false;
            for (std::size_t d = 0; d < n_data; ++d) any |= (bits[d] = rasters[d].get(r, c));
            if (k < 0) {
                for (std::size_t d = 0; d < n_data; ++d) table.unassigned_counts[d] += bits[d];
                continue;
            }
            Accumulator& a = acc[static_cast<std::size_t>(k)];
            a.area += row_area;
            if (!any) continue;
            std::size_t p = 0;
            for (std::size_t i = 0; i < n_data; ++i) {
                a.counts[i] += bits[i];
                for (std::size_t j = i + 1; j < n_data; ++j, ++p) {
                    a.pairs[p].intersection += bits[i] && bits[j];
                    a.pairs[p].union_size += bits[i] || bits[j];
                }
            }
        }
    }

    for (std::size_t k = 0; k < regions.size(); ++k) {
        ZonalRow row;
        row.country_code = regions[k].country_code;
        row.region_id = regions[k].region_id;
        row.region_name = regions[k].name;
        row.area_km2 = acc[k].area;
        row.counts = acc[k].counts;
        row.outside_extent = outside[k];
        const bool all_empty = std::all_of(row.counts.begin(), row.counts.end(), [](auto n) { return n == 0; });
        if (!all_empty) {
            double sum = 0.0;
            for (const auto& pc : acc[k].pairs) {
                row.pairwise_theta.push_back(theta_from_counts(pc));
                sum += row.pairwise_theta.back();
            }
            row.theta_avg = sum / static_cast<double>(n_pairs);
        }
        if (row.outside_extent) spdlog::warn("region {} extends beyond the raster extent", row.region_id);
        table.rows.push_back(std::move(row));
    }
    std::stable_sort(table.rows.begin(), table.rows.end(), [](const ZonalRow& a, const ZonalRow& b) {
        return std::tie(a.country_code, a.region_id) < std::tie(b.country_code, b.region_id);
    });
    return table;
}

ZonalTable join_hdi(ZonalTable table, const HdiTable& hdi) {
    std::map<std::string, double> by_id;
    for (const auto& row : hdi) {
        if (!by_id.emplace(row.region_id, row.hdi).second)
            throw DomainError("duplicate region id '" + row.region_id + "' in HDI table");
    }
    table.unmatched_hdi = 0;
    for (auto& row : table.rows) {
        auto it = by_id.find(row.region_id);
        if (it == by_id.end()) {
            row.hdi.reset();
            ++table.unmatched_hdi;
        } else {
            row.hdi = it->second;
        }
    }
    return table;
}

Correlation hdi_association(const ZonalTable& table) {
    std::vector<double> hdi, theta;
    for (const auto& row : table.rows) {
        if (row.hdi && row.theta_avg) {
            hdi.push_back(*row.hdi);
            theta.push_back(*row.theta_avg);
        }
    }
    if (hdi.size() < 3) throw DomainError("HDI association needs at least 3 regions with both HDI and overlap");
    return pearson(hdi, theta);
}

} // namespace settle
