#include "settle/agreement.hpp"

#include "settle/error.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <bit>
#include <cmath>

namespace settle {

PairCounts pair_counts(const BinaryRaster& x, const BinaryRaster& y) {
    require_same_spec(x.spec(), y.spec(), "jaccard");
    const auto a = x.words();
    const auto b = y.words();
    PairCounts out;
    for (std::size_t i = 0; i < a.size(); ++i) {
        out.intersection += std::popcount(a[i] & b[i]);
        out.union_size += std::popcount(a[i] | b[i]);
    }
    return out;
}

double theta_from_counts(const PairCounts& counts) {
    if (counts.union_size == 0) return 1.0;
    return static_cast<double>(counts.intersection) / static_cast<double>(counts.union_size);
}

double jaccard(const BinaryRaster& x, const BinaryRaster& y) {
    const PairCounts counts = pair_counts(x, y);
    if (counts.union_size == 0) spdlog::warn("jaccard of two empty rasters taken as 1");
    return theta_from_counts(counts);
}

double average_overlap(std::span<const BinaryRaster> rasters) {
    if (rasters.size() < 2) throw DomainError("average overlap needs at least two rasters");
    double sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < rasters.size(); ++i)
        for (std::size_t j = i + 1; j < rasters.size(); ++j, ++pairs) sum += jaccard(rasters[i], rasters[j]);
    return sum / static_cast<double>(pairs);
}

double upper_limit_from_counts(std::int64_t x, std::int64_t y) {
    if (x == 0 && y == 0) throw DomainError("upper limit is undefined for two empty rasters");
    return static_cast<double>(std::min(x, y)) / static_cast<double>(std::max(x, y));
}

double upper_limit(const BinaryRaster& x, const BinaryRaster& y) {
    require_same_spec(x.spec(), y.spec(), "upper limit");
    return upper_limit_from_counts(count_settled(x), count_settled(y));
}

double density(const BinaryRaster& raster, const CountryMask& mask) {
    require_same_spec(raster.spec(), mask.spec(), "density");
    if (!(mask.area_km2 > 0.0)) throw DomainError("density needs a mask with positive area");
    return static_cast<double>(count_settled(raster)) / mask.area_km2;
}

Correlation pearson(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw DomainError("pearson: inputs differ in length");
    const std::size_t n = xs.size();
    if (n < 3) throw DomainError("pearson: need at least 3 pairs");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mx, dy = ys[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson: zero variance");
    Correlation out;
    out.n = n;
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double dof = static_cast<double>(n - 2);
    const double denom = 1.0 - out.r * out.r;
    if (denom <= 0.0) {
        out.p_value = 0.0;
    } else {
        const double t = std::abs(out.r) * std::sqrt(dof / denom);
        const boost::math::students_t dist(dof);
        out.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
    }
    return out;
}

OverlapReport overlap_report(std::span<const std::string> names, std::span<const BinaryRaster> rasters,
                             const CountryMask* mask, int scale_factor) {
    if (names.size() != rasters.size()) throw DomainError("overlap report: one name per raster required");
    if (rasters.size() < 2) throw DomainError("overlap report needs at least two datasets");
    for (const auto& r : rasters) require_same_spec(rasters.front().spec(), r.spec(), "overlap report");

    OverlapReport report;
    report.dataset_names.assign(names.begin(), names.end());
    report.scale_factor = scale_factor;
    for (const auto& r : rasters) report.counts.push_back(count_settled(r));
    double theta_sum = 0.0, upper_sum = 0.0;
    for (std::size_t i = 0; i < rasters.size(); ++i) {
        for (std::size_t j = i + 1; j < rasters.size(); ++j) {
            const double theta = jaccard(rasters[i], rasters[j]);
            const double upper = upper_limit_from_counts(report.counts[i], report.counts[j]);
            report.pairwise_theta.push_back({i, j, theta});
            report.pairwise_upper.push_back({i, j, upper});
            theta_sum += theta;
            upper_sum += upper;
        }
    }
    const auto pairs = static_cast<double>(report.pairwise_theta.size());
    report.average_theta = theta_sum / pairs;
    report.average_upper = upper_sum / pairs;
    if (mask) {
        if (!(mask->area_km2 > 0.0)) throw DomainError("density needs a mask with positive area");
        for (const auto c : report.counts) report.density_per_km2.push_back(static_cast<double>(c) / mask->area_km2);
    }
    return report;
}

std::vector<OverlapReport> overlap_pyramid(std::span<const std::string> names, std::span<const BinaryRaster> rasters,
                                           std::span<const int> factors, const CountryMask* mask) {
    if (factors.empty() || factors.front() != 1) throw DomainError("pyramid factors must start at 1");
    if (!std::is_sorted(factors.begin(), factors.end()) ||
        std::adjacent_find(factors.begin(), factors.end()) != factors.end())
        throw DomainError("pyramid factors must be strictly ascending");
    std::vector<OverlapReport> out;
    for (const int f : factors) {
        std::vector<BinaryRaster> coarse;
        coarse.reserve(rasters.size());
        for (const auto& r : rasters) coarse.push_back(block_or_downscale(r, f));
        out.push_back(overlap_report(names, coarse, mask, f));
    }
    return out;
}

} // namespace settle
