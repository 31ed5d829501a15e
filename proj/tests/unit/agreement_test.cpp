#include "settle/agreement.hpp"
#include "settle/error.hpp"
#include "settle/oracle.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <vector>

using namespace settle;

namespace {

CountryMask full_mask(const GridSpec& spec) {
    CountryMask m{BinaryRaster(spec), "SYN", 0.0};
    for (std::int64_t r = 0; r < spec.height(); ++r)
        for (std::int64_t c = 0; c < spec.width(); ++c) m.mask.set(r, c);
    m.area_km2 = masked_area_km2(m.mask);
    return m;
}

BinaryRaster with_count(const GridSpec& spec, std::int64_t n) {
    BinaryRaster r(spec);
    for (std::int64_t i = 0; i < n; ++i) r.set(i / spec.width(), i % spec.width());
    return r;
}

} // namespace

TEST_CASE("jaccard basics") {
    const auto spec = testing::small_grid(4, 4);
    CounterRng rng(1);
    auto x = testing::random_raster(spec, rng, 0.5);
    x.set(0, 0);
    CHECK(jaccard(x, x) == 1.0);

    BinaryRaster a(spec), b(spec);
    a.set(0, 0);
    a.set(0, 1);
    b.set(2, 2);
    CHECK(jaccard(a, b) == 0.0);

    BinaryRaster y(spec);
    y.set(0, 0);
    y.set(1, 0);
    CHECK(jaccard(a, y) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(jaccard(a, y) == oracle::jaccard(a, y));

    CHECK(jaccard(BinaryRaster(spec), BinaryRaster(spec)) == 1.0);
    CHECK_THROWS_AS(jaccard(a, BinaryRaster(testing::small_grid(4, 5))), AlignmentError);
}

TEST_CASE("average overlap") {
    const auto spec = testing::small_grid(10, 1);
    // X = {0..9}, Y = {0,1}, Z = {0..5}: pairs 0.2, 0.6, 1/3.
    const auto x = with_count(spec, 10), y = with_count(spec, 2), z = with_count(spec, 6);
    const std::vector<BinaryRaster> three{x, y, z};
    CHECK(average_overlap(three) == doctest::Approx((0.2 + 0.6 + 1.0 / 3.0) / 3.0).epsilon(1e-15));

    // P = {0,1,2}, Q = {0..4}, S = {1..9}: pairwise 0.6, 0.2, 0.4.
    const auto row = testing::small_grid(10, 1);
    BinaryRaster p(row), q(row), s(row);
    for (int i = 0; i < 3; ++i) p.set(0, i);
    for (int i = 0; i < 5; ++i) q.set(0, i);
    for (int i = 1; i < 10; ++i) s.set(0, i);
    CHECK(jaccard(p, q) == 0.6);
    CHECK(jaccard(p, s) == 0.2);
    CHECK(jaccard(q, s) == 0.4);
    const std::vector<BinaryRaster> pqs{p, q, s};
    CHECK(average_overlap(pqs) == doctest::Approx(0.4).epsilon(1e-15));

    const std::vector<BinaryRaster> two{x, z};
    CHECK(average_overlap(two) == jaccard(x, z));
    const std::vector<BinaryRaster> one{x};
    CHECK_THROWS_AS(average_overlap(one), DomainError);
}

TEST_CASE("upper limit") {
    const auto spec = testing::small_grid(100, 10);
    const auto x = with_count(spec, 100), y = with_count(spec, 1000);
    CHECK(upper_limit(x, y) == 0.1);
    CHECK(upper_limit_from_counts(100, 1000) == 0.1);
    CHECK(upper_limit(x, x) == 1.0);
    CHECK(upper_limit(BinaryRaster(spec), y) == 0.0);
    CHECK_THROWS_AS(upper_limit(BinaryRaster(spec), BinaryRaster(spec)), DomainError);
}

TEST_CASE("metrics equal the enumeration oracles on random rasters") {
    CounterRng rng(555);
    for (int trial = 0; trial < 200; ++trial) {
        const auto spec = testing::small_grid(1 + static_cast<std::int64_t>(rng.below(64)), 1 + static_cast<std::int64_t>(rng.below(64)));
        std::vector<BinaryRaster> rs;
        for (int k = 0; k < 3; ++k) rs.push_back(testing::random_raster(spec, rng, rng.uniform(0.0, 0.6)));
        const auto pc = pair_counts(rs[0], rs[1]);
        const auto oc = oracle::counts(rs[0], rs[1]);
        CHECK(pc.intersection == oc.intersection);
        CHECK(pc.union_size == oc.union_size);
        CHECK(jaccard(rs[0], rs[1]) == oracle::jaccard(rs[0], rs[1]));
        CHECK(average_overlap(rs) == oracle::average_overlap(rs));
        if (count_settled(rs[0]) + count_settled(rs[1]) > 0) CHECK(upper_limit(rs[0], rs[1]) == oracle::upper_limit(rs[0], rs[1]));
    }
}

TEST_CASE("bounds, symmetry and average range hold on random pairs") {
    CounterRng rng(77);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto spec = testing::small_grid(1 + static_cast<std::int64_t>(rng.below(40)), 1 + static_cast<std::int64_t>(rng.below(40)));
        const auto x = testing::random_raster(spec, rng, rng.uniform());
        const auto y = testing::random_raster(spec, rng, rng.uniform());
        if (count_settled(x) + count_settled(y) == 0) continue;
        const double t = jaccard(x, y), u = upper_limit(x, y);
        CHECK(0.0 <= t);
        CHECK(t <= u);
        CHECK(u <= 1.0);
        CHECK(jaccard(y, x) == t);
    }
    for (int trial = 0; trial < 100; ++trial) {
        const auto spec = testing::small_grid(16, 16);
        std::vector<BinaryRaster> rs;
        const int k = 2 + static_cast<int>(rng.below(4));
        for (int i = 0; i < k; ++i) rs.push_back(testing::random_raster(spec, rng, rng.uniform()));
        double lo = 1.0, hi = 0.0;
        for (int i = 0; i < k; ++i)
            for (int j = i + 1; j < k; ++j) {
                lo = std::min(lo, jaccard(rs[i], rs[j]));
                hi = std::max(hi, jaccard(rs[i], rs[j]));
            }
        const double avg = average_overlap(rs);
        CHECK(avg >= lo - 1e-15);
        CHECK(avg <= hi + 1e-15);
    }
}

TEST_CASE("density") {
    const GridSpec spec(3.0, 0, 107950, 100, 100);
    const auto mask = full_mask(spec);
    CHECK(density(BinaryRaster(spec), mask) == 0.0);
    const auto hundred = with_count(spec, 100);
    CHECK(density(hundred, mask) == doctest::Approx(1.1645).epsilon(1e-3));
    CHECK(density(with_count(spec, 200), mask) == doctest::Approx(2 * density(hundred, mask)).epsilon(1e-15));
    CountryMask empty{BinaryRaster(spec), "X", 0.0};
    CHECK_THROWS_AS(density(hundred, empty), DomainError);
}

TEST_CASE("pearson correlation") {
    const std::vector<double> xs{1, 2, 3, 4};
    std::vector<double> lin, neg;
    for (double v : xs) {
        lin.push_back(2 * v + 1);
        neg.push_back(-v);
    }
    CHECK(pearson(xs, lin).r == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(pearson(xs, neg).r == doctest::Approx(-1.0).epsilon(1e-15));

    // r = 5.5 / sqrt(5 * 8.75); p from the t distribution with 2 degrees of freedom.
    const std::vector<double> ys{1, 3, 2, 5};
    const auto c = pearson(xs, ys);
    CHECK(c.r == doctest::Approx(5.5 / std::sqrt(43.75)).epsilon(1e-14));
    CHECK(c.p_value == doctest::Approx(0.1684781593797).epsilon(1e-10));
    CHECK(c.n == 4);

    const std::vector<double> a{0.1, 0.4, 0.35, 0.8, 0.6}, b{0.5, 0.62, 0.55, 0.9, 0.7};
    const auto d = pearson(a, b);
    CHECK(d.r == doctest::Approx(0.9582904799492733).epsilon(1e-12));
    CHECK(d.p_value == doctest::Approx(0.010161333666865197).epsilon(1e-9));

    const std::vector<double> flat{2, 2, 2, 2};
    CHECK_THROWS_AS(pearson(xs, flat), DomainError);
    const std::vector<double> two{1, 2};
    CHECK_THROWS_AS(pearson(two, two), DomainError);
    const std::vector<double> three{1, 2, 3};
    CHECK_THROWS_AS(pearson(xs, three), DomainError);
}

TEST_CASE("pyramid of identical rasters stays at 1") {
    CounterRng rng(5);
    const auto spec = testing::small_grid(32, 32);
    auto x = testing::random_raster(spec, rng, 0.2);
    x.set(0, 0);
    const std::vector<BinaryRaster> rs{x, x, x};
    const std::vector<std::string> names{"a", "b", "c"};
    const std::vector<int> factors{1, 2, 4, 8, 16, 30};
    const auto reports = overlap_pyramid(names, rs, factors);
    REQUIRE(reports.size() == factors.size());
    for (std::size_t i = 0; i < reports.size(); ++i) {
        CHECK(reports[i].scale_factor == factors[i]);
        CHECK(reports[i].average_theta == 1.0);
        CHECK(reports[i].average_upper == 1.0);
    }
}

TEST_CASE("offset checker patterns jump from 0 to 1") {
    const auto spec = testing::small_grid(16, 16);
    BinaryRaster x(spec), y(spec);
    for (int r = 0; r < 16; ++r)
        for (int c = 0; c < 16; ++c) ((r + c) % 2 ? y : x).set(r, c);
    const std::vector<BinaryRaster> rs{x, y};
    const std::vector<std::string> names{"x", "y"};
    const std::vector<int> factors{1, 2};
    const auto reports = overlap_pyramid(names, rs, factors);
    CHECK(reports[0].average_theta == 0.0);
    CHECK(reports[1].average_theta == 1.0);
    CHECK(reports[0].counts == std::vector<std::int64_t>{128, 128});
    CHECK(reports[1].counts == std::vector<std::int64_t>{64, 64});
}

TEST_CASE("single factor pyramid equals the plain report") {
    CounterRng rng(6);
    const auto spec = testing::small_grid(20, 20);
    const std::vector<BinaryRaster> rs{testing::random_raster(spec, rng, 0.3), testing::random_raster(spec, rng, 0.3),
                                       testing::random_raster(spec, rng, 0.3)};
    const std::vector<std::string> names{"a", "b", "c"};
    const std::vector<int> one{1};
    const auto reports = overlap_pyramid(names, rs, one);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].average_theta == average_overlap(rs));
    const auto plain = overlap_report(names, rs);
    CHECK(plain.average_theta == reports[0].average_theta);
    REQUIRE(plain.pairwise_theta.size() == 3);
    CHECK(plain.pairwise_theta[1].first == 0);
    CHECK(plain.pairwise_theta[1].second == 2);
    CHECK(plain.pairwise_theta[2].value == jaccard(rs[1], rs[2]));
    CHECK(plain.pairwise_upper[0].value == upper_limit(rs[0], rs[1]));
    for (std::size_t i = 0; i < 3; ++i) CHECK(plain.pairwise_theta[i].value <= plain.pairwise_upper[i].value);
}

TEST_CASE("pyramid overlap is not monotone in the factor") {
    // X = {0, 1}, Y = {0, 1, 2} in one row: 2/3 at factor 1, 1/2 at factor 2.
    const auto spec = testing::small_grid(4, 1);
    BinaryRaster x(spec), y(spec);
    x.set(0, 0);
    x.set(0, 1);
    y.set(0, 0);
    y.set(0, 1);
    y.set(0, 2);
    const std::vector<BinaryRaster> rs{x, y};
    const std::vector<std::string> names{"x", "y"};
    const std::vector<int> factors{1, 2};
    const auto reports = overlap_pyramid(names, rs, factors);
    CHECK(reports[0].average_theta == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(reports[1].average_theta == 0.5);
}

TEST_CASE("pyramid density and factor validation") {
    const auto spec = testing::small_grid(8, 8);
    const auto mask = full_mask(spec);
    const std::vector<BinaryRaster> rs{with_count(spec, 8), with_count(spec, 16)};
    const std::vector<std::string> names{"a", "b"};
    const std::vector<int> factors{1, 2};
    const auto reports = overlap_pyramid(names, rs, factors, &mask);
    CHECK(reports[0].density_per_km2[0] == doctest::Approx(8 / mask.area_km2));
    CHECK(reports[1].counts[0] == 4);
    // Sixteen cells in two full rows become four coarse cells.
    CHECK(reports[1].density_per_km2[1] == doctest::Approx(4 / mask.area_km2));
    const std::vector<int> bad{2, 4};
    CHECK_THROWS(overlap_pyramid(names, rs, bad));
    const std::vector<int> unsorted{1, 4, 2};
    CHECK_THROWS(overlap_pyramid(names, rs, unsorted));
}
