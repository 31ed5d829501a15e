#include "settle/agreement.hpp"
#include "settle/error.hpp"
#include "settle/featurize.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>

using namespace settle;

namespace {

// Feature layers at 30" over `spec`, constant unless changed.
FeatureLayers constant_layers(const GridSpec& spec, std::uint8_t code = 21) {
    const GridSpec coarse = GridSpec(30.0, spec.lattice_col() / 10, spec.lattice_row() / 10, (spec.width() + 19) / 10,
                                     (spec.height() + 19) / 10);
    FeatureLayers layers{NumericRaster(coarse, 0.5), NumericRaster(coarse, 0.1), NumericRaster(coarse, 3.0),
                         CategoricalRaster(coarse, code)};
    return layers;
}

std::vector<AdminRegion> one_region(const GridSpec& spec, const std::string& country = "SYA") {
    return {{country, country + ".1", "R", testing::cell_box(spec, 0, 0, static_cast<double>(spec.width()),
                                                           static_cast<double>(spec.height()))}};
}

FeatureRow row_of(SettlementClass cls, int label) {
    FeatureRow r;
    r.cls = cls;
    r.label = static_cast<std::uint8_t>(label);
    return r;
}

// Table with `n` rows of the class, `pos` of them labelled 1.
void add_rows(FeatureTable& t, SettlementClass cls, int n, int pos) {
    for (int i = 0; i < n; ++i) t.rows.push_back(row_of(cls, i < pos ? 1 : 0));
}

} // namespace

TEST_CASE("class codes and remapping") {
    CHECK(settlement_class_from_code(30) == SettlementClass::UrbanCentre);
    CHECK(settlement_class_from_code(10) == SettlementClass::Water);
    CHECK_FALSE(settlement_class_from_code(14).has_value());
    CHECK(effective_class(SettlementClass::Water) == SettlementClass::VeryLowDensityRural);
    CHECK(effective_class(SettlementClass::Suburban) == SettlementClass::Suburban);
    CHECK(is_high_density(SettlementClass::RuralCluster));
    CHECK(is_high_density(SettlementClass::Suburban));
    CHECK(is_high_density(SettlementClass::UrbanCentre));
    CHECK_FALSE(is_high_density(SettlementClass::LowDensityRural));
    CHECK_FALSE(is_high_density(SettlementClass::Water));
    CHECK(feature_names()[0] == "rwi");
    CHECK(feature_names()[3] == "urban_centre");
    CHECK(feature_names()[8] == "very_low_density_rural");
}

TEST_CASE("one-hot rows sum to 0 for suburban and 1 otherwise") {
    for (const auto code : kSettlementCodes) {
        const auto cls = effective_class(*settlement_class_from_code(code));
        const auto f = row_of(cls, 0).features();
        double sum = 0.0;
        for (std::size_t i = kNumericFeatures; i < kFeatureCount; ++i) {
            CHECK((f[i] == 0.0 || f[i] == 1.0));
            sum += f[i];
        }
        CHECK(sum == (cls == SettlementClass::Suburban ? 0.0 : 1.0));
    }
}

TEST_CASE("label cells on identical and disjoint rasters") {
    CounterRng rng(3);
    const auto spec = testing::small_grid(16, 16);
    const auto x = testing::random_raster(spec, rng, 0.3);
    const auto same = label_cells(x, x, x);
    CHECK(static_cast<std::int64_t>(same.size()) == count_settled(x));
    for (const auto& c : same) CHECK(c.label == 1);

    BinaryRaster a(spec), b(spec), c(spec);
    a.set(0, 0);
    b.set(1, 1);
    c.set(2, 2);
    const auto disjoint = label_cells(a, b, c);
    CHECK(disjoint.size() == 3);
    for (const auto& cell : disjoint) CHECK(cell.label == 0);
    CHECK_THROWS_AS(label_cells(a, b, BinaryRaster(testing::small_grid(16, 17))), AlignmentError);
}

TEST_CASE("label cells equal the set-algebra oracle") {
    CounterRng rng(4);
    const auto spec = testing::small_grid(32, 32);
    const auto x = testing::random_raster(spec, rng, 0.4), y = testing::random_raster(spec, rng, 0.5),
               z = testing::random_raster(spec, rng, 0.6);
    const auto cells = label_cells(x, y, z);
    std::size_t k = 0, positives = 0;
    for (std::int64_t r = 0; r < 32; ++r)
        for (std::int64_t c = 0; c < 32; ++c) {
            const bool any = x.get(r, c) || y.get(r, c) || z.get(r, c);
            const bool all = x.get(r, c) && y.get(r, c) && z.get(r, c);
            if (!any) continue;
            REQUIRE(k < cells.size());
            CHECK(cells[k].row == r);
            CHECK(cells[k].col == c);
            CHECK(cells[k].label == (all ? 1 : 0));
            positives += all;
            ++k;
        }
    CHECK(k == cells.size());
    std::size_t counted = 0;
    for (const auto& c : cells) counted += c.label;
    CHECK(counted == positives);
}

TEST_CASE("sample feature nearest neighbour") {
    const auto spec = testing::small_grid(20, 10);
    const auto coarse = GridSpec(30.0, spec.lattice_col() / 10, spec.lattice_row() / 10, 2, 1);
    NumericRaster layer(coarse, 5.0);
    for (std::int64_t c = 0; c < 20; ++c) CHECK(*sample_feature(layer, spec, 3, c) == 5.0);

    layer.values = {1.0, 2.0};
    // The 30" boundary sits between 3" columns 9 and 10.
    for (std::int64_t c = 0; c < 20; ++c) CHECK(*sample_feature(layer, spec, 0, c) == (c < 10 ? 1.0 : 2.0));

    layer.values[1] = kNoData;
    CHECK_FALSE(sample_feature(layer, spec, 0, 15).has_value());
    // Centre outside the layer.
    const auto outside = testing::small_grid(4, 4, spec.lattice_col() + 40, spec.lattice_row());
    CHECK_FALSE(sample_feature(layer, outside, 0, 0).has_value());

    CategoricalRaster ghsl(coarse, 13);
    ghsl.codes[0] = kNoDataCode;
    CHECK_FALSE(sample_feature(ghsl, spec, 0, 0).has_value());
    CHECK(*sample_feature(ghsl, spec, 0, 12) == 13);
}

TEST_CASE("build table with complete features keeps the union") {
    CounterRng rng(5);
    const auto spec = testing::small_grid(20, 20);
    const auto x = testing::random_raster(spec, rng, 0.3), y = testing::random_raster(spec, rng, 0.3),
               z = testing::random_raster(spec, rng, 0.3);
    auto layers = constant_layers(spec);
    const auto table = build_table(x, y, z, layers, one_region(spec));
    BinaryRaster u = x;
    u |= y;
    u |= z;
    CHECK(static_cast<std::int64_t>(table.rows.size()) == count_settled(u));
    CHECK(table.dropped_missing == 0);
    CHECK(table.countries == std::vector<std::string>{"SYA"});
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
        const auto& a = table.rows[i - 1];
        const auto& b = table.rows[i];
        CHECK(std::tie(a.lattice_row, a.lattice_col) < std::tie(b.lattice_row, b.lattice_col));
    }
}

TEST_CASE("missing rwi drops exactly one row") {
    const auto spec = testing::small_grid(20, 20);
    BinaryRaster x(spec);
    x.set(2, 2);
    x.set(15, 15);
    auto layers = constant_layers(spec);
    // 3" cell (15, 15) lies in 30" cell (1, 1).
    layers.rwi.at(1, 1) = kNoData;
    const auto table = build_table(x, x, x, layers, one_region(spec));
    CHECK(table.rows.size() == 1);
    CHECK(table.dropped_missing == 1);

    layers = constant_layers(spec);
    layers.nightlight.at(0, 0) = -1.0;
    CHECK(build_table(x, x, x, layers, one_region(spec)).dropped_missing == 1);
}

TEST_CASE("water at a settled cell becomes very low density rural") {
    const auto spec = testing::small_grid(10, 10);
    BinaryRaster x(spec);
    x.set(5, 5);
    const auto table = build_table(x, x, x, constant_layers(spec, 10), one_region(spec));
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].cls == SettlementClass::VeryLowDensityRural);
    CHECK(table.rows[0].features()[8] == 1.0);
}

TEST_CASE("cells outside every region are dropped and countries come from regions") {
    const auto spec = testing::small_grid(20, 10);
    BinaryRaster x(spec);
    x.set(1, 1);
    x.set(1, 15);
    x.set(5, 5);
    const std::vector<AdminRegion> regions{{"SYB", "SYB.1", "B", testing::cell_box(spec, 10, 0, 20, 10)},
                                           {"SYA", "SYA.1", "A", testing::cell_box(spec, 0, 0, 10, 4)}};
    const auto table = build_table(x, x, x, constant_layers(spec), regions);
    CHECK(table.countries == std::vector<std::string>{"SYA", "SYB"});
    REQUIRE(table.rows.size() == 2);
    CHECK(table.dropped_outside_regions == 1);
    CHECK(table.country_of(table.rows[0]) == "SYA");
    CHECK(table.country_of(table.rows[1]) == "SYB");
}

TEST_CASE("positive share equals triple intersection over union") {
    CounterRng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const auto spec = testing::small_grid(1 + static_cast<std::int64_t>(rng.below(64)), 1 + static_cast<std::int64_t>(rng.below(64)));
        const auto x = testing::random_raster(spec, rng, rng.uniform()), y = testing::random_raster(spec, rng, rng.uniform()),
                   z = testing::random_raster(spec, rng, rng.uniform());
        const auto cells = label_cells(x, y, z);
        std::int64_t pos = 0;
        for (const auto& c : cells) pos += c.label;
        BinaryRaster all = x, any = x;
        all &= y;
        all &= z;
        any |= y;
        any |= z;
        CHECK(static_cast<std::int64_t>(cells.size()) == count_settled(any));
        CHECK(pos == count_settled(all));
    }
}

TEST_CASE("density split ratio") {
    FeatureTable equal;
    add_rows(equal, SettlementClass::UrbanCentre, 10, 4);
    add_rows(equal, SettlementClass::LowDensityRural, 20, 8);
    CHECK(density_split_ratio(equal) == 1.0);

    FeatureTable t;
    add_rows(t, SettlementClass::RuralCluster, 5, 3);
    add_rows(t, SettlementClass::DenseUrbanCluster, 5, 3);
    add_rows(t, SettlementClass::VeryLowDensityRural, 10, 2);
    CHECK(density_split_ratio(t) == 3.0);

    FeatureTable half;
    add_rows(half, SettlementClass::Suburban, 4, 4);
    add_rows(half, SettlementClass::LowDensityRural, 6, 3);
    CHECK(density_split_ratio(half) == 2.0);

    FeatureTable only_high;
    add_rows(only_high, SettlementClass::UrbanCentre, 3, 1);
    CHECK_THROWS_AS(density_split_ratio(only_high), DomainError);
    FeatureTable no_low_positive;
    add_rows(no_low_positive, SettlementClass::UrbanCentre, 3, 1);
    add_rows(no_low_positive, SettlementClass::LowDensityRural, 3, 0);
    CHECK_THROWS_AS(density_split_ratio(no_low_positive), DomainError);
}

TEST_CASE("feature table serialization is deterministic and round trips") {
    testing::TempDir dir("ft");
    CounterRng rng(7);
    const auto spec = testing::small_grid(30, 30);
    const auto x = testing::random_raster(spec, rng, 0.3), y = testing::random_raster(spec, rng, 0.3),
               z = testing::random_raster(spec, rng, 0.3);
    auto layers = constant_layers(spec, 13);
    for (auto& v : layers.rwi.values) v = rng.uniform(-1, 1);
    layers.ghsl.codes[1] = 30;
    const auto regions = one_region(spec);
    const auto a = build_table(x, y, z, layers, regions);
    const auto b = build_table(x, y, z, layers, regions);
    write_feature_table(dir / "a.stft", a);
    write_feature_table(dir / "b.stft", b);
    CHECK(testing::slurp(dir / "a.stft") == testing::slurp(dir / "b.stft"));
    const auto back = read_feature_table(dir / "a.stft");
    REQUIRE(back.rows.size() == a.rows.size());
    CHECK(back.countries == a.countries);
    CHECK(back.resolution_arcsec == 3.0);
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(back.rows[i].features() == a.rows[i].features());
        CHECK(back.rows[i].label == a.rows[i].label);
        CHECK(back.rows[i].lattice_col == a.rows[i].lattice_col);
    }
    write_feature_csv(dir / "a.csv", a);
    write_feature_csv(dir / "b.csv", b);
    const auto csv = testing::slurp(dir / "a.csv");
    CHECK(csv == testing::slurp(dir / "b.csv"));
    CHECK(csv.rfind("country_code,lattice_row,lattice_col,label,rwi,rwi_error,nightlight,settlement_class,is_urban_centre", 0) == 0);

    testing::spit(dir / "bad.stft", "XXXX");
    CHECK_THROWS_AS(read_feature_table(dir / "bad.stft"), FormatError);
    auto truncated = testing::slurp(dir / "a.stft");
    truncated.resize(truncated.size() - 3);
    testing::spit(dir / "short.stft", truncated);
    CHECK_THROWS_AS(read_feature_table(dir / "short.stft"), FormatError);
}

TEST_CASE("concat merges countries") {
    const auto spec = testing::small_grid(10, 10);
    BinaryRaster x(spec);
    x.set(1, 1);
    const auto a = build_table(x, x, x, constant_layers(spec), one_region(spec, "SYB"));
    const auto b = build_table(x, x, x, constant_layers(spec), one_region(spec, "SYA"));
    const std::vector<FeatureTable> both{a, b};
    const auto merged = concat(both);
    CHECK(merged.countries == std::vector<std::string>{"SYA", "SYB"});
    REQUIRE(merged.rows.size() == 2);
    CHECK(merged.country_of(merged.rows[0]) == "SYA");
}
