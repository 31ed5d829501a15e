#include "settle/agreement.hpp"
#include "settle/error.hpp"
#include "settle/harmonize.hpp"
#include "settle/oracle.hpp"
#include "settle/pipeline.hpp"
#include "settle/raster_cache.hpp"
#include "settle/synth.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>

using namespace settle;

namespace {

SynthConfig small_config(std::uint64_t seed = 3) {
    SynthConfig c;
    c.seed = seed;
    c.width = 48;
    c.height = 48;
    c.blob_count = 12;
    return c;
}

} // namespace

TEST_CASE("generation is deterministic") {
    const auto a = generate_country(small_config());
    const auto b = generate_country(small_config());
    CHECK(a.truth == b.truth);
    for (std::size_t i = 0; i < 3; ++i) CHECK(a.expected[i] == b.expected[i]);
    CHECK(a.footprints.size() == b.footprints.size());
    CHECK(a.population.values == b.population.values);
    const auto c = generate_country(small_config(4));
    CHECK_FALSE(a.truth == c.truth);
}

TEST_CASE("unperturbed datasets agree perfectly") {
    const auto country = generate_country(small_config());
    REQUIRE(count_settled(country.truth) > 0);
    for (const auto& e : country.expected) CHECK(e == country.truth);
    CHECK(average_overlap(country.expected) == 1.0);
    CHECK(oracle::average_overlap(country.expected) == 1.0);
}

TEST_CASE("full dropout empties a dataset") {
    auto cfg = small_config();
    cfg.perturb[0].dropout = 1.0;
    const auto country = generate_country(cfg);
    CHECK(count_settled(country.expected[0]) == 0);
    CHECK(count_settled(country.expected[1]) == count_settled(country.truth));
}

TEST_CASE("dilation inflates counts and caps the upper limit") {
    auto cfg = small_config();
    cfg.perturb[1].dilation = 1;
    const auto country = generate_country(cfg);
    const auto truth = count_settled(country.truth);
    const auto dilated = count_settled(country.expected[1]);
    CHECK(dilated > truth);
    CHECK(country.expected[1] == dilate(country.truth, 1));
    CHECK(upper_limit(country.truth, country.expected[1]) < 1.0);
    CHECK(jaccard(country.truth, country.expected[1]) == doctest::Approx(static_cast<double>(truth) / static_cast<double>(dilated)));
}

TEST_CASE("dilate and shift") {
    BinaryRaster r(testing::small_grid(5, 5));
    r.set(2, 2);
    const auto d = dilate(r, 1);
    CHECK(count_settled(d) == 9);
    CHECK(d.get(1, 1));
    CHECK(d.get(3, 3));
    CHECK(dilate(r, 0) == r);
    CHECK_THROWS_AS(dilate(r, -1), DomainError);
    const auto s = shift(r, 1, -2);
    CHECK(s.get(3, 0));
    CHECK(count_settled(s) == 1);
    CHECK(count_settled(shift(r, 0, 3)) == 0);
}

TEST_CASE("checker and empty patterns") {
    auto cfg = small_config();
    cfg.pattern = SynthPattern::Checker;
    const auto checker = generate_country(cfg);
    CHECK(count_settled(checker.truth) > 0);
    cfg.pattern = SynthPattern::Empty;
    const auto empty = generate_country(cfg);
    CHECK(count_settled(empty.truth) == 0);
}

TEST_CASE("written files harmonize to the expected rasters") {
    auto cfg = small_config(9);
    cfg.perturb[0] = {0, 0.1, 0, 0, 10};
    cfg.perturb[1] = {1, 0.05, 0, 0, 0};
    cfg.perturb[2] = {0, 0.05, 0, 1, 10};
    const auto country = generate_country(cfg);
    testing::TempDir dir("synth_roundtrip");
    write_country(country, cfg, dir.path());
    for (const char* f : {"footprints.csv", "extents.geojson", "population.tif", "rwi.tif", "rwi_error.tif",
                          "nightlight.tif", "ghsl.tif", "regions.geojson", "hdi.csv", "truth.sbr", "pipeline.cfg"})
        CHECK(std::filesystem::exists(dir / f));
    const auto pipeline = load_pipeline_config(dir / "pipeline.cfg");
    const auto regions = read_regions_geojson(pipeline.regions, pipeline.region_options);
    CHECK(regions.size() == country.regions.size());
    const auto grid = country_grid(regions, pipeline.resolution_arcsec);
    CHECK(grid == country.grid);
    const auto mask = country_mask(grid, regions);
    REQUIRE(pipeline.datasets.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CAPTURE(i);
        CHECK(harmonize_dataset(pipeline.datasets[i], mask, 1) == country.expected[i]);
    }
    CHECK(read_binary_raster(dir / "truth.sbr") == country.truth);
}

TEST_CASE("regions partition the grid into countries") {
    const auto country = generate_country(small_config());
    CHECK(country.regions.size() == 12);
    std::set<std::string> countries;
    for (const auto& r : country.regions) countries.insert(r.country_code);
    CHECK(countries.size() == 6);
    CHECK(country.hdi.size() == 12);
}

TEST_CASE("oracle refuses large inputs and agrees on small ones") {
    const GridSpec big = testing::small_grid(oracle::kMaxSide + 1, 4);
    CHECK_THROWS_AS(oracle::count(BinaryRaster(big)), DomainError);
    CHECK_THROWS_AS(oracle::blockor(BinaryRaster(big), 2), DomainError);
    CounterRng rng(5);
    const auto r = testing::random_raster(testing::small_grid(13, 11), rng, 0.4);
    CHECK(oracle::blockor(r, 1) == r);
    const auto spec = testing::small_grid(10, 10);
    const std::vector<MultiPolygon> rect{testing::cell_box(spec, 2, 2, 7, 7)};
    CHECK(oracle::count(oracle::rasterize_coverage(rect, spec)) == 25);
}

TEST_CASE("synth config parsing") {
    const auto cfg = parse_synth_config("seed = 7\nwidth = 64\nheight = 32\npattern = checker\n"
                                        "extents.dilation = 2\nfootprints.dropout = 0.5\n"
                                        "pipeline.model.seed = 3\n");
    CHECK(cfg.seed == 7);
    CHECK(cfg.width == 64);
    CHECK(cfg.height == 32);
    CHECK(cfg.pattern == SynthPattern::Checker);
    CHECK(cfg.perturb[1].dilation == 2);
    CHECK(cfg.perturb[0].dropout == 0.5);
    REQUIRE(cfg.pipeline.size() == 1);
    CHECK(cfg.pipeline[0].first == "model.seed");

    CHECK_THROWS_AS(parse_synth_config("bogus = 1\n"), UsageError);
    CHECK_THROWS_AS(parse_synth_config("seed = 1\nseed = 2\n"), UsageError);
    CHECK_THROWS_AS(parse_synth_config("pattern = stripes\n"), UsageError);
    CHECK_THROWS_AS(parse_synth_config("footprints.dropout = 1.5\n"), UsageError);
    CHECK_THROWS_AS(parse_synth_config("width = ten\n"), UsageError);
    CHECK_THROWS_AS(parse_synth_config("footprints.colour = red\n"), UsageError);
    CHECK_THROWS_AS(load_synth_config("/nonexistent/synth.cfg"), UsageError);
    const auto file = load_synth_config(SETTLE_TEST_DATA "/synth_country.cfg");
    CHECK(file.width == 128);
    CHECK(file.perturb[2].offset_cols == 1);
}
