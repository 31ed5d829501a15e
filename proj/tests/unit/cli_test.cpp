#include "settle/config.hpp"
#include "settle/error.hpp"
#include "settle/svg.hpp"
#include "support.hpp"

#include <doctest.h>

#include <regex>

using namespace settle;

namespace {

const std::string kCli = SETTLE_CLI;

const char* kSmallSynth = "seed = 11\nwidth = 48\nheight = 48\nblob_count = 14\n"
                          "extents.dilation = 1\nfootprints.dropout = 0.1\npopulation.offset_cols = 1\n"
                          "rwi.missing = 0.05\npipeline.factors = 1,2\npipeline.model.bootstrap_samples = 10\n"
                          "pipeline.model.outer_folds = 3\npipeline.model.inner_folds = 3\n";

testing::CommandResult settle_cli(const std::string& args) { return testing::run_command(kCli + " " + args); }

/// Generates a small synthetic country and returns its pipeline config path.
std::filesystem::path make_country(const testing::TempDir& dir, const std::string& synth = kSmallSynth) {
    testing::spit(dir / "synth.cfg", synth);
    const auto r = settle_cli("synth --config " + testing::quote(dir / "synth.cfg") + " --out " + testing::quote(dir / "country"));
    REQUIRE_MESSAGE(r.status == 0, r.output);
    return dir / "country" / "pipeline.cfg";
}

std::size_t occurrences(const std::string& text, const std::string& what) {
    std::size_t n = 0;
    for (auto p = text.find(what); p != std::string::npos; p = text.find(what, p + 1)) ++n;
    return n;
}

} // namespace

TEST_CASE("pipeline config keys") {
    testing::TempDir dir("cli_config");
    const auto base = dir.path();
    const auto file = KeyValueFile::parse_text("country = SYN\nregions = r.geojson\n"
                                               "dataset.fp.kind = footprints\ndataset.fp.path = data/fp.csv\n"
                                               "dataset.fp.min_confidence = 0.8\nfactors = 1,2,4\nmodel.seed = 9\n"
                                               "output = /abs/out\n");
    const auto cfg = parse_pipeline_config(file, base);
    CHECK(cfg.country == "SYN");
    CHECK(cfg.regions == base / "r.geojson");
    REQUIRE(cfg.datasets.size() == 1);
    CHECK(cfg.datasets[0].path == base / "data/fp.csv");
    CHECK(cfg.datasets[0].kind == DatasetKind::Footprints);
    CHECK(cfg.factors == std::vector<int>{1, 2, 4});
    CHECK(cfg.model.seed == 9);
    CHECK(cfg.output == "/abs/out");

    auto bad = [&](const std::string& text) { return parse_pipeline_config(KeyValueFile::parse_text(text), base); };
    CHECK_THROWS_AS(bad("regions = r\nbogus = 1\n"), UsageError);
    CHECK_THROWS_AS(KeyValueFile::parse_text("regions = a\nregions = b\n"), UsageError);
    CHECK_THROWS_AS(KeyValueFile::parse_text("no equals sign\n"), UsageError);
    CHECK_THROWS_AS(bad("regions = r\ndataset.x.kind = lidar\ndataset.x.path = p\n"), UsageError);
    CHECK_THROWS_AS(bad("regions = r\ndataset.x.kind = footprints\n"), UsageError);
    CHECK_THROWS_AS(bad("country = SYN\n"), UsageError);
    CHECK_THROWS_AS(bad("regions = r\nfactors = 2,4\n"), UsageError);
    CHECK_THROWS_AS(bad("regions = r\nfactors = 1,4,2\n"), UsageError);
    CHECK_THROWS_AS(bad("regions = r\nmodel.seed = x\n"), UsageError);

    try {
        KeyValueFile::parse_text("a = 1\n\n# note\nb\n", "demo.cfg");
        FAIL("expected a usage error");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find("demo.cfg:4") != std::string::npos);
    }
    const auto kv = KeyValueFile::parse_text("# c\nkey =  spaced value  \n");
    CHECK(kv.get("key") == "spaced value");
    CHECK_FALSE(kv.get("other").has_value());
}

TEST_CASE("theta colour ramp") {
    CHECK(theta_color(0.0) == "#d7191c");
    CHECK(theta_color(0.5) == "#ffffbf");
    CHECK(theta_color(1.0) == "#1a9641");
    CHECK(theta_color(std::nullopt) == "#cccccc");
    CHECK(theta_color(-0.5) == "#d7191c");
    CHECK(theta_color(1.5) == "#1a9641");
    // Halfway between the first two stops: (215+255)/2, (25+255)/2, (28+191)/2.
    CHECK(theta_color(0.25) == "#eb8c6e");
}

TEST_CASE("odds ratio chart geometry") {
    const std::vector<OddsRatio> ratios{{"urban", 1.55, 1.49, 1.62}, {"rural", 0.4, 0.3, 0.52}};
    const auto ax = odds_ratio_axis(ratios);
    CHECK(ax.log);
    CHECK(ax.lo < 0.3);
    CHECK(ax.hi > 1.62);
    CHECK(ax(ax.lo) == doctest::Approx(ax.pixel_lo));
    CHECK(ax(ax.hi) == doctest::Approx(ax.pixel_hi));
    // Log scale: equal ratios span equal pixel distances.
    CHECK(ax(1.0) - ax(0.5) == doctest::Approx(ax(2.0) - ax(1.0)));
    const auto svg = odds_ratio_svg(ratios, "Odds");
    const std::string whisker = "<line class=\"ci\" x1=\"" + svg_coord(ax(1.49)) + "\" y1=\"";
    CHECK(svg.find(whisker) != std::string::npos);
    CHECK(svg.find("x2=\"" + svg_coord(ax(1.62)) + "\"") != std::string::npos);
    CHECK(occurrences(svg, "class=\"reference\" x1=\"" + svg_coord(ax(1.0)) + "\"") == 1);
    CHECK(occurrences(svg, "<circle class=\"estimate\"") == 2);
    CHECK(odds_ratio_svg(ratios, "Odds") == svg);
    const std::vector<OddsRatio> zero{{"bad", 0.0, 0.0, 1.0}};
    CHECK_THROWS_AS(odds_ratio_axis(zero), DomainError);
}

TEST_CASE("choropleth and scatter charts") {
    const std::vector<AdminRegion> one{{"SYN", "SYN.1", "Only", testing::box(36.0, -1.1, 36.1, -1.0)}};
    const auto map = choropleth_svg(one, {{"SYN.1", 0.5}}, "Map");
    CHECK(occurrences(map, "<path") == 1);
    CHECK(map.find("#ffffbf") != std::string::npos);
    CHECK(choropleth_svg(one, {{"SYN.1", 0.5}}, "Map") == map);
    const auto missing = choropleth_svg(one, {}, "Map");
    CHECK(missing.find("#cccccc") != std::string::npos);

    ScatterChart chart{"S", "a", "b", {1000, 2500, 400}, {900, 3000, 100}};
    const auto ax = scatter_x_axis(chart), ay = scatter_y_axis(chart);
    CHECK(ax.lo == 0.0);
    CHECK(ay.lo == 0.0);
    CHECK(ax.hi == ay.hi);
    CHECK(ax.hi >= 3000);
    const auto svg = scatter_svg(chart);
    const std::string identity = "<line class=\"identity\" x1=\"" + svg_coord(ax(0)) + "\" y1=\"" + svg_coord(ay(0)) +
                                 "\" x2=\"" + svg_coord(ax(ax.hi)) + "\" y2=\"" + svg_coord(ay(ay.hi)) + "\"";
    CHECK(svg.find(identity) != std::string::npos);
    CHECK(occurrences(svg, "<circle") == 3);
    CHECK(svg_coord(12.345678) == "12.35");
}

TEST_CASE("exit codes") {
    testing::TempDir dir("cli_exit");
    CHECK(settle_cli("").status == 2);
    CHECK(settle_cli("frobnicate").status == 2);
    CHECK(settle_cli("overlap").status == 2);
    CHECK(settle_cli("overlap --threads lots --config x").status == 2);
    CHECK(settle_cli("--help").status == 0);
    CHECK(settle_cli("harmonize --config " + testing::quote(dir / "missing.cfg")).status == 2);

    const auto cfg = make_country(dir);
    // Unknown config key.
    testing::spit(dir / "bad.cfg", testing::slurp(cfg) + "colour = blue\n");
    auto r = settle_cli("harmonize --config " + testing::quote(dir / "bad.cfg"));
    CHECK(r.status == 2);
    CHECK(r.output.find("colour") != std::string::npos);

    // Stages run out of order miss their inputs.
    CHECK(settle_cli("overlap -q --config " + testing::quote(cfg)).status == 2);

    // A dataset file that exists but cannot be parsed.
    const auto country = dir / "country";
    const auto extents = testing::slurp(country / "extents.geojson");
    testing::spit(country / "extents.geojson", "{\"type\": \"FeatureCollection\", \"features\": [");
    r = settle_cli("harmonize -q --config " + testing::quote(cfg));
    CHECK(r.status == 3);
    CHECK(r.output.find("extents") != std::string::npos);
    testing::spit(country / "extents.geojson", extents);

    // A population raster that is not a TIFF.
    const auto pop = testing::slurp(country / "population.tif");
    testing::spit(country / "population.tif", "not a tiff");
    CHECK(settle_cli("harmonize -q --config " + testing::quote(cfg)).status == 3);
    testing::spit(country / "population.tif", pop);

    // A dataset path that does not exist.
    std::filesystem::rename(country / "population.tif", country / "moved.tif");
    CHECK(settle_cli("harmonize -q --config " + testing::quote(cfg)).status == 2);
    std::filesystem::rename(country / "moved.tif", country / "population.tif");

    CHECK(settle_cli("harmonize -q --config " + testing::quote(cfg)).status == 0);
    CHECK(settle_cli("overlap -q --config " + testing::quote(cfg)).status == 0);
    // Training on a single-class subsample cannot fit a model.
    CHECK(settle_cli("features -q --config " + testing::quote(cfg)).status == 0);
    r = settle_cli("train -q --subsample 1 --config " + testing::quote(cfg));
    CHECK(r.status == 1);
}

TEST_CASE("empty settlement layers are a computation error") {
    testing::TempDir dir("cli_empty");
    const auto cfg = make_country(dir, std::string(kSmallSynth) + "pattern = empty\nfootprints.decoys = 0\n"
                                                                  "extents.decoys = 0\n");
    CHECK(settle_cli("harmonize -q --config " + testing::quote(cfg)).status == 0);
    CHECK(settle_cli("features -q --config " + testing::quote(cfg)).status == 0);
    const auto r = settle_cli("train -q --config " + testing::quote(cfg));
    CHECK(r.status == 1);
}

TEST_CASE("harmonized rasters are cached") {
    testing::TempDir dir("cli_cache");
    const auto cfg = make_country(dir);
    auto first = settle_cli("harmonize --config " + testing::quote(cfg));
    REQUIRE(first.status == 0);
    CHECK(first.output.find("(cache hit)") == std::string::npos);
    const auto cache = dir / "country" / "out" / "cache";
    std::vector<std::pair<std::filesystem::path, std::filesystem::file_time_type>> stamps;
    for (const auto& e : std::filesystem::directory_iterator(cache))
        if (e.path().extension() == ".sbr") stamps.emplace_back(e.path(), e.last_write_time());
    CHECK(stamps.size() == 3);

    const auto second = settle_cli("harmonize --config " + testing::quote(cfg));
    REQUIRE(second.status == 0);
    CHECK(occurrences(second.output, "(cache hit)") == 3);
    for (const auto& [path, stamp] : stamps) CHECK(std::filesystem::last_write_time(path) == stamp);
    // A hit skips reading, so only the summary lines remain.
    const auto summary = [](const std::string& text) {
        std::string out;
        std::istringstream in(std::regex_replace(text, std::regex(" \\(cache hit\\)"), ""));
        for (std::string line; std::getline(in, line);)
            if (line.rfind("  ", 0) != 0) out += line + '\n';
        return out;
    };
    CHECK(summary(second.output) == summary(first.output));

    // Touching a dataset changes its mtime but not its content: still a hit.
    const auto fp = dir / "country" / "footprints.csv";
    std::filesystem::last_write_time(fp, std::filesystem::last_write_time(fp) + std::chrono::seconds(5));
    CHECK(occurrences(settle_cli("harmonize --config " + testing::quote(cfg)).output, "(cache hit)") == 3);

    // Editing it invalidates only that dataset.
    auto text = testing::slurp(fp);
    text.resize(text.rfind('\n', text.size() - 2) + 1);
    testing::spit(fp, text);
    const auto third = settle_cli("harmonize --config " + testing::quote(cfg));
    CHECK(occurrences(third.output, "(cache hit)") == 2);
    CHECK(third.output.find("footprints: settled") != std::string::npos);
}

TEST_CASE("thread count does not change outputs") {
    testing::TempDir dir("cli_threads");
    const auto cfg = make_country(dir);
    const std::vector<std::string> stages{"harmonize", "overlap", "zonal", "features", "train", "report"};
    for (const auto& s : stages)
        REQUIRE(settle_cli(s + " -q --config " + testing::quote(cfg) + " --out " + testing::quote(dir / "one")).status == 0);
    for (const auto& s : stages)
        REQUIRE(settle_cli(s + " -q --threads 8 --config " + testing::quote(cfg) + " --out " + testing::quote(dir / "eight")).status == 0);
    std::size_t compared = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir / "one")) {
        if (!e.is_regular_file() || e.path().parent_path().filename() == "cache") continue;
        const auto rel = std::filesystem::relative(e.path(), dir / "one");
        CAPTURE(rel);
        CHECK(testing::slurp(e.path()) == testing::slurp(dir / "eight" / rel));
        ++compared;
    }
    CHECK(compared >= 8);
}
