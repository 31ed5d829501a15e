#include "settle/synth.hpp"

#include "settle/config.hpp"
#include "settle/error.hpp"
#include "settle/raster_cache.hpp"
#include "settle/rng.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

namespace settle {
namespace {

enum Stream : std::uint64_t { kTruth = 1, kPerturb = 10, kRecords = 20, kFeatures = 30, kRegions = 40 };

constexpr std::array<const char*, 3> kRoles = {"footprints", "extents", "population"};

double cell_lon(const GridSpec& g, double col) { return g.origin_lon() + col * g.resolution_degrees(); }
double cell_lat(const GridSpec& g, double row) { return g.origin_lat() - row * g.resolution_degrees(); }

MultiPolygon rectangle(const GridSpec& g, double row0, double col0, double row1, double col1) {
    Ring ring{{cell_lon(g, col0), cell_lat(g, row0)},
              {cell_lon(g, col1), cell_lat(g, row0)},
              {cell_lon(g, col1), cell_lat(g, row1)},
              {cell_lon(g, col0), cell_lat(g, row1)},
              {cell_lon(g, col0), cell_lat(g, row0)}};
    return {Polygon{{std::move(ring)}}};
}

double to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

BinaryRaster make_truth(const SynthConfig& cfg, const GridSpec& grid) {
    BinaryRaster truth(grid);
    CounterRng rng(CounterRng::derive(cfg.seed, kTruth));
    switch (cfg.pattern) {
    case SynthPattern::Empty: break;
    case SynthPattern::Checker:
        for (std::int64_t r = 0; r < grid.height(); ++r)
            for (std::int64_t c = 0; c < grid.width(); ++c)
                if ((r + c) % 2 == 0) truth.set(r, c);
        break;
    case SynthPattern::Blobs:
        for (int b = 0; b < cfg.blob_count; ++b) {
            const double cr = rng.uniform(0.0, static_cast<double>(grid.height()));
            const double cc = rng.uniform(0.0, static_cast<double>(grid.width()));
            const double radius = rng.uniform(cfg.blob_radius_min, cfg.blob_radius_max);
            truth.set(static_cast<std::int64_t>(cr), static_cast<std::int64_t>(cc));
            const auto r0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(cr - radius)));
            const auto r1 = std::min<std::int64_t>(grid.height() - 1, static_cast<std::int64_t>(std::ceil(cr + radius)));
            const auto c0 = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(cc - radius)));
            const auto c1 = std::min<std::int64_t>(grid.width() - 1, static_cast<std::int64_t>(std::ceil(cc + radius)));
            for (auto r = r0; r <= r1; ++r)
                for (auto c = c0; c <= c1; ++c) {
                    const double dr = static_cast<double>(r) + 0.5 - cr, dc = static_cast<double>(c) + 0.5 - cc;
                    if (dr * dr + dc * dc <= radius * radius) truth.set(r, c);
                }
        }
        break;
    }
    return truth;
}

BinaryRaster perturb(const BinaryRaster& truth, const Perturbation& p, CounterRng& rng) {
    BinaryRaster out = shift(dilate(truth, p.dilation), p.offset_rows, p.offset_cols);
    const auto& g = out.spec();
    for (std::int64_t r = 0; r < g.height(); ++r)
        for (std::int64_t c = 0; c < g.width(); ++c)
            if (out.get(r, c) && rng.bernoulli(p.dropout)) out.set(r, c, false);
    for (int i = 0; i < p.spurious; ++i) {
        const auto r = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(g.height())));
        const auto c = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(g.width())));
        out.set(r, c);
    }
    return out;
}

void make_footprints(const SynthConfig& cfg, const BinaryRaster& source, SynthCountry& out) {
    const auto& g = source.spec();
    CounterRng rng(CounterRng::derive(cfg.seed, kRecords + 0));
    BinaryRaster kept(g);
    std::uint64_t id = 0;
    auto building = [&](std::int64_t r, std::int64_t c, double confidence) {
        const double jr = rng.uniform(-0.2, 0.2), jc = rng.uniform(-0.2, 0.2);
        const double half = 0.15;
        const double rc = static_cast<double>(r) + 0.5 + jr, cc = static_cast<double>(c) + 0.5 + jc;
        char code[32];
        std::snprintf(code, sizeof code, "SYN%06llu", static_cast<unsigned long long>(id++));
        out.footprints.push_back({rectangle(g, rc - half, cc - half, rc + half, cc + half), confidence, code});
    };
    for (std::int64_t r = 0; r < g.height(); ++r)
        for (std::int64_t c = 0; c < g.width(); ++c) {
            if (!source.get(r, c)) continue;
            const int n = 1 + static_cast<int>(rng.below(2));
            for (int k = 0; k < n; ++k) {
                const double conf = rng.uniform(cfg.confidence_min, cfg.confidence_max);
                building(r, c, conf);
                if (conf >= 0.7) kept.set(r, c);
            }
        }
    for (int i = 0; i < cfg.footprint_decoys; ++i) {
        const auto r = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(g.height())));
        const auto c = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(g.width())));
        building(r, c, rng.uniform(0.3, 0.69));
    }
    out.expected[0] = std::move(kept);
}

void make_extents(const SynthConfig& cfg, const BinaryRaster& source, SynthCountry& out) {
    const auto& g = source.spec();
    CounterRng rng(CounterRng::derive(cfg.seed, kRecords + 1));
    BinaryRaster kept(g);
    const double inset = 0.1;
    for (std::int64_t r = 0; r < g.height(); ++r) {
        for (std::int64_t c = 0; c < g.width();) {
            if (!source.get(r, c)) {
                ++c;
                continue;
            }
            std::int64_t end = c;
            while (end < g.width() && source.get(r, end)) ++end;
            const double fp = rng.uniform(cfg.false_positive_min, cfg.false_positive_max);
            out.extents.push_back({rectangle(g, static_cast<double>(r) + inset, static_cast<double>(c) + inset,
                                             static_cast<double>(r + 1) - inset, static_cast<double>(end) - inset),
                                   fp});
            if (fp < 0.4)
                for (auto k = c; k < end; ++k) kept.set(r, k);
            c = end;
        }
    }
    for (int i = 0; i < cfg.extent_decoys; ++i) {
        const auto r = static_cast<double>(rng.below(static_cast<std::uint64_t>(g.height())));
        const auto c = static_cast<double>(rng.below(static_cast<std::uint64_t>(g.width())));
        out.extents.push_back({rectangle(g, r + inset, c + inset, r + 1 - inset, c + 1 - inset), rng.uniform(0.4, 0.9)});
    }
    out.expected[1] = std::move(kept);
}

void make_population(const SynthConfig& cfg, const BinaryRaster& source, SynthCountry& out) {
    const auto& g = source.spec();
    CounterRng rng(CounterRng::derive(cfg.seed, kRecords + 2));
    NumericRaster pop(GridSpec(1.0, g.lattice_col() * 3, g.lattice_row() * 3, g.width() * 3, g.height() * 3), 0.0);
    std::array<int, 9> sub{};
    for (std::int64_t r = 0; r < g.height(); ++r)
        for (std::int64_t c = 0; c < g.width(); ++c) {
            if (!source.get(r, c)) continue;
            std::iota(sub.begin(), sub.end(), 0);
            rng.shuffle(std::span<int>(sub));
            const int n = 1 + static_cast<int>(rng.below(9));
            for (int k = 0; k < n; ++k)
                pop.at(r * 3 + sub[static_cast<std::size_t>(k)] / 3, c * 3 + sub[static_cast<std::size_t>(k)] % 3) =
                    to_float(rng.uniform(0.5, 25.0));
        }
    out.population = std::move(pop);
    out.expected[2] = source;
}

void make_regions(const SynthConfig& cfg, SynthCountry& out) {
    const auto& g = out.grid;
    CounterRng rng(CounterRng::derive(cfg.seed, kRegions));
    for (int cy = 0; cy < cfg.country_rows; ++cy)
        for (int cx = 0; cx < cfg.country_columns; ++cx) {
            const int k = cy * cfg.country_columns + cx;
            const std::string code = std::string("SY") + static_cast<char>('A' + k);
            const std::int64_t r0 = g.height() * cy / cfg.country_rows, r1 = g.height() * (cy + 1) / cfg.country_rows;
            const std::int64_t c0 = g.width() * cx / cfg.country_columns, c1 = g.width() * (cx + 1) / cfg.country_columns;
            for (int s = 0; s < cfg.regions_per_country; ++s) {
                const std::int64_t s0 = c0 + (c1 - c0) * s / cfg.regions_per_country;
                const std::int64_t s1 = c0 + (c1 - c0) * (s + 1) / cfg.regions_per_country;
                AdminRegion region;
                region.country_code = code;
                region.region_id = code + "." + std::to_string(s + 1);
                region.name = "Region " + std::string(1, static_cast<char>('A' + k)) + std::to_string(s + 1);
                region.shape = rectangle(g, static_cast<double>(r0), static_cast<double>(s0), static_cast<double>(r1),
                                         static_cast<double>(s1));
                out.regions.push_back(std::move(region));
                out.hdi.push_back({out.regions.back().region_id, std::round((0.35 + 0.5 * rng.uniform()) * 1000) / 1000});
            }
        }
}

// Share of truth cells whose centre falls inside each cell of `coarse`.
std::vector<double> settled_share(const BinaryRaster& truth, const GridSpec& coarse) {
    const auto& g = truth.spec();
    std::vector<double> settled(static_cast<std::size_t>(coarse.cell_count()), 0.0);
    std::vector<double> total(settled.size(), 0.0);
    for (std::int64_t r = 0; r < g.height(); ++r)
        for (std::int64_t c = 0; c < g.width(); ++c) {
            const auto fr = static_cast<std::int64_t>(std::floor(coarse.row_coord(g.center_lat(r))));
            const auto fc = static_cast<std::int64_t>(std::floor(coarse.col_coord(g.center_lon(c))));
            if (fr < 0 || fc < 0 || fr >= coarse.height() || fc >= coarse.width()) continue;
            const auto i = static_cast<std::size_t>(fr * coarse.width() + fc);
            total[i] += 1;
            settled[i] += truth.get(r, c) ? 1 : 0;
        }
    for (std::size_t i = 0; i < settled.size(); ++i) settled[i] = total[i] > 0 ? settled[i] / total[i] : 0.0;
    return settled;
}

std::uint8_t smod_class(double share) {
    if (share >= 0.5) return 30;
    if (share >= 0.35) return 23;
    if (share >= 0.25) return 22;
    if (share >= 0.15) return 21;
    if (share >= 0.08) return 13;
    if (share >= 0.03) return 12;
    return 11;
}

void make_features(const SynthConfig& cfg, SynthCountry& out) {
    const auto& g = out.grid;
    CounterRng rng(CounterRng::derive(cfg.seed, kFeatures));
    const double min_lon = g.origin_lon(), max_lon = g.east_lon(), min_lat = g.south_lat(), max_lat = g.origin_lat();
    const double span_lon = max_lon - min_lon;

    const GridSpec rwi_grid = GridSpec::covering(min_lon, min_lat, max_lon, max_lat, 81.0);
    const auto rwi_share = settled_share(out.truth, rwi_grid);
    NumericRaster rwi(rwi_grid), rwi_error(rwi_grid);
    for (std::int64_t r = 0; r < rwi_grid.height(); ++r)
        for (std::int64_t c = 0; c < rwi_grid.width(); ++c) {
            const auto i = static_cast<std::size_t>(r * rwi_grid.width() + c);
            const double t = (rwi_grid.center_lon(c) - min_lon) / span_lon;
            const double value = cfg.rwi_gradient * (t - 0.5) + 1.5 * rwi_share[i] + cfg.rwi_noise * rng.normal();
            const bool missing = rng.bernoulli(cfg.rwi_missing);
            rwi.values[i] = missing ? kNoData : to_float(value);
            rwi_error.values[i] = to_float(0.2 + 0.2 * rng.uniform());
        }

    const GridSpec km_grid = GridSpec::covering(min_lon, min_lat, max_lon, max_lat, 30.0);
    const auto share = settled_share(out.truth, km_grid);
    std::vector<std::pair<double, double>> hotspots;
    for (int h = 0; h < cfg.nightlight_hotspots; ++h)
        hotspots.emplace_back(rng.uniform(min_lon, max_lon), rng.uniform(min_lat, max_lat));
    const double sigma = span_lon / 10.0;
    NumericRaster night(km_grid);
    CategoricalRaster ghsl(km_grid);
    const double lake_lon = rng.uniform(min_lon, max_lon), lake_lat = rng.uniform(min_lat, max_lat);
    const double lake_deg = cfg.lake_radius * g.resolution_degrees();
    for (std::int64_t r = 0; r < km_grid.height(); ++r)
        for (std::int64_t c = 0; c < km_grid.width(); ++c) {
            const auto i = static_cast<std::size_t>(r * km_grid.width() + c);
            const double lon = km_grid.center_lon(c), lat = km_grid.center_lat(r);
            double light = 20.0 * share[i];
            for (const auto& [hx, hy] : hotspots) {
                const double d2 = (lon - hx) * (lon - hx) + (lat - hy) * (lat - hy);
                light += cfg.nightlight_peak * std::exp(-d2 / (2 * sigma * sigma));
            }
            night.values[i] = to_float(light);
            const double dl = std::hypot(lon - lake_lon, lat - lake_lat);
            ghsl.codes[i] = (share[i] == 0.0 && dl <= lake_deg) ? std::uint8_t{10} : smod_class(share[i]);
        }
    out.layers = FeatureLayers{std::move(rwi), std::move(rwi_error), std::move(night), std::move(ghsl)};
}

Perturbation& role_perturbation(SynthConfig& cfg, const std::string& role) {
    for (std::size_t i = 0; i < kRoles.size(); ++i)
        if (role == kRoles[i]) return cfg.perturb[i];
    throw UsageError("unknown dataset role '" + role + "'");
}

} // namespace

BinaryRaster dilate(const BinaryRaster& raster, int radius) {
    if (radius < 0) throw DomainError("dilation radius must be non-negative");
    if (radius == 0) return raster;
    const auto& g = raster.spec();
    BinaryRaster out(g);
    for (std::int64_t r = 0; r < g.height(); ++r)
        for (std::int64_t c = 0; c < g.width(); ++c) {
            if (!raster.get(r, c)) continue;
            for (auto rr = std::max<std::int64_t>(0, r - radius); rr <= std::min(g.height() - 1, r + radius); ++rr)
                for (auto cc = std::max<std::int64_t>(0, c - radius); cc <= std::min(g.width() - 1, c + radius); ++cc)
                    out.set(rr, cc);
        }
    return out;
}

BinaryRaster shift(const BinaryRaster& raster, int drow, int dcol) {
    if (drow == 0 && dcol == 0) return raster;
    const auto& g = raster.spec();
    BinaryRaster out(g);
    for (std::int64_t r = 0; r < g.height(); ++r)
        for (std::int64_t c = 0; c < g.width(); ++c) {
            if (!raster.get(r, c)) continue;
            const auto rr = r + drow, cc = c + dcol;
            if (rr >= 0 && cc >= 0 && rr < g.height() && cc < g.width()) out.set(rr, cc);
        }
    return out;
}

void SynthConfig::validate() const {
    if (width <= 0 || height <= 0) throw UsageError("synthetic grid size must be positive");
    if (country_columns <= 0 || country_rows <= 0 || regions_per_country <= 0)
        throw UsageError("country layout counts must be positive");
    if (width < country_columns * regions_per_country || height < country_rows)
        throw UsageError("grid too small for the country layout");
    if (country_columns * country_rows > 26) throw UsageError("at most 26 synthetic countries");
    if (blob_count < 0 || !(blob_radius_min > 0) || blob_radius_max < blob_radius_min)
        throw UsageError("blob sizes must be positive with min <= max");
    auto prob = [](double p, const char* what) {
        if (!(p >= 0.0 && p <= 1.0)) throw UsageError(std::string(what) + " must lie in [0, 1]");
    };
    for (const auto& p : perturb) {
        prob(p.dropout, "dropout");
        if (p.dilation < 0 || p.spurious < 0) throw UsageError("dilation and spurious counts must be non-negative");
    }
    prob(confidence_min, "confidence_min");
    prob(confidence_max, "confidence_max");
    prob(false_positive_min, "fp_min");
    prob(false_positive_max, "fp_max");
    prob(rwi_missing, "rwi.missing");
    if (confidence_max < confidence_min || false_positive_max < false_positive_min)
        throw UsageError("distribution bounds must satisfy min <= max");
    if (footprint_decoys < 0 || extent_decoys < 0 || nightlight_hotspots < 0 || lake_radius < 0)
        throw UsageError("counts must be non-negative");
    std::set<std::string> unique(names.begin(), names.end());
    if (unique.size() != names.size()) throw UsageError("dataset names must be distinct");
}

SynthConfig parse_synth_config(const std::string& text, const std::string& origin) {
    const auto file = KeyValueFile::parse_text(text, origin);
    SynthConfig cfg;
    for (const auto& [key, value] : file.entries()) {
        const std::string where = origin + ":" + std::to_string(file.line_of(key)) + ": " + key;
        auto integer = [&] { return parse_integer(value, where); };
        auto real = [&] { return parse_real(value, where); };
        const auto dot = key.find('.');
        const std::string head = key.substr(0, dot);
        const std::string field = dot == std::string::npos ? "" : key.substr(dot + 1);
        if (head == "pipeline" && !field.empty()) {
            cfg.pipeline.emplace_back(field, value);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(integer());
        } else if (key == "width") {
            cfg.width = integer();
        } else if (key == "height") {
            cfg.height = integer();
        } else if (key == "origin_lon") {
            cfg.origin_lon = real();
        } else if (key == "origin_lat") {
            cfg.origin_lat = real();
        } else if (key == "country_columns") {
            cfg.country_columns = static_cast<int>(integer());
        } else if (key == "country_rows") {
            cfg.country_rows = static_cast<int>(integer());
        } else if (key == "regions_per_country") {
            cfg.regions_per_country = static_cast<int>(integer());
        } else if (key == "pattern") {
            if (value == "blobs")
                cfg.pattern = SynthPattern::Blobs;
            else if (value == "checker")
                cfg.pattern = SynthPattern::Checker;
            else if (value == "empty")
                cfg.pattern = SynthPattern::Empty;
            else
                throw UsageError(where + ": expected blobs, checker or empty");
        } else if (key == "blob_count") {
            cfg.blob_count = static_cast<int>(integer());
        } else if (key == "blob_radius_min") {
            cfg.blob_radius_min = real();
        } else if (key == "blob_radius_max") {
            cfg.blob_radius_max = real();
        } else if (key == "footprints.confidence_min") {
            cfg.confidence_min = real();
        } else if (key == "footprints.confidence_max") {
            cfg.confidence_max = real();
        } else if (key == "footprints.decoys") {
            cfg.footprint_decoys = static_cast<int>(integer());
        } else if (key == "extents.fp_min") {
            cfg.false_positive_min = real();
        } else if (key == "extents.fp_max") {
            cfg.false_positive_max = real();
        } else if (key == "extents.decoys") {
            cfg.extent_decoys = static_cast<int>(integer());
        } else if (key == "rwi.gradient") {
            cfg.rwi_gradient = real();
        } else if (key == "rwi.noise") {
            cfg.rwi_noise = real();
        } else if (key == "rwi.missing") {
            cfg.rwi_missing = real();
        } else if (key == "nightlight.hotspots") {
            cfg.nightlight_hotspots = static_cast<int>(integer());
        } else if (key == "nightlight.peak") {
            cfg.nightlight_peak = real();
        } else if (key == "ghsl.lake_radius") {
            cfg.lake_radius = real();
        } else if (std::find(kRoles.begin(), kRoles.end(), head) != kRoles.end()) {
            const auto idx = static_cast<std::size_t>(std::find(kRoles.begin(), kRoles.end(), head) - kRoles.begin());
            Perturbation& p = role_perturbation(cfg, head);
            if (field == "name")
                cfg.names[idx] = value;
            else if (field == "dilation")
                p.dilation = static_cast<int>(integer());
            else if (field == "dropout")
                p.dropout = real();
            else if (field == "offset_rows")
                p.offset_rows = static_cast<int>(integer());
            else if (field == "offset_cols")
                p.offset_cols = static_cast<int>(integer());
            else if (field == "spurious")
                p.spurious = static_cast<int>(integer());
            else
                throw UsageError(where + ": unknown key");
        } else {
            throw UsageError(where + ": unknown key");
        }
    }
    cfg.validate();
    return cfg;
}

SynthConfig load_synth_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open synth config " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_synth_config(text, path.string());
}

SynthCountry generate_country(const SynthConfig& cfg) {
    cfg.validate();
    const GridSpec grid = GridSpec::from_origin(cfg.origin_lon, cfg.origin_lat, 3.0, cfg.width, cfg.height);
    SynthCountry out{grid,
                     make_truth(cfg, grid),
                     {BinaryRaster(grid), BinaryRaster(grid), BinaryRaster(grid)},
                     {},
                     {},
                     NumericRaster(grid),
                     {NumericRaster(grid), NumericRaster(grid), NumericRaster(grid), CategoricalRaster(grid)},
                     {},
                     {}};
    CounterRng rng(CounterRng::derive(cfg.seed, kPerturb));
    std::array<BinaryRaster, 3> sources{perturb(out.truth, cfg.perturb[0], rng), perturb(out.truth, cfg.perturb[1], rng),
                                        perturb(out.truth, cfg.perturb[2], rng)};
    make_footprints(cfg, sources[0], out);
    make_extents(cfg, sources[1], out);
    make_population(cfg, sources[2], out);
    make_regions(cfg, out);
    make_features(cfg, out);
    return out;
}

void write_country(const SynthCountry& country, const SynthConfig& cfg, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    write_footprints_csv(dir / "footprints.csv", country.footprints);
    write_extents_geojson(dir / "extents.geojson", country.extents);
    write_geotiff(dir / "population.tif", country.population, {SampleType::Float32, Compression::Deflate, 0});
    write_geotiff(dir / "rwi.tif", country.layers.rwi, {SampleType::Float32, Compression::Deflate, 0}, -9999.0);
    write_geotiff(dir / "rwi_error.tif", country.layers.rwi_error, {SampleType::Float32, Compression::Deflate, 0},
                  -9999.0);
    write_geotiff(dir / "nightlight.tif", country.layers.nightlight, {SampleType::Float32, Compression::Deflate, 0},
                  -9999.0);
    write_geotiff(dir / "ghsl.tif", country.layers.ghsl, {SampleType::UInt8, Compression::Deflate, 16});
    write_regions_geojson(dir / "regions.geojson", country.regions);
    write_hdi_csv(dir / "hdi.csv", country.hdi);
    write_binary_raster(dir / "truth.sbr", country.truth);

    std::vector<std::pair<std::string, std::string>> lines{
        {"country", "SYN"},
        {"resolution", "3"},
        {"regions", "regions.geojson"},
        {"hdi", "hdi.csv"},
    };
    for (std::size_t i = 0; i < kRoles.size(); ++i) {
        const std::string prefix = "dataset." + cfg.names[i] + ".";
        lines.emplace_back(prefix + "kind", i == 2 ? "population_raster" : kRoles[i]);
        lines.emplace_back(prefix + "path", i == 0 ? "footprints.csv" : i == 1 ? "extents.geojson" : "population.tif");
    }
    lines.insert(lines.end(), {{"feature.rwi", "rwi.tif"},
                               {"feature.rwi_error", "rwi_error.tif"},
                               {"feature.nightlight", "nightlight.tif"},
                               {"feature.ghsl", "ghsl.tif"},
                               {"output", "out"},
                               {"factors", "1,2,4,8"},
                               {"model.seed", std::to_string(cfg.seed)}});
    for (const auto& [k, v] : cfg.pipeline) {
        auto it = std::find_if(lines.begin(), lines.end(), [&](const auto& l) { return l.first == k; });
        if (it != lines.end())
            it->second = v;
        else
            lines.emplace_back(k, v);
    }
    std::ofstream os(dir / "pipeline.cfg", std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + (dir / "pipeline.cfg").string());
    os << "# generated by settle synth (seed " << cfg.seed << ")\n";
    for (const auto& [k, v] : lines) os << k << " = " << v << '\n';
    if (!os) throw IoError("write failed: " + (dir / "pipeline.cfg").string());
}

} // namespace settle
