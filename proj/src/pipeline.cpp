#include "settle/pipeline.hpp"

#include "settle/agreement.hpp"
#include "settle/error.hpp"
#include "settle/featurize.hpp"
#include "settle/geotiff.hpp"
#include "settle/raster_cache.hpp"
#include "settle/rasterize.hpp"
#include "settle/report_io.hpp"
#include "settle/svg.hpp"
#include "settle/synth.hpp"
#include "settle/zonal.hpp"

#include <json.hpp>

#include <fstream>
#include <map>
#include <sstream>

namespace settle {
namespace {

constexpr std::size_t kBatch = 50'000;

void require_file(const std::filesystem::path& path, const std::string& what) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw UsageError(what + ": input file not found: " + path.string());
}

// Re-throws with a prefix while keeping the exception type (and so the exit code).
template <class Fn>
auto with_context(const std::string& context, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const AlignmentError& e) {
        throw AlignmentError(context + ": " + e.what());
    } catch (const FormatError& e) {
        throw FormatError(context + ": " + e.what());
    } catch (const IoError& e) {
        throw IoError(context + ": " + e.what());
    } catch (const IndexError& e) {
        throw IndexError(context + ": " + e.what());
    } catch (const DomainError& e) {
        throw DomainError(context + ": " + e.what());
    } catch (const UsageError& e) {
        throw UsageError(context + ": " + e.what());
    }
}

std::vector<AdminRegion> load_regions(const PipelineConfig& config) {
    require_file(config.regions, "regions");
    return with_context("regions " + config.regions.string(),
                        [&] { return read_regions_geojson(config.regions, config.region_options); });
}

std::string grid_key(const GridSpec& g) {
    std::ostringstream os;
    os << g.resolution() << ':' << g.lattice_col() << ':' << g.lattice_row() << ':' << g.width() << 'x' << g.height();
    return os.str();
}

std::string dataset_params(const DatasetConfig& d, const GridSpec& grid, std::uint32_t regions_crc) {
    std::ostringstream os;
    os << kind_name(d.kind) << ';' << grid_key(grid) << ";regions=" << regions_crc;
    switch (d.kind) {
    case DatasetKind::Footprints:
        os << ";geometry=" << d.footprints.geometry_column << ";confidence=" << d.footprints.confidence_column
           << ";min=" << exact_number(d.footprints.min_confidence)
           << ";mode=" << (d.footprint_mode == RasterizeMode::Centroid ? "centroid" : "coverage");
        break;
    case DatasetKind::Extents:
        os << ";property=" << d.extents.property << ";max=" << exact_number(d.extents.max_false_positive)
           << ";missing=" << (d.extents.on_missing == MissingProperty::Skip ? "skip" : "error");
        break;
    case DatasetKind::PopulationRaster: os << ";threshold=" << exact_number(d.population_threshold); break;
    }
    return os.str();
}

void save_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    if (!os) throw IoError("write failed: " + path.string());
}

NumericRaster load_numeric_layer(const std::optional<std::filesystem::path>& path, const char* what) {
    if (!path) throw UsageError(std::string("feature layer '") + what + "' is not configured");
    require_file(*path, std::string("feature.") + what);
    return with_context(std::string("feature.") + what + " " + path->string(), [&] { return read_geotiff(*path); });
}

CategoricalRaster load_class_layer(const std::optional<std::filesystem::path>& path, const GridSpec& grid) {
    if (!path) throw UsageError("feature layer 'ghsl' is not configured");
    require_file(*path, "feature.ghsl");
    return with_context("feature.ghsl " + path->string(), [&] {
        const auto image = read_geotiff_image(*path);
        if (image.crs == CrsKind::Mollweide) return resample_mollweide(image, grid, kSettlementCodes);
        return read_geotiff_categorical(*path, kSettlementCodes);
    });
}

} // namespace

std::filesystem::path output_dir(const PipelineConfig& config, const RunOptions& options) {
    const auto dir = options.output ? *options.output : config.output;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

BinaryRaster harmonize_dataset(const DatasetConfig& d, const CountryMask& mask, unsigned threads, std::ostream* log) {
    const GridSpec& grid = mask.spec();
    BinaryRaster out(grid);
    switch (d.kind) {
    case DatasetKind::Footprints: {
        FootprintCsvReader reader(d.path, d.footprints);
        RasterizeStats stats;
        std::vector<FootprintRecord> batch;
        auto flush = [&] {
            out |= rasterize_footprints(batch, grid, {d.footprint_mode}, &stats, threads);
            batch.clear();
        };
        while (auto rec = reader.next()) {
            batch.push_back(std::move(*rec));
            if (batch.size() == kBatch) flush();
        }
        flush();
        if (log)
            *log << "  " << d.name << ": " << reader.stats().rows << " rows, " << reader.stats().kept << " kept, "
                 << stats.degenerate << " degenerate, " << stats.out_of_grid << " outside grid\n";
        break;
    }
    case DatasetKind::Extents: {
        RasterizeStats stats;
        ExtentReadStats read_stats;
        std::vector<ExtentRecord> batch;
        auto flush = [&] {
            out |= rasterize_extents(batch, grid, &stats, threads);
            batch.clear();
        };
        read_extents_geojson(
            d.path, d.extents,
            [&](ExtentRecord&& rec) {
                batch.push_back(std::move(rec));
                if (batch.size() == kBatch) flush();
            },
            &read_stats);
        flush();
        if (log)
            *log << "  " << d.name << ": " << read_stats.features << " features, " << read_stats.kept << " kept, "
                 << read_stats.missing_property << " without property\n";
        break;
    }
    case DatasetKind::PopulationRaster: {
        const NumericRaster pop = read_geotiff(d.path);
        const double ratio = grid.resolution() / pop.spec.resolution();
        const int factor = static_cast<int>(std::lround(ratio));
        if (factor < 1 || std::abs(ratio - factor) > 1e-9)
            throw AlignmentError("population raster resolution " + exact_number(pop.spec.resolution()) +
                                 "\" does not divide the target resolution");
        out = reframe(block_or_downscale(binarize(pop, d.population_threshold), factor), grid);
        break;
    }
    }
    return apply_mask(out, mask);
}

void run_harmonize(const PipelineConfig& config, const RunOptions& options, std::ostream& log) {
    if (config.datasets.empty()) throw UsageError("no datasets configured");
    const auto regions = load_regions(config);
    const std::uint32_t regions_crc = file_crc32(config.regions);
    const GridSpec grid = country_grid(regions, config.resolution_arcsec);
    const CountryMask mask = country_mask(grid, regions);
    const RasterCache cache(output_dir(config, options) / "cache");
    log << "country " << mask.country_code << ": " << grid.width() << "x" << grid.height() << " cells at "
        << exact_number(grid.resolution()) << "\", " << format_real(mask.area_km2) << " km2\n";
    for (const auto& d : config.datasets) {
        require_file(d.path, "dataset '" + d.name + "'");
        const std::string params = dataset_params(d, grid, regions_crc);
        const std::string context = "dataset '" + d.name + "' (" + d.path.string() + ")";
        auto cached = with_context(context, [&] { return cache.load(d.name, d.path, params); });
        const bool hit = cached.has_value();
        BinaryRaster raster = hit ? std::move(*cached)
                                  : with_context(context, [&] { return harmonize_dataset(d, mask, options.threads, &log); });
        if (!hit) cache.store(d.name, d.path, params, raster);
        log << d.name << ": settled=" << count_settled(raster) << " density=" << format_real(density(raster, mask))
            << "/km2" << (hit ? " (cache hit)" : "") << '\n';
    }
}

HarmonizedSet load_harmonized(const PipelineConfig& config, const RunOptions& options) {
    auto regions = load_regions(config);
    const GridSpec grid = country_grid(regions, config.resolution_arcsec);
    HarmonizedSet set{{}, {}, {}, country_mask(grid, regions)};
    set.regions = std::move(regions);
    const RasterCache cache(output_dir(config, options) / "cache");
    for (const auto& d : config.datasets) {
        const auto path = cache.raster_path(d.name);
        if (!std::filesystem::exists(path))
            throw UsageError("harmonized raster for '" + d.name + "' not found (" + path.string() + "); run harmonize first");
        BinaryRaster raster = read_binary_raster(path);
        require_same_spec(raster.spec(), grid, "harmonized raster");
        set.names.push_back(d.name);
        set.rasters.push_back(std::move(raster));
    }
    return set;
}

void run_overlap(const PipelineConfig& config, const RunOptions& options, std::ostream& log) {
    if (config.datasets.size() < 2) throw UsageError("overlap needs at least two datasets");
    const auto set = load_harmonized(config, options);
    const auto factors = options.factors ? *options.factors : config.factors;
    const auto reports = overlap_pyramid(set.names, set.rasters, factors, &set.mask);
    const auto dir = output_dir(config, options);
    write_report(reports, dir / "overlap.csv", ReportFormat::Csv);
    write_report(reports, dir / "overlap.json", ReportFormat::Json);
    for (const auto& r : reports)
        log << "factor " << r.scale_factor << ": theta_avg=" << format_real(r.average_theta)
            << " theta_upper_avg=" << format_real(r.average_upper) << '\n';
}

void run_zonal(const PipelineConfig& config, const RunOptions& options, std::ostream& log) {
    if (config.datasets.size() < 2) throw UsageError("zonal needs at least two datasets");
    const auto set = load_harmonized(config, options);
    ZonalTable table = zonal_overlap(set.names, set.rasters, set.regions);
    if (config.hdi) {
        require_file(*config.hdi, "hdi");
        const auto hdi = with_context("hdi " + config.hdi->string(), [&] { return read_hdi_csv(*config.hdi, config.hdi_options); });
        table = join_hdi(std::move(table), hdi);
    }
    const auto dir = output_dir(config, options);
    write_report(table, dir / "zonal.csv", ReportFormat::Csv);
    write_report(table, dir / "zonal.json", ReportFormat::Json);

    nlohmann::json summary;
    std::size_t usable = 0;
    for (const auto& r : table.rows) usable += (r.hdi && r.theta_avg) ? 1 : 0;
    summary["regions"] = table.rows.size();
    summary["regions_with_hdi_and_theta"] = usable;
    summary["pearson_r"] = nullptr;
    summary["p_value"] = nullptr;
    if (usable >= 3) {
        try {
            const auto c = hdi_association(table);
            summary["pearson_r"] = round_real(c.r);
            summary["p_value"] = round_real(c.p_value);
            log << "HDI association: r=" << format_real(c.r) << " p=" << format_real(c.p_value) << " n=" << c.n << '\n';
        } catch (const DomainError& e) {
            log << "HDI association undefined: " << e.what() << '\n';
        }
    }
    save_text(dir / "zonal_summary.json", summary.dump(2) + "\n");
    log << table.rows.size() << " regions written\n";
}

void run_features(const PipelineConfig& config, const RunOptions& options, std::ostream& log) {
    if (config.datasets.size() < 3) throw UsageError("features need three datasets");
    const auto set = load_harmonized(config, options);
    const GridSpec& grid = set.mask.spec();
    FeatureLayers layers{load_numeric_layer(config.rwi, "rwi"), load_numeric_layer(config.rwi_error, "rwi_error"),
                         load_numeric_layer(config.nightlight, "nightlight"), load_class_layer(config.ghsl, grid)};
    const auto table = build_table(set.rasters[0], set.rasters[1], set.rasters[2], layers, set.regions);
    const auto dir = output_dir(config, options);
    write_feature_table(dir / "features.stft", table);
    write_feature_csv(dir / "features.csv", table);
    std::size_t positives = 0;
    for (const auto& r : table.rows) positives += r.label;
    log << table.rows.size() << " rows (" << positives << " agreeing), dropped " << table.dropped_missing
        << " with missing features and " << table.dropped_outside_regions << " outside regions\n";
}

void run_train(const PipelineConfig& config, const RunOptions& options, std::ostream& log) {
    const auto dir = output_dir(config, options);
    const auto path = dir / "features.stft";
    if (!std::filesystem::exists(path)) throw UsageError("feature table not found (" + path.string() + "); run features first");
    const auto table = read_feature_table(path);
    ModelConfig model = config.model;
    model.threads = options.threads;
    if (options.seed) model.seed = *options.seed;
    if (options.subsample) model.subsample = *options.subsample;
    const auto result = nested_cv(table, model);
    write_report(result, dir / "model.json", ReportFormat::Json);
    write_report(result, dir / "odds_ratios.csv", ReportFormat::Csv);
    log << "F1 " << format_real(result.f1.mean) << " [" << format_real(result.f1.min) << "; "
        << format_real(result.f1.max) << "], balanced accuracy " << format_real(result.balanced_accuracy.mean) << " ["
        << format_real(result.balanced_accuracy.min) << "; " << format_real(result.balanced_accuracy.max) << "]\n";
}

void run_report(const PipelineConfig& config, const RunOptions& options, std::ostream& log) {
    const auto dir = output_dir(config, options);
    const auto zonal_path = dir / "zonal.csv";
    const auto model_path = dir / "model.json";
    require_file(zonal_path, "report");
    require_file(model_path, "report");
    const auto regions = load_regions(config);
    const auto table = read_zonal_csv(zonal_path);
    const auto figures = dir / "figures";
    std::filesystem::create_directories(figures);

    const auto& names = table.dataset_names;
    for (std::size_t a = 0; a < names.size(); ++a)
        for (std::size_t b = a + 1; b < names.size(); ++b) {
            ScatterChart chart;
            chart.title = "Settled cells per region: " + names[a] + " vs " + names[b];
            chart.x_label = names[a] + " settled cells";
            chart.y_label = names[b] + " settled cells";
            for (const auto& r : table.rows) {
                chart.xs.push_back(static_cast<double>(r.counts[a]));
                chart.ys.push_back(static_cast<double>(r.counts[b]));
            }
            save_text(figures / ("scatter_" + names[a] + "_" + names[b] + ".svg"), scatter_svg(chart));
        }
    std::map<std::string, std::optional<double>> theta;
    for (const auto& r : table.rows) theta[r.region_id] = r.theta_avg;
    save_text(figures / "choropleth.svg", choropleth_svg(regions, theta, "Average overlap by region"));
    const auto ratios = read_odds_ratios_json(model_path);
    save_text(figures / "odds_ratios.svg", odds_ratio_svg(ratios, "Odds ratios of agreement (95% bootstrap CI)"));
    log << "figures written to " << figures.string() << '\n';
}

void run_synth(const std::filesystem::path& synth_config, const std::filesystem::path& dir,
               std::optional<std::uint64_t> seed, std::ostream& log) {
    require_file(synth_config, "synth config");
    SynthConfig cfg = load_synth_config(synth_config);
    if (seed) cfg.seed = *seed;
    const auto country = generate_country(cfg);
    write_country(country, cfg, dir);
    log << "synthetic country: " << country.grid.width() << "x" << country.grid.height() << ", "
        << count_settled(country.truth) << " settled cells, " << country.regions.size() << " regions -> "
        << dir.string() << '\n';
}

} // namespace settle
