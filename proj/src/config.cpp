#include "settle/config.hpp"

#include "settle/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace settle {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
    return out;
}

RasterizeMode parse_mode(const std::string& v) {
    if (v == "centroid") return RasterizeMode::Centroid;
    if (v == "coverage" || v == "any") return RasterizeMode::Coverage;
    throw UsageError("unknown rasterize policy '" + v + "' (expected centroid or coverage)");
}

MissingProperty parse_missing(const std::string& v) {
    if (v == "skip") return MissingProperty::Skip;
    if (v == "error") return MissingProperty::Error;
    throw UsageError("unknown missing-property action '" + v + "' (expected skip or error)");
}

DatasetKind parse_kind(const std::string& v) {
    if (v == "footprints") return DatasetKind::Footprints;
    if (v == "extents") return DatasetKind::Extents;
    if (v == "population_raster") return DatasetKind::PopulationRaster;
    throw UsageError("unknown dataset kind '" + v + "' (expected footprints, extents or population_raster)");
}

} // namespace

KeyValueFile KeyValueFile::parse(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path.string());
}

KeyValueFile KeyValueFile::parse_text(const std::string& text, const std::string& origin) {
    KeyValueFile file;
    file.origin_ = origin;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        const auto hash = raw.find('#');
        const std::string line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
        std::string key = trim(std::string_view(line).substr(0, eq));
        std::string value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw UsageError(origin + ":" + std::to_string(lineno) + ": empty key");
        if (file.get(key))
            throw UsageError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
        file.entries_.emplace_back(std::move(key), std::move(value));
        file.lines_.push_back(lineno);
    }
    return file;
}

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
    for (const auto& [k, v] : entries_)
        if (k == key) return v;
    return std::nullopt;
}

int KeyValueFile::line_of(const std::string& key) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].first == key) return lines_[i];
    return 0;
}

double parse_real(const std::string& text, const std::string& what) {
    double v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw UsageError(what + ": not a number: '" + text + "'");
    return v;
}

long long parse_integer(const std::string& text, const std::string& what) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        throw UsageError(what + ": not an integer: '" + text + "'");
    return v;
}

std::vector<double> parse_real_list(const std::string& text, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_real(item, what));
    return out;
}

std::vector<int> parse_factor_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) {
        const long long f = parse_integer(item, "factors");
        if (f < 1 || f > 1'000'000) throw UsageError("factors must be positive integers");
        out.push_back(static_cast<int>(f));
    }
    if (out.empty() || out.front() != 1) throw UsageError("factors must start at 1");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (out[i] <= out[i - 1]) throw UsageError("factors must be strictly ascending");
    return out;
}

std::string_view kind_name(DatasetKind kind) {
    switch (kind) {
    case DatasetKind::Footprints: return "footprints";
    case DatasetKind::Extents: return "extents";
    case DatasetKind::PopulationRaster: return "population_raster";
    }
    return "unknown";
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
    const auto file = KeyValueFile::parse(path);
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return parse_pipeline_config(file, base);
}

PipelineConfig parse_pipeline_config(const KeyValueFile& file, const std::filesystem::path& base_dir) {
    PipelineConfig cfg;
    cfg.source = file.origin();
    cfg.output = base_dir / "out";
    const auto resolve = [&](const std::string& v) { return (base_dir / v).lexically_normal(); };

    for (const auto& [key, value] : file.entries()) {
        const std::string where = file.origin() + ":" + std::to_string(file.line_of(key)) + ": " + key;
        if (key.rfind("dataset.", 0) == 0) {
            const auto dot = key.find('.', 8);
            if (dot == std::string::npos || dot == 8) throw UsageError(where + ": expected dataset.<name>.<field>");
            const std::string name = key.substr(8, dot - 8);
            const std::string field = key.substr(dot + 1);
            auto it = std::find_if(cfg.datasets.begin(), cfg.datasets.end(), [&](const auto& d) { return d.name == name; });
            if (it == cfg.datasets.end()) {
                cfg.datasets.push_back({});
                cfg.datasets.back().name = name;
                it = cfg.datasets.end() - 1;
            }
            DatasetConfig& d = *it;
            if (field == "kind")
                d.kind = parse_kind(value);
            else if (field == "path")
                d.path = resolve(value);
            else if (field == "min_confidence")
                d.footprints.min_confidence = parse_real(value, where);
            else if (field == "geometry_column")
                d.footprints.geometry_column = value;
            else if (field == "confidence_column")
                d.footprints.confidence_column = value;
            else if (field == "id_column")
                d.footprints.id_column = value;
            else if (field == "policy")
                d.footprint_mode = parse_mode(value);
            else if (field == "max_false_positive")
                d.extents.max_false_positive = parse_real(value, where);
            else if (field == "property")
                d.extents.property = value;
            else if (field == "on_missing")
                d.extents.on_missing = parse_missing(value);
            else if (field == "threshold")
                d.population_threshold = parse_real(value, where);
            else
                throw UsageError(where + ": unknown dataset field '" + field + "'");
        } else if (key == "country") {
            cfg.country = value;
        } else if (key == "resolution") {
            cfg.resolution_arcsec = parse_real(value, where);
            if (!(cfg.resolution_arcsec >= 1.0)) throw UsageError(where + ": resolution must be at least 1 arc-second");
        } else if (key == "regions") {
            cfg.regions = resolve(value);
        } else if (key == "regions.country_property") {
            cfg.region_options.country_property = value;
        } else if (key == "regions.region_property") {
            cfg.region_options.region_property = value;
        } else if (key == "regions.name_property") {
            cfg.region_options.name_property = value;
        } else if (key == "hdi") {
            cfg.hdi = resolve(value);
        } else if (key == "hdi.region_column") {
            cfg.hdi_options.region_column = value;
        } else if (key == "hdi.value_column") {
            cfg.hdi_options.hdi_column = value;
        } else if (key == "feature.rwi") {
            cfg.rwi = resolve(value);
        } else if (key == "feature.rwi_error") {
            cfg.rwi_error = resolve(value);
        } else if (key == "feature.nightlight") {
            cfg.nightlight = resolve(value);
        } else if (key == "feature.ghsl") {
            cfg.ghsl = resolve(value);
        } else if (key == "output") {
            cfg.output = resolve(value);
        } else if (key == "factors") {
            cfg.factors = parse_factor_list(value);
        } else if (key == "model.lambda_grid") {
            cfg.model.lambda_grid = parse_real_list(value, where);
        } else if (key == "model.outer_folds") {
            cfg.model.outer_folds = static_cast<int>(parse_integer(value, where));
        } else if (key == "model.inner_folds") {
            cfg.model.inner_folds = static_cast<int>(parse_integer(value, where));
        } else if (key == "model.max_iterations") {
            cfg.model.max_iterations = static_cast<int>(parse_integer(value, where));
        } else if (key == "model.tolerance") {
            cfg.model.tolerance = parse_real(value, where);
        } else if (key == "model.seed") {
            cfg.model.seed = static_cast<std::uint64_t>(parse_integer(value, where));
        } else if (key == "model.bootstrap_samples") {
            cfg.model.bootstrap_samples = static_cast<int>(parse_integer(value, where));
        } else if (key == "model.subsample") {
            cfg.model.subsample = static_cast<std::uint64_t>(parse_integer(value, where));
        } else {
            throw UsageError(where + ": unknown key");
        }
    }
    for (const auto& d : cfg.datasets)
        if (d.path.empty()) throw UsageError(file.origin() + ": dataset '" + d.name + "' has no path");
    if (cfg.regions.empty()) throw UsageError(file.origin() + ": 'regions' is required");
    cfg.model.validate();
    return cfg;
}

} // namespace settle
