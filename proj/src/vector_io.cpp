#include "settle/vector_io.hpp"

#include "settle/error.hpp"

#include <boost/geometry.hpp>
#include <boost/geometry/geometries/multi_polygon.hpp>
#include <boost/geometry/geometries/point_xy.hpp>
#include <boost/geometry/geometries/polygon.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

namespace settle {
namespace {

namespace bg = boost::geometry;
using BgPoint = bg::model::d2::point_xy<double>;
using BgPolygon = bg::model::polygon<BgPoint, false, false>;
using BgMultiPolygon = bg::model::multi_polygon<BgPolygon>;
using json = nlohmann::json;

constexpr int kMaxWarnings = 10;

Ring to_ring(const auto& bg_ring) {
    Ring ring;
    ring.reserve(bg_ring.size() + 1);
    for (const auto& p : bg_ring) ring.push_back({p.x(), p.y()});
    close_ring(ring);
    return ring;
}

Polygon to_polygon(const BgPolygon& poly) {
    Polygon out;
    out.rings.push_back(to_ring(poly.outer()));
    for (const auto& inner : poly.inners()) out.rings.push_back(to_ring(inner));
    return out;
}

bool finite_shape(const MultiPolygon& shape) {
    for (const auto& poly : shape)
        for (const auto& ring : poly.rings)
            for (const auto& p : ring)
                if (!std::isfinite(p.lon) || !std::isfinite(p.lat)) return false;
    return true;
}

std::string upper_keyword(std::string_view wkt) {
    std::size_t i = 0;
    while (i < wkt.size() && std::isspace(static_cast<unsigned char>(wkt[i]))) ++i;
    std::string word;
    while (i < wkt.size() && std::isalpha(static_cast<unsigned char>(wkt[i])))
        word.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(wkt[i++]))));
    return word;
}

double parse_real(const std::string& text, const char* what) {
    double v = 0.0;
    const char* b = text.data();
    const char* e = text.data() + text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(*b))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(e[-1]))) --e;
    auto [ptr, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || ptr != e || b == e) throw FormatError(std::string("invalid ") + what + " '" + text + "'");
    return v;
}

std::size_t find_column(const std::vector<std::string>& header, const std::string& name,
                        const std::filesystem::path& path) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw FormatError(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

Ring ring_from_json(const json& coords) {
    if (!coords.is_array()) throw FormatError("ring is not an array");
    Ring ring;
    ring.reserve(coords.size() + 1);
    for (const auto& pt : coords) {
        if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number())
            throw FormatError("position is not a [lon, lat] pair");
        ring.push_back({pt[0].get<double>(), pt[1].get<double>()});
    }
    close_ring(ring);
    return ring;
}

Polygon polygon_from_json(const json& coords) {
    if (!coords.is_array() || coords.empty()) throw FormatError("polygon has no rings");
    Polygon poly;
    for (const auto& r : coords) poly.rings.push_back(ring_from_json(r));
    return poly;
}

MultiPolygon shape_from_geometry(const json& geometry) {
    if (!geometry.is_object()) throw FormatError("feature has no geometry");
    const auto type = geometry.value("type", std::string{});
    const auto coords = geometry.find("coordinates");
    if (coords == geometry.end()) throw FormatError("geometry has no coordinates");
    MultiPolygon shape;
    if (type == "Polygon") {
        shape.push_back(polygon_from_json(*coords));
    } else if (type == "MultiPolygon") {
        if (!coords->is_array()) throw FormatError("MultiPolygon coordinates are not an array");
        for (const auto& p : *coords) shape.push_back(polygon_from_json(p));
    } else {
        throw FormatError("unsupported geometry type '" + type + "'");
    }
    return shape;
}

json ring_to_json(const Ring& ring) {
    json out = json::array();
    for (const auto& p : ring) out.push_back({p.lon, p.lat});
    return out;
}

json geometry_to_json(const MultiPolygon& shape) {
    auto polygon = [](const Polygon& poly) {
        json rings = json::array();
        for (const auto& r : poly.rings) rings.push_back(ring_to_json(r));
        return rings;
    };
    if (shape.size() == 1) return {{"type", "Polygon"}, {"coordinates", polygon(shape.front())}};
    json parts = json::array();
    for (const auto& p : shape) parts.push_back(polygon(p));
    return {{"type", "MultiPolygon"}, {"coordinates", parts}};
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    return os;
}

template <class Fn>
void for_each_feature(const std::filesystem::path& path, Fn&& on_feature) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    json::parser_callback_t cb = [&](int depth, json::parse_event_t event, json& parsed) {
        if (event == json::parse_event_t::object_end && depth == 2 && parsed.is_object() &&
            parsed.value("type", std::string{}) == "Feature") {
            on_feature(parsed);
            return false;
        }
        return true;
    };
    try {
        const json root = json::parse(in, cb);
        if (!root.is_object() || root.value("type", std::string{}) != "FeatureCollection")
            throw FormatError(path.string() + ": not a GeoJSON FeatureCollection");
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace

std::string exact_number(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

CsvReader::CsvReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path.string());
}

bool CsvReader::next(std::vector<std::string>& fields) {
    fields.clear();
    std::streambuf* buf = in_.rdbuf();
    std::string field;
    bool in_quotes = false;
    bool any = false;
    std::size_t bytes = 0;
    for (;;) {
        const int ch = buf->sbumpc();
        if (ch == std::char_traits<char>::eof()) {
            if (!any) return false;
            if (in_quotes) throw FormatError(path_.string() + ": unterminated quoted field at line " + std::to_string(line_ + 1));
            fields.push_back(std::move(field));
            break;
        }
        any = true;
        ++bytes;
        const char c = static_cast<char>(ch);
        if (in_quotes) {
            if (c == '"') {
                if (buf->sgetc() == '"') {
                    buf->sbumpc();
                    ++bytes;
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line_;
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\r') {
            // CRLF: the LF ends the record.
        } else if (c == '\n') {
            fields.push_back(std::move(field));
            break;
        } else {
            field.push_back(c);
        }
    }
    ++line_;
    max_record_bytes_ = std::max(max_record_bytes_, bytes);
    return true;
}

std::string csv_field(std::string_view value) {
    if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
    std::string out = "\"";
    for (const char c : value) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

MultiPolygon parse_wkt(std::string_view wkt) {
    const std::string keyword = upper_keyword(wkt);
    MultiPolygon shape;
    try {
        if (keyword == "POLYGON") {
            BgPolygon poly;
            bg::read_wkt(std::string(wkt), poly);
            if (poly.outer().size() < 3) throw FormatError("polygon with fewer than 3 vertices");
            shape.push_back(to_polygon(poly));
        } else if (keyword == "MULTIPOLYGON") {
            BgMultiPolygon multi;
            bg::read_wkt(std::string(wkt), multi);
            if (multi.empty()) throw FormatError("empty MULTIPOLYGON");
            for (const auto& p : multi) {
                if (p.outer().size() < 3) throw FormatError("polygon with fewer than 3 vertices");
                shape.push_back(to_polygon(p));
            }
        } else {
            throw FormatError("unsupported WKT geometry '" + keyword + "'");
        }
    } catch (const bg::read_wkt_exception& e) {
        throw FormatError(std::string("malformed WKT: ") + e.what());
    }
    if (!finite_shape(shape)) throw FormatError("non-finite coordinate in WKT");
    return shape;
}

std::string to_wkt(const MultiPolygon& shape) {
    auto ring_text = [](const Ring& ring) {
        std::string s = "(";
        for (std::size_t i = 0; i < ring.size(); ++i) {
            if (i) s += ", ";
            s += exact_number(ring[i].lon) + " " + exact_number(ring[i].lat);
        }
        return s + ")";
    };
    auto polygon_text = [&](const Polygon& poly) {
        std::string s = "(";
        for (std::size_t i = 0; i < poly.rings.size(); ++i) {
            if (i) s += ", ";
            s += ring_text(poly.rings[i]);
        }
        return s + ")";
    };
    if (shape.size() == 1) return "POLYGON " + polygon_text(shape.front());
    std::string s = "MULTIPOLYGON (";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += polygon_text(shape[i]);
    }
    return s + ")";
}

FootprintCsvReader::FootprintCsvReader(const std::filesystem::path& path, FootprintCsvOptions options)
    : path_(path), options_(std::move(options)), csv_(path) {
    std::vector<std::string> header;
    if (!csv_.next(header)) throw FormatError(path.string() + ": empty CSV (header row is mandatory)");
    if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);
    geometry_col_ = find_column(header, options_.geometry_column, path);
    confidence_col_ = find_column(header, options_.confidence_column, path);
    if (auto it = std::find(header.begin(), header.end(), options_.id_column); it != header.end())
        id_col_ = static_cast<std::size_t>(it - header.begin());
}

std::optional<FootprintRecord> FootprintCsvReader::next() {
    while (csv_.next(fields_)) {
        if (fields_.size() == 1 && fields_[0].empty()) continue; // blank line
        ++stats_.rows;
        FootprintRecord record;
        try {
            const std::size_t needed = std::max({geometry_col_, confidence_col_, id_col_.value_or(0)});
            if (fields_.size() <= needed) throw FormatError("too few fields");
            record.confidence = parse_real(fields_[confidence_col_], "confidence");
            if (!(record.confidence >= 0.0 && record.confidence <= 1.0))
                throw FormatError("confidence outside [0, 1]");
            record.shape = parse_wkt(fields_[geometry_col_]);
        } catch (const FormatError& e) {
            if (++stats_.malformed <= kMaxWarnings)
                spdlog::warn("{}:{}: skipping row: {}", path_.string(), csv_.line(), e.what());
            continue;
        }
        if (!(record.confidence >= options_.min_confidence)) {
            ++stats_.below_threshold;
            continue;
        }
        if (id_col_) record.id = fields_[*id_col_];
        ++stats_.kept;
        return record;
    }
    return std::nullopt;
}

std::vector<FootprintRecord> read_footprints_csv(const std::filesystem::path& path, const FootprintCsvOptions& options,
                                                 FootprintReadStats* stats) {
    FootprintCsvReader reader(path, options);
    std::vector<FootprintRecord> out;
    while (auto r = reader.next()) out.push_back(std::move(*r));
    if (stats) *stats = reader.stats();
    return out;
}

void write_footprints_csv(const std::filesystem::path& path, std::span<const FootprintRecord> records) {
    auto os = open_output(path);
    os << "full_plus_code,confidence,geometry\n";
    for (const auto& r : records)
        os << csv_field(r.id) << ',' << exact_number(r.confidence) << ',' << csv_field(to_wkt(r.shape)) << '\n';
    if (!os) throw IoError("write failed: " + path.string());
}

void read_extents_geojson(const std::filesystem::path& path, const ExtentGeoJsonOptions& options,
                          const std::function<void(ExtentRecord&&)>& sink, ExtentReadStats* stats) {
    ExtentReadStats local;
    for_each_feature(path, [&](const json& feature) {
        ++local.features;
        const auto props = feature.find("properties");
        const json* value = nullptr;
        if (props != feature.end() && props->is_object()) {
            auto it = props->find(options.property);
            if (it != props->end() && it->is_number()) value = &*it;
        }
        if (!value) {
            if (options.on_missing == MissingProperty::Error)
                throw FormatError(path.string() + ": feature " + std::to_string(local.features) +
                                  " lacks numeric property '" + options.property + "'");
            if (++local.missing_property <= kMaxWarnings)
                spdlog::warn("{}: feature {} lacks property '{}', skipped", path.string(), local.features,
                             options.property);
            return;
        }
        ExtentRecord record;
        record.false_positive_probability = value->get<double>();
        try {
            if (!(record.false_positive_probability >= 0.0 && record.false_positive_probability <= 1.0))
                throw FormatError("false-positive probability outside [0, 1]");
            record.shape = shape_from_geometry(feature.value("geometry", json{}));
            if (!finite_shape(record.shape)) throw FormatError("non-finite coordinate");
        } catch (const FormatError& e) {
            if (++local.malformed <= kMaxWarnings)
                spdlog::warn("{}: feature {} skipped: {}", path.string(), local.features, e.what());
            return;
        }
        if (!(record.false_positive_probability < options.max_false_positive)) {
            ++local.above_threshold;
            return;
        }
        ++local.kept;
        sink(std::move(record));
    });
    if (stats) *stats = local;
}

std::vector<ExtentRecord> read_extents_geojson(const std::filesystem::path& path, const ExtentGeoJsonOptions& options,
                                               ExtentReadStats* stats) {
    std::vector<ExtentRecord> out;
    read_extents_geojson(path, options, [&](ExtentRecord&& r) { out.push_back(std::move(r)); }, stats);
    return out;
}

void write_extents_geojson(const std::filesystem::path& path, std::span<const ExtentRecord> records,
                           const std::string& property) {
    json features = json::array();
    for (const auto& r : records) {
        features.push_back({{"type", "Feature"},
                            {"properties", {{property, r.false_positive_probability}}},
                            {"geometry", geometry_to_json(r.shape)}});
    }
    auto os = open_output(path);
    os << json{{"type", "FeatureCollection"}, {"features", features}}.dump() << '\n';
}

std::vector<AdminRegion> read_regions_geojson(const std::filesystem::path& path, const RegionGeoJsonOptions& options) {
    std::vector<AdminRegion> regions;
    std::set<std::pair<std::string, std::string>> seen;
    for_each_feature(path, [&](const json& feature) {
        const auto props = feature.value("properties", json::object());
        auto text = [&](const std::string& key) {
            auto it = props.find(key);
            if (it == props.end() || !it->is_string())
                throw FormatError(path.string() + ": region feature lacks string property '" + key + "'");
            return it->get<std::string>();
        };
        AdminRegion region;
        region.country_code = text(options.country_property);
        region.region_id = text(options.region_property);
        region.name = props.contains(options.name_property) && props[options.name_property].is_string()
                          ? props[options.name_property].get<std::string>()
                          : region.region_id;
        try {
            region.shape = shape_from_geometry(feature.value("geometry", json{}));
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ": region " + region.region_id + ": " + e.what());
        }
        if (!seen.insert({region.country_code, region.region_id}).second)
            throw FormatError(path.string() + ": duplicate region id '" + region.region_id + "' in " +
                              region.country_code);
        regions.push_back(std::move(region));
    });
    return regions;
}

void write_regions_geojson(const std::filesystem::path& path, std::span<const AdminRegion> regions,
                           const RegionGeoJsonOptions& options) {
    json features = json::array();
    for (const auto& r : regions) {
        features.push_back({{"type", "Feature"},
                            {"properties",
                             {{options.country_property, r.country_code},
                              {options.region_property, r.region_id},
                              {options.name_property, r.name}}},
                            {"geometry", geometry_to_json(r.shape)}});
    }
    auto os = open_output(path);
    os << json{{"type", "FeatureCollection"}, {"features", features}}.dump() << '\n';
}

HdiTable read_hdi_csv(const std::filesystem::path& path, const HdiCsvOptions& options) {
    CsvReader csv(path);
    std::vector<std::string> fields;
    if (!csv.next(fields)) throw FormatError(path.string() + ": empty CSV (header row is mandatory)");
    const auto region_col = find_column(fields, options.region_column, path);
    const auto hdi_col = find_column(fields, options.hdi_column, path);
    HdiTable table;
    while (csv.next(fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        if (fields.size() <= std::max(region_col, hdi_col))
            throw FormatError(path.string() + ":" + std::to_string(csv.line()) + ": too few fields");
        HdiRow row{fields[region_col], 0.0};
        if (row.region_id.empty()) throw FormatError(path.string() + ":" + std::to_string(csv.line()) + ": empty region id");
        try {
            row.hdi = parse_real(fields[hdi_col], "HDI");
        } catch (const FormatError& e) {
            throw FormatError(path.string() + ":" + std::to_string(csv.line()) + ": " + e.what());
        }
        if (!(row.hdi >= 0.0 && row.hdi <= 1.0))
            throw FormatError(path.string() + ":" + std::to_string(csv.line()) + ": HDI outside [0, 1]");
        table.push_back(std::move(row));
    }
    return table;
}

void write_hdi_csv(const std::filesystem::path& path, const HdiTable& table, const HdiCsvOptions& options) {
    auto os = open_output(path);
    os << csv_field(options.region_column) << ',' << csv_field(options.hdi_column) << '\n';
    for (const auto& row : table) os << csv_field(row.region_id) << ',' << exact_number(row.hdi) << '\n';
}

} // namespace settle
