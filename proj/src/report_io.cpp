#include "settle/report_io.hpp"

#include "settle/error.hpp"
#include "settle/vector_io.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace settle {
namespace {

using nlohmann::json;

json real(double v) {
    if (!std::isfinite(v)) return nullptr;
    return round_real(v);
}

json optional_real(const std::optional<double>& v) { return v ? real(*v) : json(nullptr); }

void save(const std::filesystem::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + path.string());
    os << text;
    os.close();
    if (!os) throw IoError("write failed: " + path.string());
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::optional<double> parse_optional(const std::string& text, const std::filesystem::path& path) {
    if (text.empty()) return std::nullopt;
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw FormatError(path.string() + ": not a number: '" + text + "'");
    }
}

} // namespace

ReportFormat parse_report_format(std::string_view name) {
    if (name == "csv") return ReportFormat::Csv;
    if (name == "json") return ReportFormat::Json;
    throw UsageError("unknown report format '" + std::string(name) + "' (expected csv or json)");
}

std::string format_real(double v) {
    if (!std::isfinite(v)) return {};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v == 0.0 ? 0.0 : v);
    return buf;
}

double round_real(double v) {
    if (!std::isfinite(v)) return v;
    return std::strtod(format_real(v).c_str(), nullptr);
}

std::string pair_column(std::string_view prefix, std::string_view a, std::string_view b) {
    std::string s(prefix);
    s += '_';
    s += a;
    s += '_';
    s += b;
    return s;
}

std::string report_json(std::span<const OverlapReport> reports) {
    json doc;
    doc["datasets"] = reports.empty() ? json::array() : json(reports.front().dataset_names);
    json list = json::array();
    for (const auto& r : reports) {
        json item;
        item["scale_factor"] = r.scale_factor;
        item["theta_avg"] = real(r.average_theta);
        item["theta_upper_avg"] = real(r.average_upper);
        json pairs = json::array();
        for (std::size_t p = 0; p < r.pairwise_theta.size(); ++p) {
            const auto& t = r.pairwise_theta[p];
            pairs.push_back({{"first", r.dataset_names[t.first]},
                             {"second", r.dataset_names[t.second]},
                             {"theta", real(t.value)},
                             {"theta_upper", real(r.pairwise_upper[p].value)}});
        }
        item["pairs"] = pairs;
        json counts = json::object();
        for (std::size_t i = 0; i < r.counts.size(); ++i) counts[r.dataset_names[i]] = r.counts[i];
        item["counts"] = counts;
        if (!r.density_per_km2.empty()) {
            json density = json::object();
            for (std::size_t i = 0; i < r.density_per_km2.size(); ++i)
                density[r.dataset_names[i]] = real(r.density_per_km2[i]);
            item["density_per_km2"] = density;
        }
        list.push_back(item);
    }
    doc["reports"] = list;
    return dump(doc);
}

void write_report(std::span<const OverlapReport> reports, const std::filesystem::path& path, ReportFormat format) {
    if (format == ReportFormat::Json) return save(path, report_json(reports));
    std::ostringstream os;
    os << "scale_factor,theta_avg,theta_upper_avg";
    if (!reports.empty()) {
        const auto& first = reports.front();
        const auto& names = first.dataset_names;
        for (const auto& t : first.pairwise_theta) os << ',' << csv_field(pair_column("theta", names[t.first], names[t.second]));
        for (const auto& t : first.pairwise_upper)
            os << ',' << csv_field(pair_column("theta_upper", names[t.first], names[t.second]));
        for (const auto& n : names) os << ',' << csv_field("count_" + n);
        if (!first.density_per_km2.empty())
            for (const auto& n : names) os << ',' << csv_field("density_" + n);
    }
    os << '\n';
    for (const auto& r : reports) {
        os << r.scale_factor << ',' << format_real(r.average_theta) << ',' << format_real(r.average_upper);
        for (const auto& t : r.pairwise_theta) os << ',' << format_real(t.value);
        for (const auto& t : r.pairwise_upper) os << ',' << format_real(t.value);
        for (const auto c : r.counts) os << ',' << c;
        for (const auto d : r.density_per_km2) os << ',' << format_real(d);
        os << '\n';
    }
    save(path, os.str());
}

void write_report(const OverlapReport& report, const std::filesystem::path& path, ReportFormat format) {
    write_report(std::span<const OverlapReport>(&report, 1), path, format);
}

std::string report_json(const ZonalTable& table) {
    const auto& names = table.dataset_names;
    json doc;
    doc["datasets"] = names;
    doc["overlapping_cells"] = table.overlapping_cells;
    doc["unmatched_hdi"] = table.unmatched_hdi;
    json unassigned = json::object();
    for (std::size_t i = 0; i < table.unassigned_counts.size(); ++i) unassigned[names[i]] = table.unassigned_counts[i];
    doc["unassigned_counts"] = unassigned;
    json rows = json::array();
    for (const auto& r : table.rows) {
        json item;
        item["country_code"] = r.country_code;
        item["region_id"] = r.region_id;
        item["region_name"] = r.region_name;
        item["area_km2"] = real(r.area_km2);
        item["theta_avg"] = optional_real(r.theta_avg);
        json pairs = json::object();
        std::size_t p = 0;
        for (std::size_t a = 0; a < names.size(); ++a)
            for (std::size_t b = a + 1; b < names.size(); ++b, ++p)
                pairs[pair_column("theta", names[a], names[b])] =
                    p < r.pairwise_theta.size() ? real(r.pairwise_theta[p]) : json(nullptr);
        item["pairwise_theta"] = pairs;
        json counts = json::object();
        for (std::size_t i = 0; i < r.counts.size(); ++i) counts[names[i]] = r.counts[i];
        item["counts"] = counts;
        item["hdi"] = optional_real(r.hdi);
        item["outside_extent"] = r.outside_extent;
        rows.push_back(item);
    }
    doc["regions"] = rows;
    return dump(doc);
}

void write_report(const ZonalTable& table, const std::filesystem::path& path, ReportFormat format) {
    if (format == ReportFormat::Json) return save(path, report_json(table));
    const auto& names = table.dataset_names;
    std::ostringstream os;
    os << "country_code,region_id,region_name,area_km2,n_datasets,theta_avg";
    for (std::size_t a = 0; a < names.size(); ++a)
        for (std::size_t b = a + 1; b < names.size(); ++b) os << ',' << csv_field(pair_column("theta", names[a], names[b]));
    for (const auto& n : names) os << ',' << csv_field("count_" + n);
    os << ",hdi\n";
    const std::size_t pairs = names.size() * (names.size() - (names.empty() ? 0 : 1)) / 2;
    for (const auto& r : table.rows) {
        std::size_t present = 0;
        for (const auto c : r.counts) present += c > 0;
        os << csv_field(r.country_code) << ',' << csv_field(r.region_id) << ',' << csv_field(r.region_name) << ','
           << format_real(r.area_km2) << ',' << present << ',' << (r.theta_avg ? format_real(*r.theta_avg) : "");
        for (std::size_t p = 0; p < pairs; ++p)
            os << ',' << (p < r.pairwise_theta.size() ? format_real(r.pairwise_theta[p]) : "");
        for (const auto c : r.counts) os << ',' << c;
        os << ',' << (r.hdi ? format_real(*r.hdi) : "") << '\n';
    }
    save(path, os.str());
}

ZonalTable read_zonal_csv(const std::filesystem::path& path) {
    CsvReader csv(path);
    std::vector<std::string> header, fields;
    if (!csv.next(header)) throw FormatError(path.string() + ": empty zonal table");
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    for (const char* need : {"country_code", "region_id", "region_name", "area_km2", "theta_avg", "hdi"})
        if (!col.count(need)) throw FormatError(path.string() + ": missing column '" + need + "'");
    ZonalTable table;
    for (const auto& h : header)
        if (h.rfind("count_", 0) == 0) table.dataset_names.push_back(h.substr(6));
    std::vector<std::size_t> pair_cols;
    const auto& names = table.dataset_names;
    for (std::size_t a = 0; a < names.size(); ++a)
        for (std::size_t b = a + 1; b < names.size(); ++b) {
            const auto it = col.find(pair_column("theta", names[a], names[b]));
            if (it == col.end()) throw FormatError(path.string() + ": missing pair column for " + names[a] + "/" + names[b]);
            pair_cols.push_back(it->second);
        }
    table.unassigned_counts.assign(names.size(), 0);
    while (csv.next(fields)) {
        if (fields.size() != header.size())
            throw FormatError(path.string() + ": line " + std::to_string(csv.line()) + " has " +
                              std::to_string(fields.size()) + " fields, expected " + std::to_string(header.size()));
        ZonalRow row;
        row.country_code = fields[col["country_code"]];
        row.region_id = fields[col["region_id"]];
        row.region_name = fields[col["region_name"]];
        row.area_km2 = parse_optional(fields[col["area_km2"]], path).value_or(0.0);
        row.theta_avg = parse_optional(fields[col["theta_avg"]], path);
        if (row.theta_avg)
            for (const auto c : pair_cols) row.pairwise_theta.push_back(parse_optional(fields[c], path).value_or(0.0));
        for (const auto& n : names)
            row.counts.push_back(static_cast<std::int64_t>(parse_optional(fields[col["count_" + n]], path).value_or(0.0)));
        row.hdi = parse_optional(fields[col["hdi"]], path);
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string report_json(const ModelResult& result) {
    const auto& cfg = result.config;
    json doc;
    doc["schema"] = "settle.model_result";
    doc["version"] = 1;
    doc["rows"] = result.rows;
    doc["positives"] = result.positives;
    json config;
    json grid = json::array();
    for (const double l : cfg.lambda_grid) grid.push_back(real(l));
    config["lambda_grid"] = grid;
    config["outer_folds"] = cfg.outer_folds;
    config["inner_folds"] = cfg.inner_folds;
    config["max_iterations"] = cfg.max_iterations;
    config["tolerance"] = real(cfg.tolerance);
    config["seed"] = cfg.seed;
    config["bootstrap_samples"] = cfg.bootstrap_samples;
    config["subsample"] = cfg.subsample;
    doc["config"] = config;

    std::vector<std::string> names;
    for (const auto& o : result.odds_ratios) names.push_back(o.feature);
    json folds = json::array();
    for (const auto& f : result.folds) {
        json item;
        item["fold"] = f.fold;
        item["test_countries"] = f.test_groups;
        item["train_rows"] = f.train_rows;
        item["test_rows"] = f.test_rows;
        item["lambda"] = real(f.lambda);
        item["f1"] = real(f.f1);
        item["balanced_accuracy"] = real(f.balanced_accuracy);
        item["iterations"] = f.model.iterations;
        item["converged"] = f.model.converged;
        item["intercept"] = real(f.model.intercept);
        json coef = json::object(), stats = json::object();
        for (std::size_t j = 0; j < f.model.coefficients.size(); ++j) {
            const std::string name = j < names.size() ? names[j] : "x" + std::to_string(j);
            coef[name] = real(f.model.coefficients[j]);
            stats[name] = {{"mean", real(f.model.mean[j])}, {"sd", real(f.model.sd[j])}};
        }
        item["coefficients"] = coef;
        item["standardization"] = stats;
        folds.push_back(item);
    }
    doc["folds"] = folds;
    doc["aggregate"] = {
        {"f1", {{"mean", real(result.f1.mean)}, {"min", real(result.f1.min)}, {"max", real(result.f1.max)}}},
        {"balanced_accuracy",
         {{"mean", real(result.balanced_accuracy.mean)},
          {"min", real(result.balanced_accuracy.min)},
          {"max", real(result.balanced_accuracy.max)}}},
        {"chosen_lambda", real(result.chosen_lambda)},
    };
    json odds = json::array();
    for (const auto& o : result.odds_ratios)
        odds.push_back({{"feature", o.feature}, {"point", real(o.point)}, {"lo", real(o.lo)}, {"hi", real(o.hi)}});
    doc["odds_ratios"] = odds;
    return dump(doc);
}

void write_report(const ModelResult& result, const std::filesystem::path& path, ReportFormat format) {
    if (format == ReportFormat::Json) return save(path, report_json(result));
    std::ostringstream os;
    os << "feature,odds_ratio,ci_low,ci_high\n";
    for (const auto& o : result.odds_ratios)
        os << csv_field(o.feature) << ',' << format_real(o.point) << ',' << format_real(o.lo) << ','
           << format_real(o.hi) << '\n';
    save(path, os.str());
}

std::vector<OddsRatio> read_odds_ratios_json(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    json doc;
    try {
        doc = json::parse(in);
        if (doc.at("schema") != "settle.model_result") throw FormatError(path.string() + ": not a model result");
        if (doc.at("version") != 1) throw FormatError(path.string() + ": unsupported model result version");
        std::vector<OddsRatio> out;
        for (const auto& item : doc.at("odds_ratios"))
            out.push_back({item.at("feature").get<std::string>(), item.at("point").get<double>(),
                           item.at("lo").get<double>(), item.at("hi").get<double>()});
        return out;
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace settle
