#pragma once

#include "settle/agreement.hpp"
#include "settle/mlcore.hpp"
#include "settle/zonal.hpp"

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace settle {

enum class ReportFormat { Csv, Json };

/// "csv" or "json"; anything else is a UsageError.
ReportFormat parse_report_format(std::string_view name);

/// Six significant digits ("%.6g"); empty for non-finite values.
std::string format_real(double v);

/// The double nearest to format_real(v), so JSON output carries the same digits.
double round_real(double v);

/// One row per scale factor.
void write_report(std::span<const OverlapReport> reports, const std::filesystem::path& path, ReportFormat format);
void write_report(const OverlapReport& report, const std::filesystem::path& path, ReportFormat format);
void write_report(const ZonalTable& table, const std::filesystem::path& path, ReportFormat format);
/// CSV holds the odds-ratio table; JSON holds the full result.
void write_report(const ModelResult& result, const std::filesystem::path& path, ReportFormat format);

std::string report_json(std::span<const OverlapReport> reports);
std::string report_json(const ZonalTable& table);
std::string report_json(const ModelResult& result);

/// Parses a zonal CSV written by write_report (values carry six digits).
ZonalTable read_zonal_csv(const std::filesystem::path& path);

/// Odds-ratio table from a model JSON written by write_report.
std::vector<OddsRatio> read_odds_ratios_json(const std::filesystem::path& path);

/// Name of the pair column, e.g. "theta_A_B".
std::string pair_column(std::string_view prefix, std::string_view a, std::string_view b);

} // namespace settle
