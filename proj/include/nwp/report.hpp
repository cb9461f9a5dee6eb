#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nwp/verify.hpp"

namespace nwp {

/// Column order of the metric table.
inline constexpr std::string_view kCsvHeader = "init_time,source,variable,level,region,lead_hours,metric,value";

/// Value as written to the table: Q RMSE is converted to g/kg.
double display_value(const MetricRecord& r) noexcept;
std::string_view display_unit(ChannelId c, Metric m) noexcept;

/// One line (no newline); value printed with 9 significant digits.
std::string format_csv_row(const MetricRecord& r);
void write_csv(std::span<const MetricRecord> records, std::ostream& out);
void write_csv(std::span<const MetricRecord> records, const std::filesystem::path& path);

struct CsvRow {
    std::string init_time;
    std::string source;
    ChannelId channel;
    std::string region;
    int lead_hours = 0;
    Metric metric = Metric::RMSE;
    std::string value_text;  // exactly as in the file
    double value = 0.0;
};

/// Throws CsvParseError naming the offending line.
std::vector<CsvRow> parse_metrics_csv(std::istream& in);
std::vector<CsvRow> read_metrics_csv(const std::filesystem::path& path);

/// SVG file name for one panel: "<channel>_<region>_<metric>.svg".
std::string plot_file_name(ChannelId c, std::string_view region, Metric m);

/// One SVG per (channel, region, metric) present in the table: lead hours on
/// x, metric on y, one series per source. Returns the written paths sorted.
std::vector<std::filesystem::path> emit_plots(std::span<const CsvRow> rows, const std::filesystem::path& out_dir);
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& csv, const std::filesystem::path& out_dir);

}  // namespace nwp
