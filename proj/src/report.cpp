#include "nwp/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>

#include "nwp/error.hpp"

namespace nwp {

double display_value(const MetricRecord& r) noexcept {
    if (r.metric == Metric::RMSE && r.channel.variable == Variable::Q) return r.value * 1000.0;
    return r.value;
}

std::string_view display_unit(ChannelId c, Metric m) noexcept {
    if (m == Metric::ACC) return "";
    if (c.variable == Variable::Q) return "g/kg";
    return variable_unit(c.variable);
}

std::string format_csv_row(const MetricRecord& r) {
    return fmt::format("{},{},{},{},{},{},{},{:.9g}", format_time(r.init_time), r.source_label,
                       variable_name(r.channel.variable), r.channel.level.hpa, r.region, r.lead_hours,
                       metric_name(r.metric), display_value(r));
}

void write_csv(std::span<const MetricRecord> records, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& r : records) out << format_csv_row(r) << '\n';
}

void write_csv(std::span<const MetricRecord> records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
    write_csv(records, out);
    out.close();
    if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

bool parse_int(const std::string& s, int& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    const long v = std::strtol(s.c_str(), &end, 10);
    if (*end != '\0' || v < -1000000 || v > 1000000) return false;
    out = static_cast<int>(v);
    return true;
}

}  // namespace

std::vector<CsvRow> parse_metrics_csv(std::istream& in) {
    std::vector<CsvRow> rows;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (line != kCsvHeader) throw CsvParseError(lineno, fmt::format("expected header '{}'", kCsvHeader));
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 8) throw CsvParseError(lineno, fmt::format("expected 8 fields, got {}", f.size()));
        CsvRow row;
        row.init_time = f[0];
        try {
            parse_time(f[0]);
        } catch (const Error&) {
            throw CsvParseError(lineno, fmt::format("invalid init_time '{}'", f[0]));
        }
        row.source = f[1];
        if (row.source.empty()) throw CsvParseError(lineno, "empty source");
        int level = 0;
        if (!parse_int(f[3], level) || level < 0 || level > 65535)
            throw CsvParseError(lineno, fmt::format("invalid level '{}'", f[3]));
        const auto var = variable_from_name(f[2]);
        if (!var) throw CsvParseError(lineno, fmt::format("unknown variable '{}'", f[2]));
        row.channel = {*var, PressureLevel{static_cast<std::uint16_t>(level)}};
        try {
            state_channel_index(row.channel);
        } catch (const InvalidChannelError& e) {
            throw CsvParseError(lineno, e.what());
        }
        row.region = f[4];
        if (row.region.empty()) throw CsvParseError(lineno, "empty region");
        if (!parse_int(f[5], row.lead_hours)) throw CsvParseError(lineno, fmt::format("invalid lead_hours '{}'", f[5]));
        try {
            row.metric = parse_metric(f[6]);
        } catch (const Error&) {
            throw CsvParseError(lineno, fmt::format("unknown metric '{}'", f[6]));
        }
        row.value_text = f[7];
        char* end = nullptr;
        row.value = std::strtod(f[7].c_str(), &end);
        if (f[7].empty() || *end != '\0' || !std::isfinite(row.value))
            throw CsvParseError(lineno, fmt::format("invalid value '{}'", f[7]));
        rows.push_back(std::move(row));
    }
    if (!header_seen) throw CsvParseError(1, "empty file, missing header");
    return rows;
}

std::vector<CsvRow> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
    return parse_metrics_csv(in);
}

std::string plot_file_name(ChannelId c, std::string_view region, Metric m) {
    return fmt::format("{}_{}_{}.svg", channel_name(c), region, metric_name(m));
}

// ---------------------------------------------------------------------------
// SVG rendering

namespace {

constexpr std::array<std::string_view, 10> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Point {
    int lead;
    const CsvRow* row;
};

struct Series {
    std::string label;
    std::vector<Point> points;
};

std::string render_svg(ChannelId channel, const std::string& region, Metric metric, std::vector<Series> series) {
    constexpr double W = 720, H = 440, left = 80, right = 170, top = 44, bottom = 56;
    const double x0 = left, x1 = W - right, y0 = top, y1 = H - bottom;

    std::set<int> leads;
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (const auto& s : series)
        for (const auto& p : s.points) {
            leads.insert(p.lead);
            vmin = std::min(vmin, p.row->value);
            vmax = std::max(vmax, p.row->value);
        }
    double xmin = *leads.begin(), xmax = *leads.rbegin();
    if (xmin == xmax) {
        xmin -= 12;
        xmax += 12;
    }
    double ymin = vmin, ymax = vmax;
    if (ymin == ymax) {
        const double pad = std::max(std::abs(ymin) * 0.05, 1e-6);
        ymin -= pad;
        ymax += pad;
    } else {
        const double pad = (ymax - ymin) * 0.05;
        ymin -= pad;
        ymax += pad;
    }
    auto sx = [&](double l) { return x0 + (l - xmin) / (xmax - xmin) * (x1 - x0); };
    auto sy = [&](double v) { return y1 - (v - ymin) / (ymax - ymin) * (y1 - y0); };

    std::string out;
    out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out += fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n",
        W, H);
    out += fmt::format("<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"white\"/>\n", W, H);
    out += fmt::format("<text x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{} {} {}</text>\n",
                       (x0 + x1) / 2, channel_name(channel), xml_escape(region), metric_name(metric));

    // Axes and grid.
    out += fmt::format("<g stroke=\"#333\" stroke-width=\"1\">\n<line x1=\"{0:.2f}\" y1=\"{2:.2f}\" x2=\"{1:.2f}\" "
                       "y2=\"{2:.2f}\"/>\n<line x1=\"{0:.2f}\" y1=\"{3:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\"/>\n</g>\n",
                       x0, x1, y1, y0);
    const std::size_t stride = std::max<std::size_t>(1, (leads.size() + 11) / 12);
    std::size_t n = 0;
    out += "<g class=\"xticks\" text-anchor=\"middle\">\n";
    for (int l : leads) {
        if (n++ % stride != 0) continue;
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{0:.2f}\" y2=\"{2:.2f}\" stroke=\"#333\"/>"
                           "<text x=\"{0:.2f}\" y=\"{3:.2f}\">{4}</text>\n",
                           sx(l), y1, y1 + 5, y1 + 18, l);
    }
    out += "</g>\n<g class=\"yticks\" text-anchor=\"end\">\n";
    for (int k = 0; k <= 5; ++k) {
        const double v = ymin + (ymax - ymin) * k / 5.0;
        out += fmt::format("<line x1=\"{0:.2f}\" y1=\"{2:.2f}\" x2=\"{1:.2f}\" y2=\"{2:.2f}\" stroke=\"#ddd\"/>"
                           "<text x=\"{3:.2f}\" y=\"{4:.2f}\">{5:.4g}</text>\n",
                           x0, x1, sy(v), x0 - 6, sy(v) + 4, v);
    }
    out += "</g>\n";
    const auto unit = display_unit(channel, metric);
    out += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">lead time (h)</text>\n", (x0 + x1) / 2,
                       H - 14);
    out += fmt::format("<text x=\"18\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.2f})\">{1}{2}</text>\n",
                       (y0 + y1) / 2, metric_name(metric), unit.empty() ? "" : fmt::format(" ({})", unit));

    for (std::size_t s = 0; s < series.size(); ++s) {
        auto& pts = series[s].points;
        std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.lead < b.lead; });
        const auto color = kPalette[s % kPalette.size()];
        out += fmt::format("<g class=\"series\" data-source=\"{}\" stroke=\"{}\" fill=\"{}\">\n",
                           xml_escape(series[s].label), color, color);
        if (pts.size() >= 2) {
            std::string coords;
            for (const auto& p : pts) coords += fmt::format("{}{:.2f},{:.2f}", coords.empty() ? "" : " ", sx(p.lead), sy(p.row->value));
            out += fmt::format("<polyline fill=\"none\" stroke-width=\"1.5\" points=\"{}\"/>\n", coords);
        }
        for (const auto& p : pts)
            out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" data-lead=\"{}\" data-value=\"{}\"/>\n",
                               sx(p.lead), sy(p.row->value), p.lead, p.row->value_text);
        out += "</g>\n";
        const double ly = y0 + 8 + 18 * static_cast<double>(s);
        out += fmt::format("<g class=\"legend\"><line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" "
                           "stroke=\"{3}\" stroke-width=\"2\"/><circle cx=\"{4:.2f}\" cy=\"{1:.2f}\" r=\"3\" fill=\"{3}\"/>"
                           "<text x=\"{5:.2f}\" y=\"{6:.2f}\">{7}</text></g>\n",
                           x1 + 14, ly, x1 + 38, color, x1 + 26, x1 + 44, ly + 4, xml_escape(series[s].label));
    }
    out += "</svg>\n";
    return out;
}

}  // namespace

std::vector<std::filesystem::path> emit_plots(std::span<const CsvRow> rows, const std::filesystem::path& out_dir) {
    std::set<std::string> init_times;
    for (const auto& r : rows) init_times.insert(r.init_time);
    const bool tag_init = init_times.size() > 1;

    using PanelKey = std::tuple<std::size_t, std::string, Metric>;
    std::map<PanelKey, std::map<std::string, std::map<int, const CsvRow*>>> panels;
    for (const auto& r : rows) {
        const std::string label = tag_init ? fmt::format("{} {}", r.source, r.init_time) : r.source;
        auto& slot = panels[{state_channel_index(r.channel).flat(), r.region, r.metric}][label];
        if (!slot.emplace(r.lead_hours, &r).second)
            throw Error(fmt::format("duplicate {} {} {} entry for '{}' at lead {} h", channel_name(r.channel), r.region,
                                    metric_name(r.metric), label, r.lead_hours));
    }

    std::filesystem::create_directories(out_dir);
    std::vector<std::filesystem::path> written;
    for (const auto& [key, by_source] : panels) {
        const auto& [flat, region, metric] = key;
        std::vector<Series> series;
        for (const auto& [label, points] : by_source) {
            Series s{label, {}};
            for (const auto& [lead, row] : points) s.points.push_back({lead, row});
            series.push_back(std::move(s));
        }
        const ChannelId channel = channel_at(flat);
        const auto path = out_dir / plot_file_name(channel, region, metric);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
        out << render_svg(channel, region, metric, std::move(series));
        if (!out) throw IoError(fmt::format("write to '{}' failed", path.string()));
        written.push_back(path);
    }
    std::sort(written.begin(), written.end());
    return written;
}

std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& csv, const std::filesystem::path& out_dir) {
    const auto rows = read_metrics_csv(csv);
    return emit_plots(rows, out_dir);
}

}  // namespace nwp
