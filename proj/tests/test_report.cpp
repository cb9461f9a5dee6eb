#include <doctest.h>

#include <regex>
#include <sstream>

#include "nwp/error.hpp"
#include "nwp/report.hpp"
#include "support.hpp"

using namespace nwp;

namespace {

MetricRecord rec(std::string src, ChannelId ch, std::string region, int lead, Metric m, double v) {
    return {test::t0(), std::move(src), ch, std::move(region), lead, m, v};
}

std::vector<CsvRow> parse(const std::string& text) {
    std::istringstream in(text);
    return parse_metrics_csv(in);
}

struct Marker {
    std::string source;
    int lead;
    std::string value;
};

/// Circles grouped by series, in document order.
std::vector<Marker> markers(const std::string& svg) {
    std::vector<Marker> out;
    const std::regex group(R"rx(<g class="series" data-source="([^"]*)")rx");
    const std::regex circle(R"rx(<circle [^>]*data-lead="(\d+)" data-value="([^"]*)")rx");
    std::string current;
    std::istringstream in(svg);
    std::string line;
    while (std::getline(in, line)) {
        std::smatch m;
        if (std::regex_search(line, m, group)) current = m[1];
        if (std::regex_search(line, m, circle)) out.push_back({current, std::stoi(m[1]), m[2]});
    }
    return out;
}

std::size_t count(const std::string& hay, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("csv rows") {
    const ChannelId z500{Variable::Z, {500}}, q500{Variable::Q, {500}}, t2{Variable::T2, PressureLevel::surface()};
    CHECK(format_csv_row(rec("ifs", z500, "global", 24, Metric::RMSE, 123.456789012345)) ==
          "2023-06-06T00:00:00Z,ifs,Z,500,global,24,RMSE,123.456789");
    CHECK(format_csv_row(rec("ifs", t2, "east_asia", 240, Metric::ACC, 0.5)) ==
          "2023-06-06T00:00:00Z,ifs,T2,0,east_asia,240,ACC,0.5");
    // Q RMSE is written in g/kg; Q ACC is dimensionless.
    CHECK(format_csv_row(rec("ifs", q500, "global", 24, Metric::RMSE, 0.00125)) ==
          "2023-06-06T00:00:00Z,ifs,Q,500,global,24,RMSE,1.25");
    CHECK(format_csv_row(rec("ifs", q500, "global", 24, Metric::ACC, 0.25)).ends_with(",ACC,0.25"));
    CHECK(display_unit(q500, Metric::RMSE) == "g/kg");
    CHECK(display_unit(z500, Metric::RMSE) == "m2/s2");
    CHECK(display_unit(z500, Metric::ACC).empty());
}

TEST_CASE("csv round trip") {
    std::vector<MetricRecord> rs;
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (const auto& ch : default_report_channels())
        for (int lead : {24, 48})
            for (auto m : {Metric::RMSE, Metric::ACC}) rs.push_back(rec("gfs", ch, "global", lead, m, u(rng)));
    std::ostringstream out;
    write_csv(rs, out);
    const auto text = out.str();
    CHECK(text.starts_with(std::string(kCsvHeader) + "\n"));
    const auto rows = parse(text);
    REQUIRE(rows.size() == rs.size());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(rows[k].channel == rs[k].channel);
        CHECK(rows[k].lead_hours == rs[k].lead_hours);
        CHECK(rows[k].metric == rs[k].metric);
        CHECK(rows[k].value == doctest::Approx(display_value(rs[k])).epsilon(1e-8));
        CHECK(format_csv_row(rs[k]).ends_with("," + rows[k].value_text));
    }
}

TEST_CASE("csv parse errors carry line numbers") {
    const std::string h = std::string(kCsvHeader) + "\n";
    auto line_of = [&](const std::string& text) {
        try {
            parse(text);
        } catch (const CsvParseError& e) {
            return e.line();
        }
        return std::size_t{0};
    };
    CHECK(line_of("") == 1);
    CHECK(line_of("a,b\n") == 1);
    CHECK(line_of(h + "2023-06-06T00:00:00Z,ifs,Z,500,global,24,RMSE,1\n2023-06-06T00:00:00Z,ifs,Z,501,global,24,RMSE,1\n") == 3);
    CHECK(line_of(h + "2023-06-06T00:00:00Z,ifs,W,500,global,24,RMSE,1\n") == 2);
    CHECK(line_of(h + "2023-06-06T00:00:00Z,ifs,Z,500,global,x,RMSE,1\n") == 2);
    CHECK(line_of(h + "2023-06-06T00:00:00Z,ifs,Z,500,global,24,MAE,1\n") == 2);
    CHECK(line_of(h + "2023-06-06T00:00:00Z,ifs,Z,500,global,24,RMSE,abc\n") == 2);
    CHECK(line_of(h + "2023-06-06T00:00:00Z,ifs,Z,500,global,24,RMSE\n") == 2);
    CHECK(line_of(h + "never,ifs,Z,500,global,24,RMSE,1\n") == 2);
    CHECK(line_of(h + "2023-06-06T00:00:00Z,ifs,Z,500,global,24,RMSE,1\r\n") == 0);
}

TEST_CASE("plots: one file per channel, region and metric") {
    test::TempDir dir;
    std::vector<MetricRecord> rs;
    for (const auto& src : {"ifs", "gfs"})
        for (const auto& ch : default_report_channels())
            for (const auto& region : {"global", "east_asia"})
                for (int lead = 24; lead <= 240; lead += 24)
                    for (auto m : {Metric::RMSE, Metric::ACC})
                        rs.push_back(rec(src, ch, region, lead, m, m == Metric::ACC ? 1.0 - lead / 1000.0 : lead * 0.1));
    sort_records(rs);
    write_csv(rs, dir / "m.csv");
    const auto plots = emit_plots(dir / "m.csv", dir / "plots");
    CHECK(plots.size() == 36);
    CHECK(std::filesystem::exists(dir / "plots" / "Z500_east_asia_RMSE.svg"));
    CHECK(std::filesystem::exists(dir / "plots" / "MSLP_global_ACC.svg"));
    CHECK(std::is_sorted(plots.begin(), plots.end()));

    // Every marker carries the exact CSV value text of its row.
    const auto rows = read_metrics_csv(dir / "m.csv");
    std::map<std::tuple<std::string, std::string, int>, std::string> by_key;
    for (const auto& r : rows)
        by_key[{plot_file_name(r.channel, r.region, r.metric), r.source, r.lead_hours}] = r.value_text;
    std::size_t checked = 0;
    for (const auto& p : plots) {
        const auto svg = test::slurp(p);
        CHECK(count(svg, "<polyline") == 2);
        for (const auto& m : markers(svg)) {
            CHECK(by_key.at({p.filename().string(), m.source, m.lead}) == m.value);
            ++checked;
        }
    }
    CHECK(checked == rows.size());
}

TEST_CASE("plots: single lead and identical series") {
    test::TempDir dir;
    const ChannelId z500{Variable::Z, {500}};
    std::vector<MetricRecord> rs{rec("a", z500, "global", 24, Metric::RMSE, 5.0),
                                 rec("b", z500, "global", 24, Metric::RMSE, 5.0)};
    std::ostringstream out;
    write_csv(rs, out);
    const auto plots = emit_plots(parse(out.str()), dir.path());
    REQUIRE(plots.size() == 1);
    const auto svg = test::slurp(plots[0]);
    CHECK(count(svg, "<polyline") == 0);
    CHECK(markers(svg).size() == 2);
    CHECK(svg.find(">a</text>") != std::string::npos);
    CHECK(svg.find(">b</text>") != std::string::npos);

    rs.push_back(rec("a", z500, "global", 48, Metric::RMSE, 6.0));
    rs.push_back(rec("b", z500, "global", 48, Metric::RMSE, 6.0));
    std::ostringstream out2;
    write_csv(rs, out2);
    const auto svg2 = test::slurp(emit_plots(parse(out2.str()), dir.path())[0]);
    CHECK(count(svg2, "<polyline") == 2);
    // Overlapping series draw identical polylines in distinct colours.
    const std::regex poly(R"rx(<polyline [^>]*points="([^"]*)")rx");
    std::vector<std::string> pts;
    for (auto it = std::sregex_iterator(svg2.begin(), svg2.end(), poly); it != std::sregex_iterator(); ++it)
        pts.push_back((*it)[1]);
    REQUIRE(pts.size() == 2);
    CHECK(pts[0] == pts[1]);
}

TEST_CASE("plots: duplicates are rejected") {
    test::TempDir dir;
    const ChannelId z500{Variable::Z, {500}};
    std::vector<MetricRecord> rs{rec("a", z500, "global", 24, Metric::RMSE, 5.0),
                                 rec("a", z500, "global", 24, Metric::RMSE, 6.0)};
    std::ostringstream out;
    write_csv(rs, out);
    CHECK_THROWS_AS(emit_plots(parse(out.str()), dir.path()), Error);
}

TEST_CASE("plots are deterministic") {
    test::TempDir dir;
    std::vector<MetricRecord> rs;
    for (int lead = 24; lead <= 240; lead += 24)
        rs.push_back(rec("ifs", {Variable::T2, PressureLevel::surface()}, "global", lead, Metric::RMSE, lead / 7.0));
    write_csv(rs, dir / "m.csv");
    const auto a = test::slurp(emit_plots(dir / "m.csv", dir / "p1")[0]);
    const auto b = test::slurp(emit_plots(dir / "m.csv", dir / "p2")[0]);
    CHECK(a == b);
    CHECK(a.find("RMSE (K)") != std::string::npos);
}

}  // TEST_SUITE
