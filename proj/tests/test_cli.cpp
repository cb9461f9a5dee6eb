#include <doctest.h>

#include <sstream>

#include "fixture.hpp"
#include "nwp/cli.hpp"
#include "nwp/report.hpp"

using namespace nwp;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

const std::string kTiny = "19,36,90,10,0,10";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("help and usage errors") {
    const auto help = cli({"--help"});
    CHECK(help.code == kExitOk);
    CHECK(help.out.find("rollout") != std::string::npos);
    CHECK(cli({"rollout", "--help"}).code == kExitOk);
    CHECK(cli({}).code == kExitUsage);

    const auto typo = cli({"rollout", "--ic", "a.nws", "--out-dir", "x", "--horizon", "24"});
    CHECK(typo.code == kExitUsage);
    CHECK(typo.err.find("did you mean '--horizons'") != std::string::npos);

    const auto missing = cli({"run", "--config", "missing.cfg"});
    CHECK(missing.code == kExitUsage);
    CHECK(missing.err.find("missing.cfg") != std::string::npos);

    test::TempDir dir;
    CHECK(cli({"synth", "--grid", "19,36,90,10", "--out", (dir / "x.nws").string()}).code == kExitUsage);
    CHECK(cli({"synth", "--grid", kTiny, "--time", "noon", "--out", (dir / "x.nws").string()}).code == kExitUsage);
    CHECK(cli({"synth", "--grid", kTiny, "--format", "grib", "--out", (dir / "x.nws").string()}).code == kExitUsage);
    CHECK(cli({"inspect", (dir / "nope.nws").string()}).code == kExitRunFailure);
}

TEST_CASE("synth, inspect, regrid, splice") {
    test::TempDir dir;
    const auto a = (dir / "a.nws").string(), b = (dir / "b.nws").string();
    REQUIRE(cli({"synth", "--grid", kTiny, "--label", "a", "--seed", "1", "--out", a}).code == kExitOk);
    REQUIRE(cli({"synth", "--grid", kTiny, "--label", "b", "--seed", "2", "--out", b}).code == kExitOk);

    const auto info = cli({"inspect", a, "--stats"});
    CHECK(info.code == kExitOk);
    CHECK(info.out.find("version:       1") != std::string::npos);
    CHECK(info.out.find("grid:          nlat=19 nlon=36 lat_start=90 dlat=10 lon_start=0 dlon=10") != std::string::npos);
    CHECK(info.out.find("valid_time:    2023-06-06T00:00:00Z") != std::string::npos);
    CHECK(info.out.find("source_label:  a") != std::string::npos);
    CHECK(info.out.find("channels:      69 (canonical)") != std::string::npos);
    CHECK(info.out.find("header_bytes:  343") != std::string::npos);
    CHECK(info.out.find("payload_bytes: " + std::to_string(69 * 19 * 36 * 4)) != std::string::npos);
    CHECK(info.out.find("  Z500   min") != std::string::npos);

    const auto spliced = (dir / "s.nws").string();
    CHECK(cli({"splice", "--base", a, "--donor", b, "--out", spliced}).code == kExitOk);
    CHECK(cli({"inspect", spliced}).out.find("source_label:  bpada") != std::string::npos);
    const auto s = read_archive(std::filesystem::path(spliced));
    const auto sa = read_archive(std::filesystem::path(a)), sb = read_archive(std::filesystem::path(b));
    // (30N, 100E) is inside East Asia: upper channels from b, surface from a.
    const std::size_t p = 6 * 36 + 10;
    CHECK(s.channel(Variable::Z, {500}).values()[p] == sb.channel(Variable::Z, {500}).values()[p]);
    CHECK(s.fields()[0].values()[p] == sa.fields()[0].values()[p]);

    CHECK(cli({"splice", "--base", a, "--donor", b, "--box", "60,10,0,10", "--out", spliced}).code == kExitUsage);

    const auto fine = (dir / "f.nws").string();
    const auto rg = cli({"regrid", "--in", a, "--out", fine, "--grid", "37,72,90,5,0,5"});
    CHECK(rg.code == kExitOk);
    CHECK(read_archive(std::filesystem::path(fine)).grid() == GridSpec{37, 72, 90, 5, 0, 5});
}

TEST_CASE("ingest a raw dump") {
    test::TempDir dir;
    const auto raw = (dir / "a.raw").string(), arc = (dir / "a.nws").string(), ref = (dir / "ref.nws").string();
    REQUIRE(cli({"synth", "--grid", kTiny, "--format", "raw", "--scan", "south-first", "--out", raw}).code == kExitOk);
    REQUIRE(cli({"synth", "--grid", kTiny, "--out", ref}).code == kExitOk);
    const auto r = cli({"ingest", "--raw", raw, "--grid", kTiny, "--scan", "south-first", "--time",
                        "2023-06-06T00:00:00Z", "--label", "synthetic", "--out", arc});
    CHECK(r.code == kExitOk);
    CHECK(test::slurp(arc) == test::slurp(ref));
    CHECK(cli({"ingest", "--raw", raw, "--grid", "canonical", "--time", "2023-06-06T00:00:00Z", "--label", "x",
               "--out", arc})
              .code == kExitRunFailure);
}

TEST_CASE("rollout and evaluate") {
    test::TempDir dir;
    test::ExperimentFixture fx(dir.path(), test::tiny_grid(), {"ifs"}, {24, 48, 72});
    const auto ic = (dir / "ifs.nws").string();
    const auto r = cli({"rollout", "--ic", ic, "--lead", "72", "--backend", "advection:1", "--out-dir",
                        (dir / "fc").string()});
    CHECK(r.code == kExitOk);
    for (const auto* name : {"ifs_024h.nws", "ifs_048h.nws", "ifs_072h.nws"})
        CHECK(std::filesystem::exists(dir / "fc" / name));
    CHECK(read_archive(dir / "fc" / "ifs_048h.nws").valid_time() == test::t0() + std::chrono::hours(48));

    const auto emit = cli({"rollout", "--ic", ic, "--lead", "30", "--horizons", "24,6", "--emit", "6", "--out-dir",
                           (dir / "fc2").string(), "--prefix", "p"});
    CHECK(emit.code == kExitOk);
    CHECK(std::filesystem::exists(dir / "fc2" / "p_006h.nws"));
    CHECK(std::filesystem::exists(dir / "fc2" / "p_030h.nws"));
    CHECK_FALSE(std::filesystem::exists(dir / "fc2" / "p_024h.nws"));
    CHECK(cli({"rollout", "--ic", ic, "--lead", "7", "--out-dir", (dir / "fc3").string()}).code == kExitUsage);
    CHECK(cli({"rollout", "--ic", ic, "--backend", "advection:1x", "--out-dir", (dir / "fc3").string()}).code ==
          kExitUsage);
    const auto ext = cli({"rollout", "--ic", ic, "--lead", "24", "--command", std::string(NWP_FAKE_BACKEND) + " --mode fail",
                          "--any-grid", "--out-dir", (dir / "fc3").string(), "--work-dir", (dir / "w").string()});
    CHECK(ext.code == kExitRunFailure);
    CHECK(ext.err.find("status 3") != std::string::npos);

    const auto csv = (dir / "m.csv").string();
    const auto ev = cli({"evaluate", "--forecast", (dir / "fc" / "ifs_{lead:03}h.nws").string(), "--truth",
                         (dir / "truth" / "era5_{lead:03}h.nws").string(), "--clim", (dir / "clim.nws").string(),
                         "--leads", "24,48,72", "--region", "ea=-10,60,60,150", "--channels", "Z500,T850", "--csv", csv,
                         "--plots", (dir / "plots").string()});
    CHECK(ev.code == kExitOk);
    const auto rows = read_metrics_csv(csv);
    CHECK(rows.size() == 2 * 1 * 3 * 2);
    CHECK(rows[0].region == "ea");
    CHECK(std::filesystem::exists(dir / "plots" / "Z500_ea_RMSE.svg"));

    const auto stdout_csv = cli({"evaluate", "--forecast", (dir / "fc" / "ifs_{lead:03}h.nws").string(), "--truth",
                                 (dir / "truth" / "era5_{lead:03}h.nws").string(), "--clim",
                                 (dir / "clim.nws").string(), "--leads", "24,96"});
    CHECK(stdout_csv.code == kExitRunFailure);
    CHECK(stdout_csv.out.starts_with(kCsvHeader));
    CHECK(stdout_csv.err.find("lead 96 h") != std::string::npos);
    CHECK(cli({"evaluate", "--forecast", "x", "--truth", "y", "--clim", "z", "--region", "nobox"}).code == kExitUsage);
}

TEST_CASE("run and plot") {
    test::TempDir dir;
    test::ExperimentFixture fx(dir.path(), test::tiny_grid(), {"ifs", "gfs"}, {24, 48});
    auto j = fx.config();
    j["lead_hours"] = {24, 48};
    const auto cfg = fx.write_config(j).string();
    const auto r = cli({"run", "--config", cfg, "--workers", "2"});
    CHECK(r.code == kExitOk);
    CHECK(r.out.find("144 rows") != std::string::npos);
    const auto p = cli({"plot", "--csv", (dir / "out" / "metrics.csv").string(), "--out-dir", (dir / "p").string()});
    CHECK(p.code == kExitOk);
    CHECK(p.out.find("wrote 36 plots") != std::string::npos);

    j["lead_hours"] = {24, 48, 72};
    const auto partial = cli({"run", "--config", fx.write_config(j).string()});
    CHECK(partial.code == kExitRunFailure);
    CHECK(partial.out.find("lead 72 h") != std::string::npos);

    j["bogus"] = true;
    const auto bad = cli({"run", "--config", fx.write_config(j).string()});
    CHECK(bad.code == kExitUsage);
    CHECK(bad.err.find("unknown key 'bogus'") != std::string::npos);
}

}  // TEST_SUITE
