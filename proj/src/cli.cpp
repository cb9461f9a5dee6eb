#include "nwp/cli.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "nwp/config.hpp"
#include "nwp/error.hpp"
#include "nwp/experiment.hpp"
#include "nwp/fieldio.hpp"
#include "nwp/regrid.hpp"
#include "nwp/report.hpp"
#include "nwp/rollout.hpp"
#include "nwp/splice.hpp"
#include "nwp/synthetic.hpp"
#include "nwp/verify.hpp"

namespace nwp {

namespace {

/// Raised for bad flag values that CLI11 cannot check itself.
class UsageError : public Error {
    using Error::Error;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

std::vector<int> parse_int_list(const std::string& text, std::string_view what) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) {
        char* end = nullptr;
        const long v = std::strtol(item.c_str(), &end, 10);
        if (*end != '\0' || v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
            throw UsageError(fmt::format("invalid {} '{}'", what, item));
        out.push_back(static_cast<int>(v));
    }
    if (out.empty()) throw UsageError(fmt::format("empty {} list", what));
    return out;
}

std::vector<ChannelId> parse_channel_list(const std::string& text) {
    if (text == "default") return default_report_channels();
    if (text == "all") {
        const auto& c = canonical_channels();
        return {c.begin(), c.end()};
    }
    std::vector<ChannelId> out;
    for (const auto& item : split_list(text)) out.push_back(parse_channel(item));
    return out;
}

template <typename Fn>
auto as_usage(Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const UsageError&) {
        throw;
    } catch (const Error& e) {
        throw UsageError(e.what());
    }
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
    std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

/// "did you mean" hint for the first unknown long flag in args.
std::string suggest_flag(const CLI::App& app, const std::vector<std::string>& args) {
    const CLI::App* scope = &app;
    for (const auto* sub : app.get_subcommands()) scope = sub;
    std::vector<std::string> known;
    for (const auto* opt : scope->get_options())
        for (const auto& name : opt->get_lnames()) known.push_back(name);
    for (const auto& arg : args) {
        if (!arg.starts_with("--")) continue;
        std::string name = arg.substr(2, arg.find('=') == std::string::npos ? std::string::npos : arg.find('=') - 2);
        if (std::find(known.begin(), known.end(), name) != known.end()) continue;
        std::string best;
        std::size_t best_d = std::numeric_limits<std::size_t>::max();
        for (const auto& k : known) {
            const auto d = edit_distance(name, k);
            if (d < best_d) {
                best_d = d;
                best = k;
            }
        }
        if (!best.empty() && best_d <= std::max<std::size_t>(2, name.size() / 3))
            return fmt::format("unknown flag '--{}'; did you mean '--{}'?", name, best);
        return fmt::format("unknown flag '--{}'", name);
    }
    return {};
}

// ---------------------------------------------------------------------------

struct IngestArgs {
    std::string raw, grid, scan = "north-first", channels = "canonical", time, label, out, nan = "error",
                                  range = "warn";
};

int cmd_ingest(const IngestArgs& a, std::ostream& out) {
    const GridSpec grid = as_usage([&] { return parse_grid(a.grid); });
    RawDumpLayout layout;
    layout.scan = as_usage([&] { return parse_scan_order(a.scan); });
    if (a.channels != "canonical") layout.channels = as_usage([&] { return parse_channel_list(a.channels); });
    const TimePoint t = as_usage([&] { return parse_time(a.time); });
    IngestOptions opts;
    opts.nan_policy = a.nan == "warn" ? ViolationPolicy::Warn : ViolationPolicy::Error;
    if (a.range == "off")
        opts.range_limits.enabled = false;
    else
        opts.range_policy = a.range == "error" ? ViolationPolicy::Error : ViolationPolicy::Warn;
    const StateSet s = ingest_raw(a.raw, grid, layout, t, a.label, opts);
    write_archive(s, std::filesystem::path(a.out));
    out << fmt::format("wrote {} ({}, {}, label '{}')\n", a.out, describe(grid), format_time(t), a.label);
    return kExitOk;
}

int cmd_regrid(const std::string& in, const std::string& dst, const std::string& grid_text, std::ostream& out) {
    const GridSpec grid = as_usage([&] { return parse_grid(grid_text); });
    const StateSet s = read_archive(std::filesystem::path(in));
    write_archive(regrid_state(s, grid), std::filesystem::path(dst));
    out << fmt::format("regridded {} -> {}: {}\n", describe(s.grid()), describe(grid), dst);
    return kExitOk;
}

struct SpliceArgs {
    std::string base, donor, box = "-10,60,60,150", scope = "upper-only", out, label;
    double blend = 0.0;
    bool allow_time_mismatch = false;
};

int cmd_splice(const SpliceArgs& a, std::ostream& out) {
    SpliceSpec spec;
    spec.region = as_usage([&] { return parse_box(a.box); });
    spec.scope = as_usage([&] { return parse_splice_scope(a.scope); });
    if (!(a.blend >= 0.0)) throw UsageError("--blend must be non-negative");
    spec.blend_width = a.blend;
    spec.allow_time_mismatch = a.allow_time_mismatch;
    const StateSet base = read_archive(std::filesystem::path(a.base));
    const StateSet donor = read_archive(std::filesystem::path(a.donor));
    StateSet result = splice_states(base, donor, spec);
    if (!a.label.empty()) result = result.with_source_label(a.label);
    write_archive(result, std::filesystem::path(a.out));
    out << fmt::format("wrote {} (label '{}')\n", a.out, result.source_label());
    return kExitOk;
}

struct RolloutArgs {
    std::string ic, backend = "persistence", command, horizons = "24", emit, out_dir, prefix, work_dir;
    int lead = 240;
    bool verify_determinism = false, keep_work = false, any_grid = false;
};

int cmd_rollout(const RolloutArgs& a, std::ostream& out) {
    BackendSpec backend = as_usage([&] {
        if (!a.command.empty()) return BackendSpec::external(a.command);
        return parse_backend(a.backend);
    });
    backend.horizons = parse_int_list(a.horizons, "horizon");
    backend.require_canonical_grid = !a.any_grid;
    std::vector<int> emit;
    RolloutPlan plan;
    if (a.emit.empty()) {
        plan = as_usage([&] { return schedule_steps(a.lead, backend.horizons); });
        emit = plan.cumulative_leads();
    } else {
        emit = parse_int_list(a.emit, "emit lead");
        if (std::find(emit.begin(), emit.end(), a.lead) == emit.end()) emit.push_back(a.lead);
        std::sort(emit.begin(), emit.end());
        plan = as_usage([&] { return plan_through_leads(emit, backend.horizons); });
    }

    const StateSet ic = read_archive(std::filesystem::path(a.ic));
    RolloutOptions opts;
    if (!a.work_dir.empty()) opts.work_dir = a.work_dir;
    opts.log = &out;
    opts.verify_determinism = a.verify_determinism;
    opts.keep_files = a.keep_work;
    std::filesystem::create_directories(a.out_dir);
    const std::string prefix = a.prefix.empty() ? ic.source_label() : a.prefix;
    run_rollout(
        ic, backend, plan, emit,
        [&](LeadState s) {
            const auto path = std::filesystem::path(a.out_dir) / fmt::format("{}_{:03d}h.nws", prefix, s.lead_hours);
            write_archive(s.state, path);
            out << fmt::format("lead {} h -> {}\n", s.lead_hours, path.string());
        },
        opts);
    return kExitOk;
}

struct EvaluateArgs {
    std::string forecast, truth, clim, leads, channels = "default", csv, plots;
    std::vector<std::string> regions;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
    const std::vector<int> leads = a.leads.empty() ? default_lead_hours() : parse_int_list(a.leads, "lead");
    const auto channels = as_usage([&] { return parse_channel_list(a.channels); });
    std::vector<NamedRegion> regions;
    for (const auto& r : a.regions) {
        const auto eq = r.find('=');
        if (eq == std::string::npos || eq == 0) throw UsageError(fmt::format("--region expects name=box, got '{}'", r));
        regions.push_back({r.substr(0, eq), as_usage([&] { return parse_box(r.substr(eq + 1)); })});
    }
    if (regions.empty()) regions = default_regions();

    const StateSet clim = read_archive(std::filesystem::path(a.clim));
    std::vector<LeadState> forecasts;
    std::map<int, StateSet> truths;
    bool failed = false;
    for (int lead : leads) {
        const std::filesystem::path fpath = expand_lead_pattern(a.forecast, lead);
        const std::filesystem::path tpath = expand_lead_pattern(a.truth, lead);
        try {
            forecasts.push_back({lead, read_archive(fpath)});
        } catch (const Error& e) {
            err << fmt::format("lead {} h: forecast: {}\n", lead, e.what());
            failed = true;
            continue;
        }
        try {
            truths.emplace(lead, read_archive(tpath));
        } catch (const Error& e) {
            err << fmt::format("lead {} h: truth: {}\n", lead, e.what());
        }
    }
    const Evaluation ev = evaluate_run(forecasts, truths, clim, regions, channels);
    for (const auto& e : ev.errors) err << fmt::format("lead {} h: {}\n", e.lead_hours, e.message);
    if (a.csv.empty())
        write_csv(ev.records, out);
    else {
        write_csv(ev.records, std::filesystem::path(a.csv));
        out << fmt::format("wrote {} rows to {}\n", ev.records.size(), a.csv);
        if (!a.plots.empty()) {
            const auto plots = emit_plots(std::filesystem::path(a.csv), a.plots);
            out << fmt::format("wrote {} plots to {}\n", plots.size(), a.plots);
        }
    }
    return failed || !ev.errors.empty() ? kExitRunFailure : kExitOk;
}

int cmd_run(const std::string& config, std::size_t workers, std::ostream& out) {
    const std::filesystem::path path(config);
    if (!std::filesystem::exists(path)) throw ConfigError(fmt::format("config '{}' not found", config));
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    ExperimentConfig cfg = parse_config(text, base);
    if (workers > 0) cfg.workers = workers;
    const RunReport report = run_experiment(cfg, text);
    for (const auto& r : report.runs) {
        out << fmt::format("{:<24} {:>6} records  {}\n", r.label, r.records, r.ok ? "ok" : "FAILED");
        if (!r.error.empty()) out << "    error: " << r.error << '\n';
        for (const auto& e : r.lead_errors) out << fmt::format("    lead {} h: {}\n", e.lead_hours, e.message);
    }
    out << fmt::format("{} rows -> {}\n{} plots, config hash {}\n", report.rows, report.csv_path.string(),
                       report.plots.size(), report.config_hash);
    return report.all_ok() ? kExitOk : kExitRunFailure;
}

int cmd_plot(const std::string& csv, const std::string& out_dir, std::ostream& out) {
    const auto plots = emit_plots(std::filesystem::path(csv), out_dir);
    out << fmt::format("wrote {} plots to {}\n", plots.size(), out_dir);
    return kExitOk;
}

int cmd_inspect(const std::string& file, bool list_channels, bool stats, std::ostream& out) {
    const ArchiveHeader h = read_archive_header(std::filesystem::path(file));
    const auto& canon = canonical_channels();
    const bool canonical =
        h.channels.size() == kChannelCount && std::equal(h.channels.begin(), h.channels.end(), canon.begin());
    out << fmt::format("file:          {}\n", file);
    out << fmt::format("version:       {}\n", h.version);
    out << fmt::format("grid:          nlat={} nlon={} lat_start={} dlat={} lon_start={} dlon={}\n", h.grid.nlat,
                       h.grid.nlon, h.grid.lat_start, h.grid.dlat, h.grid.lon_start, h.grid.dlon);
    out << fmt::format("valid_time:    {}\n", format_time(h.valid_time));
    out << fmt::format("source_label:  {}\n", h.source_label);
    out << fmt::format("channels:      {}{}\n", h.channels.size(), canonical ? " (canonical)" : " (non-canonical)");
    out << fmt::format("header_bytes:  {}\n", h.byte_size());
    out << fmt::format("payload_bytes: {}\n", h.payload_size());
    if (list_channels && !stats)
        for (const auto& c : h.channels) out << "  " << channel_name(c) << '\n';
    if (stats) {
        const StateSet s = read_archive(std::filesystem::path(file));
        for (const auto& f : s.fields()) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
            for (float v : f.values()) {
                lo = std::min<double>(lo, v);
                hi = std::max<double>(hi, v);
                sum += v;
            }
            out << fmt::format("  {:<6} min {:<14.6g} max {:<14.6g} mean {:.6g}\n", channel_name(f.channel()), lo, hi,
                               sum / static_cast<double>(f.values().size()));
        }
    }
    return kExitOk;
}

struct SynthArgs {
    std::string grid = "canonical", time = "2023-06-06T00:00:00Z", label = "synthetic", out, format = "archive",
                scan = "north-first";
    std::uint64_t seed = 1, noise_seed = 0;
    double noise = 0.0;
    bool climatology = false;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
    const GridSpec grid = as_usage([&] { return parse_grid(a.grid); });
    const TimePoint t = as_usage([&] { return parse_time(a.time); });
    StateSet s = a.climatology ? synthetic_climatology(grid, t).with_source_label(a.label)
                               : synthetic_state(grid, t, a.label, a.seed);
    if (a.noise > 0.0) s = add_noise(s, a.noise_seed, a.noise);
    if (a.format == "raw") {
        RawDumpLayout layout;
        layout.scan = as_usage([&] { return parse_scan_order(a.scan); });
        write_raw(s, std::filesystem::path(a.out), layout);
    } else if (a.format == "archive") {
        write_archive(s, std::filesystem::path(a.out));
    } else {
        throw UsageError(fmt::format("--format must be archive or raw, got '{}'", a.format));
    }
    out << fmt::format("wrote {} ({}, {})\n", a.out, describe(grid), a.format);
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Forecast-compatibility harness: ingest, regrid, splice, roll out and verify gridded states",
                 "nwpharness"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for all subcommands");

    IngestArgs ingest;
    auto* c_ingest = app.add_subcommand("ingest", "Convert a raw float32 dump into a .nws archive");
    c_ingest->add_option("--raw", ingest.raw, "Raw dump path")->required();
    c_ingest->add_option("--grid", ingest.grid, "canonical or nlat,nlon,lat_start,dlat,lon_start,dlon")->required();
    c_ingest->add_option("--scan", ingest.scan, "north-first or south-first")->capture_default_str();
    c_ingest->add_option("--channels", ingest.channels, "canonical or comma list (e.g. Z500,T2,...)")
        ->capture_default_str();
    c_ingest->add_option("--time", ingest.time, "Valid time, YYYY-MM-DDTHH:MM:SSZ")->required();
    c_ingest->add_option("--label", ingest.label, "Source label")->required();
    c_ingest->add_option("--out", ingest.out, "Output archive")->required();
    c_ingest->add_option("--nan", ingest.nan, "Non-finite values: error or warn")
        ->check(CLI::IsMember({"error", "warn"}))
        ->capture_default_str();
    c_ingest->add_option("--range", ingest.range, "Physical-range check: warn, error or off")
        ->check(CLI::IsMember({"warn", "error", "off"}))
        ->capture_default_str();

    std::string regrid_in, regrid_out, regrid_grid = "canonical";
    auto* c_regrid = app.add_subcommand("regrid", "Bilinear regrid of an archive");
    c_regrid->add_option("--in", regrid_in, "Input archive")->required();
    c_regrid->add_option("--out", regrid_out, "Output archive")->required();
    c_regrid->add_option("--grid", regrid_grid, "Destination grid")->capture_default_str();

    SpliceArgs splice;
    auto* c_splice = app.add_subcommand("splice", "Splice a donor state into a base state inside a box");
    c_splice->add_option("--base", splice.base, "Base archive")->required();
    c_splice->add_option("--donor", splice.donor, "Donor archive")->required();
    c_splice->add_option("--box", splice.box, "lat_min,lat_max,lon_min,lon_max")->capture_default_str();
    c_splice->add_option("--scope", splice.scope, "upper-only or all-channels")
        ->check(CLI::IsMember({"upper-only", "all-channels"}))
        ->capture_default_str();
    c_splice->add_option("--blend", splice.blend, "Feather width in degrees (0 = hard splice)")->capture_default_str();
    c_splice->add_flag("--allow-time-mismatch", splice.allow_time_mismatch, "Accept differing valid times");
    c_splice->add_option("--label", splice.label, "Override the <donor>pad<base> label");
    c_splice->add_option("--out", splice.out, "Output archive")->required();

    RolloutArgs rollout;
    auto* c_rollout = app.add_subcommand("rollout", "Drive a forecast backend autoregressively");
    c_rollout->add_option("--ic", rollout.ic, "Initial-condition archive")->required();
    c_rollout->add_option("--lead", rollout.lead, "Lead time in hours")->capture_default_str();
    c_rollout->add_option("--backend", rollout.backend, "persistence, advection:<cells>[/<hours>] or external:<cmd>")
        ->capture_default_str();
    c_rollout->add_option("--command", rollout.command, "External backend command (same as --backend external:<cmd>)");
    c_rollout->add_option("--horizons", rollout.horizons, "Comma list of step sizes in hours")->capture_default_str();
    c_rollout->add_option("--emit", rollout.emit, "Comma list of leads to write (default: every step)");
    c_rollout->add_option("--out-dir", rollout.out_dir, "Directory for <prefix>_<lead>h.nws")->required();
    c_rollout->add_option("--prefix", rollout.prefix, "Output file prefix (default: source label)");
    c_rollout->add_option("--work-dir", rollout.work_dir, "Scratch directory for external backends");
    c_rollout->add_flag("--verify-determinism", rollout.verify_determinism, "Run step 1 twice and compare outputs");
    c_rollout->add_flag("--keep-work", rollout.keep_work, "Keep backend scratch files");
    c_rollout->add_flag("--any-grid", rollout.any_grid, "Allow external backends on non-canonical grids");

    EvaluateArgs evaluate;
    auto* c_eval = app.add_subcommand("evaluate", "Score a forecast series against truth (RMSE, ACC)");
    c_eval->add_option("--forecast", evaluate.forecast, "Forecast archive pattern with {lead} or {lead:03}")->required();
    c_eval->add_option("--truth", evaluate.truth, "Truth archive pattern")->required();
    c_eval->add_option("--clim", evaluate.clim, "Climatology archive")->required();
    c_eval->add_option("--leads", evaluate.leads, "Comma list of leads (default 24..240 by 24)");
    c_eval->add_option("--region", evaluate.regions, "name=lat_min,lat_max,lon_min,lon_max (repeatable)");
    c_eval->add_option("--channels", evaluate.channels, "default, all, or comma list")->capture_default_str();
    c_eval->add_option("--csv", evaluate.csv, "Output CSV (default: stdout)");
    c_eval->add_option("--plots", evaluate.plots, "Also write SVG plots to this directory");

    std::string run_config;
    std::size_t run_workers = 0;
    auto* c_run = app.add_subcommand("run", "Run a full experiment from a JSON config");
    c_run->add_option("--config", run_config, "Experiment config (JSON)")->required();
    c_run->add_option("--workers", run_workers, "Concurrent runs (default: NWP_WORKERS or CPU count)");

    std::string plot_csv, plot_dir;
    auto* c_plot = app.add_subcommand("plot", "Render SVG line plots from a metric CSV");
    c_plot->add_option("--csv", plot_csv, "Metric table")->required();
    c_plot->add_option("--out-dir", plot_dir, "Output directory")->required();

    std::string inspect_file;
    bool inspect_channels = false, inspect_stats = false;
    auto* c_inspect = app.add_subcommand("inspect", "Print an archive header");
    c_inspect->add_option("file", inspect_file, "Archive (.nws)")->required();
    c_inspect->add_flag("--channels", inspect_channels, "List channels");
    c_inspect->add_flag("--stats", inspect_stats, "Per-channel min/max/mean (reads the payload)");

    SynthArgs synth;
    auto* c_synth = app.add_subcommand("synth", "Write a synthetic state (for demos and tests)");
    c_synth->add_option("--grid", synth.grid, "Grid")->capture_default_str();
    c_synth->add_option("--time", synth.time, "Valid time")->capture_default_str();
    c_synth->add_option("--label", synth.label, "Source label")->capture_default_str();
    c_synth->add_option("--seed", synth.seed, "Anomaly seed")->capture_default_str();
    c_synth->add_option("--noise", synth.noise, "Gaussian noise amplitude (0 = none)")->capture_default_str();
    c_synth->add_option("--noise-seed", synth.noise_seed, "Noise seed")->capture_default_str();
    c_synth->add_flag("--climatology", synth.climatology, "Write the smooth climatology instead");
    c_synth->add_option("--format", synth.format, "archive or raw")->capture_default_str();
    c_synth->add_option("--scan", synth.scan, "Row order for raw output")->capture_default_str();
    c_synth->add_option("--out", synth.out, "Output path")->required();

    std::vector<std::string> storage{"nwpharness"};
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& s : storage) argv.push_back(s.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        app.exit(e, out, err);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        if (const auto hint = suggest_flag(app, args); !hint.empty()) err << hint << '\n';
        return kExitUsage;
    }

    try {
        if (app.got_subcommand(c_ingest)) return cmd_ingest(ingest, out);
        if (app.got_subcommand(c_regrid)) return cmd_regrid(regrid_in, regrid_out, regrid_grid, out);
        if (app.got_subcommand(c_splice)) return cmd_splice(splice, out);
        if (app.got_subcommand(c_rollout)) return cmd_rollout(rollout, out);
        if (app.got_subcommand(c_eval)) return cmd_evaluate(evaluate, out, err);
        if (app.got_subcommand(c_run)) return cmd_run(run_config, run_workers, out);
        if (app.got_subcommand(c_plot)) return cmd_plot(plot_csv, plot_dir, out);
        if (app.got_subcommand(c_inspect)) return cmd_inspect(inspect_file, inspect_channels, inspect_stats, out);
        if (app.got_subcommand(c_synth)) return cmd_synth(synth, out);
    } catch (const UsageError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRunFailure;
    }
    return kExitUsage;
}

}  // namespace nwp
