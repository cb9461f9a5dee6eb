#include "nwp/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "nwp/error.hpp"
#include "nwp/fieldio.hpp"
#include "nwp/hash.hpp"
#include "nwp/regrid.hpp"
#include "nwp/report.hpp"
#include "nwp/splice.hpp"
#include "parallel.hpp"

namespace nwp {

bool RunReport::all_ok() const noexcept {
    return std::all_of(runs.begin(), runs.end(), [](const RunOutcome& r) { return r.ok; });
}

namespace {

/// Keeps truth states in memory only while the whole series stays small.
constexpr std::uint64_t kTruthCacheBytes = 1ULL << 30;

std::string file_stem_for(const std::string& label) {
    std::string out = label;
    for (auto& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
    return out;
}

struct PreparedSource {
    std::shared_ptr<const StateSet> state;
    std::string error;
    std::string log;
};

class TruthStore {
public:
    TruthStore(const ExperimentConfig& cfg)
        : cfg_(cfg),
          cache_(static_cast<std::uint64_t>(cfg.target_grid.size()) * kChannelCount * 4 * cfg.lead_hours.size() <=
                 kTruthCacheBytes) {}

    /// Throws on a missing or unreadable truth archive.
    std::shared_ptr<const StateSet> get(int lead) {
        if (cache_) {
            std::lock_guard lock(mutex_);
            if (auto it = states_.find(lead); it != states_.end()) {
                if (!it->second.error.empty()) throw Error(it->second.error);
                return it->second.state;
            }
        }
        Entry e;
        try {
            e.state = std::make_shared<const StateSet>(load(lead));
        } catch (const Error& ex) {
            e.error = ex.what();
        }
        if (cache_) {
            std::lock_guard lock(mutex_);
            states_.emplace(lead, e);
        }
        if (!e.error.empty()) throw Error(e.error);
        return e.state;
    }

private:
    struct Entry {
        std::shared_ptr<const StateSet> state;
        std::string error;
    };

    StateSet load(int lead) const {
        const std::filesystem::path path = expand_lead_pattern(cfg_.truth_pattern, lead);
        if (!std::filesystem::exists(path))
            throw Error(fmt::format("truth for lead {} h not found at '{}'", lead, path.string()));
        StateSet s = read_archive(path);
        const TimePoint expected = cfg_.init_time + std::chrono::hours{lead};
        if (s.valid_time() != expected)
            throw Error(fmt::format("truth '{}' is valid at {}, expected {}", path.string(), format_time(s.valid_time()),
                                    format_time(expected)));
        if (!(s.grid() == cfg_.target_grid)) s = regrid_state(s, cfg_.target_grid);
        return s;
    }

    const ExperimentConfig& cfg_;
    bool cache_;
    std::mutex mutex_;
    std::map<int, Entry> states_;
};

PreparedSource prepare_source(const IcSource& src, const ExperimentConfig& cfg) {
    PreparedSource out;
    std::ostringstream log;
    try {
        StateSet state = [&] {
            if (src.format == SourceFormat::Raw) {
                IngestOptions opts = cfg.ingest;
                opts.warn = [&log](const std::string& msg) { log << "warning: " << msg << '\n'; };
                log << fmt::format("ingest raw '{}' on {} ({})\n", src.path.string(), describe(src.grid),
                                   scan_order_name(src.layout.scan));
                return ingest_raw(src.path, src.grid, src.layout, cfg.init_time, src.label, opts);
            }
            log << fmt::format("read archive '{}'\n", src.path.string());
            StateSet s = read_archive(src.path);
            if (s.valid_time() != cfg.init_time)
                log << fmt::format("warning: archive valid time {} differs from init_time {}; using init_time\n",
                                   format_time(s.valid_time()), format_time(cfg.init_time));
            return s.with_valid_time(cfg.init_time).with_source_label(src.label);
        }();
        if (!(state.grid() == cfg.target_grid)) {
            log << fmt::format("regrid {} -> {}\n", describe(state.grid()), describe(cfg.target_grid));
            state = regrid_state(state, cfg.target_grid);
        }
        out.state = std::make_shared<const StateSet>(std::move(state));
    } catch (const Error& e) {
        out.error = e.what();
        log << "error: " << e.what() << '\n';
    }
    out.log = log.str();
    return out;
}

struct RunSpec {
    std::string label;
    const IcSource* source = nullptr;
    const SpliceScenario* scenario = nullptr;
};

struct RunResult {
    RunOutcome outcome;
    std::vector<MetricRecord> records;
};

RunResult execute_run(const RunSpec& run, const ExperimentConfig& cfg, const std::map<std::string, PreparedSource>& prepared,
                      const StateSet& climatology, TruthStore& truths) {
    RunResult result;
    result.outcome.label = run.label;
    const auto logs_dir = cfg.output_dir / "logs";
    result.outcome.log_path = logs_dir / (file_stem_for(run.label) + ".log");
    std::ostringstream log;
    log << fmt::format("run '{}' backend {}\n", run.label, describe(cfg.backend));

    auto fetch = [&](const std::string& label) -> const StateSet& {
        const auto& p = prepared.at(label);
        if (!p.state) throw Error(fmt::format("source '{}' unavailable: {}", label, p.error));
        return *p.state;
    };

    try {
        StateSet ic = [&] {
            if (run.source) {
                log << prepared.at(run.source->label).log;
                return fetch(run.source->label);
            }
            const auto& sc = *run.scenario;
            const StateSet& base = fetch(sc.base_source);
            const StateSet& donor = fetch(sc.donor_source);
            log << fmt::format("splice donor '{}' into base '{}' box [{}, {}] x [{}, {}] scope {} blend {}\n",
                               sc.donor_source, sc.base_source, sc.spec.region.lat_min, sc.spec.region.lat_max,
                               sc.spec.region.lon_min, sc.spec.region.lon_max, splice_scope_name(sc.spec.scope),
                               sc.spec.blend_width);
            return splice_states(base, donor, sc.spec).with_source_label(sc.label);
        }();

        const RolloutPlan plan = plan_through_leads(cfg.lead_hours, cfg.backend.horizons);
        log << fmt::format("plan: {} steps to {} h\n", plan.steps.size(), plan.total_hours());

        RolloutOptions opts;
        opts.work_dir = cfg.output_dir / "work" / file_stem_for(run.label);
        opts.log = &log;
        const std::vector<NamedRegion>& regions = cfg.regions;

        run_rollout(
            ic, cfg.backend, plan, cfg.lead_hours,
            [&](LeadState fc) {
                std::shared_ptr<const StateSet> truth;
                try {
                    truth = truths.get(fc.lead_hours);
                } catch (const Error& e) {
                    result.outcome.lead_errors.push_back({fc.lead_hours, e.what()});
                    log << fmt::format("lead {} h: {}\n", fc.lead_hours, e.what());
                    return;
                }
                const std::map<int, StateSet> truth_map{{fc.lead_hours, *truth}};
                const LeadState one[] = {std::move(fc)};
                Evaluation ev = evaluate_run(one, truth_map, climatology, regions, cfg.report_channels);
                for (const auto& e : ev.errors) log << fmt::format("lead {} h: {}\n", e.lead_hours, e.message);
                result.outcome.lead_errors.insert(result.outcome.lead_errors.end(), ev.errors.begin(), ev.errors.end());
                result.records.insert(result.records.end(), ev.records.begin(), ev.records.end());
            },
            opts);
        std::error_code ec;
        std::filesystem::remove_all(opts.work_dir, ec);
    } catch (const Error& e) {
        result.outcome.error = e.what();
        log << "error: " << e.what() << '\n';
    }
    result.outcome.records = result.records.size();
    result.outcome.ok = result.outcome.error.empty() && result.outcome.lead_errors.empty();
    log << fmt::format("{} records, status {}\n", result.records.size(), result.outcome.ok ? "ok" : "FAILED");

    std::ofstream out(result.outcome.log_path, std::ios::binary | std::ios::trunc);
    out << log.str();
    return result;
}

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
    return p.lexically_relative(base).generic_string();
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& cfg, std::string_view config_text) {
    cfg.validate();

    RunReport report;
    std::filesystem::create_directories(cfg.output_dir / "logs");

    report.config_snapshot = cfg.output_dir / "config.snapshot.json";
    {
        std::ofstream snap(report.config_snapshot, std::ios::binary | std::ios::trunc);
        snap.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
        if (!snap) throw IoError(fmt::format("cannot write '{}'", report.config_snapshot.string()));
    }
    Fnv1a64 hash;
    hash.update(config_text);
    report.config_hash = hash.hex();

    StateSet climatology = read_archive(cfg.climatology);
    if (!(climatology.grid() == cfg.target_grid)) climatology = regrid_state(climatology, cfg.target_grid);

    const std::size_t workers = cfg.workers > 0 ? cfg.workers : default_worker_count();

    std::vector<PreparedSource> prepared_list(cfg.ic_sources.size());
    detail::parallel_for(cfg.ic_sources.size(), workers,
                         [&](std::size_t k) { prepared_list[k] = prepare_source(cfg.ic_sources[k], cfg); });
    std::map<std::string, PreparedSource> prepared;
    for (std::size_t k = 0; k < cfg.ic_sources.size(); ++k)
        prepared.emplace(cfg.ic_sources[k].label, std::move(prepared_list[k]));

    std::vector<RunSpec> runs;
    for (const auto& s : cfg.ic_sources) runs.push_back({s.label, &s, nullptr});
    for (const auto& sc : cfg.splice_scenarios) runs.push_back({sc.label, nullptr, &sc});

    TruthStore truths(cfg);
    std::vector<RunResult> results(runs.size());
    detail::parallel_for(runs.size(), workers,
                         [&](std::size_t k) { results[k] = execute_run(runs[k], cfg, prepared, climatology, truths); });

    std::vector<MetricRecord> records;
    for (auto& r : results) {
        records.insert(records.end(), r.records.begin(), r.records.end());
        report.runs.push_back(std::move(r.outcome));
    }
    sort_records(records);
    report.rows = records.size();
    report.csv_path = cfg.output_dir / "metrics.csv";
    write_csv(records, report.csv_path);

    const auto plot_dir = cfg.output_dir / "plots";
    std::error_code ec;
    std::filesystem::remove_all(plot_dir, ec);
    if (!records.empty()) report.plots = emit_plots(report.csv_path, plot_dir);

    nlohmann::ordered_json manifest;
    manifest["name"] = cfg.name;
    manifest["config_hash"] = report.config_hash;
    manifest["csv"] = relative_to(report.csv_path, cfg.output_dir);
    manifest["rows"] = report.rows;
    manifest["runs"] = nlohmann::ordered_json::array();
    for (const auto& r : report.runs) {
        nlohmann::ordered_json j;
        j["label"] = r.label;
        j["ok"] = r.ok;
        j["records"] = r.records;
        j["log"] = relative_to(r.log_path, cfg.output_dir);
        if (!r.error.empty()) j["error"] = r.error;
        if (!r.lead_errors.empty()) {
            j["lead_errors"] = nlohmann::ordered_json::array();
            for (const auto& e : r.lead_errors) j["lead_errors"].push_back({{"lead_hours", e.lead_hours}, {"message", e.message}});
        }
        manifest["runs"].push_back(std::move(j));
    }
    manifest["plots"] = nlohmann::ordered_json::array();
    for (const auto& p : report.plots) manifest["plots"].push_back(relative_to(p, cfg.output_dir));
    std::ofstream(cfg.output_dir / "report.json", std::ios::binary | std::ios::trunc) << manifest.dump(2) << '\n';
    return report;
}

RunReport run_experiment(const std::filesystem::path& config_path) {
    std::ifstream in(config_path, std::ios::binary);
    if (!in) throw ConfigError(fmt::format("config: cannot read '{}'", config_path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    auto base = config_path.parent_path();
    if (base.empty()) base = ".";
    return run_experiment(parse_config(text, base), text);
}

}  // namespace nwp
