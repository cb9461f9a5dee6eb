#include "nwp/config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "nwp/error.hpp"
#include "parallel.hpp"

namespace nwp {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const json& obj, std::string_view where, std::initializer_list<std::string_view> allowed) {
    if (!obj.is_object()) fail(fmt::format("{} must be an object", where));
    for (const auto& [key, _] : obj.items())
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            fail(fmt::format("unknown key '{}' in {}", key, where));
}

template <typename T>
T get(const json& obj, const char* key, std::string_view where) {
    if (!obj.contains(key)) fail(fmt::format("missing '{}' in {}", key, where));
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        fail(fmt::format("'{}' in {} has the wrong type", key, where));
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, std::string_view where) {
    return obj.contains(key) ? get<T>(obj, key, where) : fallback;
}

GridSpec grid_from_json(const json& j, std::string_view where) {
    if (j.is_string()) {
        try {
            return parse_grid(j.get<std::string>());
        } catch (const Error& e) {
            fail(fmt::format("{}: {}", where, e.what()));
        }
    }
    check_keys(j, where, {"nlat", "nlon", "lat_start", "dlat", "lon_start", "dlon"});
    GridSpec g{get<std::size_t>(j, "nlat", where), get<std::size_t>(j, "nlon", where), get<double>(j, "lat_start", where),
               get<double>(j, "dlat", where),      get<double>(j, "lon_start", where), get<double>(j, "dlon", where)};
    try {
        g.validate();
    } catch (const InvalidGridError& e) {
        fail(fmt::format("{}: {}", where, e.what()));
    }
    return g;
}

RegionBox box_from_json(const json& j, std::string_view where) {
    if (!j.is_array() || j.size() != 4) fail(fmt::format("{} must be [lat_min, lat_max, lon_min, lon_max]", where));
    RegionBox b;
    try {
        b = {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
        b.validate();
    } catch (const json::exception&) {
        fail(fmt::format("{} must hold four numbers", where));
    } catch (const Error& e) {
        fail(fmt::format("{}: {}", where, e.what()));
    }
    return b;
}

std::vector<ChannelId> channels_from_json(const json& j, std::string_view where) {
    if (j.is_string() && j.get<std::string>() == "all") {
        const auto& c = canonical_channels();
        return {c.begin(), c.end()};
    }
    if (j.is_string() && j.get<std::string>() == "canonical") return {};
    if (!j.is_array()) fail(fmt::format("{} must be a list of channel names", where));
    std::vector<ChannelId> out;
    for (const auto& item : j) {
        if (!item.is_string()) fail(fmt::format("{} must be a list of channel names", where));
        try {
            out.push_back(parse_channel(item.get<std::string>()));
        } catch (const Error& e) {
            fail(fmt::format("{}: {}", where, e.what()));
        }
    }
    return out;
}

ViolationPolicy policy_from(const std::string& s, std::string_view where) {
    if (s == "error") return ViolationPolicy::Error;
    if (s == "warn") return ViolationPolicy::Warn;
    fail(fmt::format("{} must be 'error' or 'warn'", where));
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

bool label_ok(const std::string& s) {
    return !s.empty() && std::none_of(s.begin(), s.end(), [](char c) {
        return c == ',' || c == '"' || c == '\n' || c == '\r' || c == '/' || c == '\\';
    });
}

}  // namespace

std::vector<int> default_lead_hours() {
    std::vector<int> leads;
    for (int h = 24; h <= 240; h += 24) leads.push_back(h);
    return leads;
}

GridSpec parse_grid(std::string_view text) {
    if (text == "canonical") return GridSpec::canonical();
    GridSpec g;
    unsigned long nlat = 0, nlon = 0;
    char tail = 0;
    const std::string buf(text);
    if (std::sscanf(buf.c_str(), "%lu,%lu,%lf,%lf,%lf,%lf%c", &nlat, &nlon, &g.lat_start, &g.dlat, &g.lon_start, &g.dlon,
                    &tail) != 6)
        throw Error(fmt::format("invalid grid '{}', expected canonical or nlat,nlon,lat_start,dlat,lon_start,dlon", text));
    g.nlat = nlat;
    g.nlon = nlon;
    g.validate();
    return g;
}

std::string expand_lead_pattern(std::string_view pattern, int lead_hours) {
    std::string out(pattern);
    auto replace_all = [&out](std::string_view key, const std::string& value) {
        for (std::size_t pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos + value.size()))
            out.replace(pos, key.size(), value);
    };
    replace_all("{lead:03}", fmt::format("{:03d}", lead_hours));
    replace_all("{lead}", std::to_string(lead_hours));
    return out;
}

std::size_t default_worker_count() {
    if (const char* env = std::getenv("NWP_WORKERS")) {
        char* end = nullptr;
        const long n = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
    }
    return detail::default_workers();
}

ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(fmt::format("invalid JSON: {}", e.what()));
    }
    check_keys(root, "top level",
               {"schema_version", "name", "init_time", "ic_sources", "truth", "climatology", "backend", "lead_hours",
                "regions", "splice_scenarios", "report_channels", "output_dir", "target_grid", "workers", "ingest"});

    ExperimentConfig cfg;
    cfg.schema_version = get<int>(root, "schema_version", "top level");
    if (cfg.schema_version != kConfigSchemaVersion)
        fail(fmt::format("unsupported schema_version {} (expected {})", cfg.schema_version, kConfigSchemaVersion));
    cfg.name = get<std::string>(root, "name", "top level");
    try {
        cfg.init_time = parse_time(get<std::string>(root, "init_time", "top level"));
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        fail(fmt::format("init_time: {}", e.what()));
    }

    if (!root.contains("ic_sources") || !root["ic_sources"].is_array()) fail("'ic_sources' must be a list");
    for (std::size_t k = 0; k < root["ic_sources"].size(); ++k) {
        const json& s = root["ic_sources"][k];
        const std::string where = fmt::format("ic_sources[{}]", k);
        check_keys(s, where, {"label", "path", "format", "grid", "layout"});
        IcSource src;
        src.label = get<std::string>(s, "label", where);
        src.path = resolve(base_dir, get<std::string>(s, "path", where));
        const auto format = get_or<std::string>(s, "format", "archive", where);
        if (format == "archive") {
            src.format = SourceFormat::Archive;
        } else if (format == "raw") {
            src.format = SourceFormat::Raw;
            if (!s.contains("grid")) fail(where + ": raw sources need a 'grid'");
            src.grid = grid_from_json(s["grid"], where + ".grid");
            if (s.contains("layout")) {
                const json& l = s["layout"];
                check_keys(l, where + ".layout", {"channels", "scan"});
                if (l.contains("channels")) src.layout.channels = channels_from_json(l["channels"], where + ".layout.channels");
                try {
                    src.layout.scan = parse_scan_order(get_or<std::string>(l, "scan", "north-first", where));
                } catch (const LayoutError& e) {
                    fail(fmt::format("{}: {}", where, e.what()));
                }
            }
        } else {
            fail(fmt::format("{}: format must be 'archive' or 'raw'", where));
        }
        cfg.ic_sources.push_back(std::move(src));
    }

    cfg.truth_pattern = resolve(base_dir, get<std::string>(root, "truth", "top level")).string();
    cfg.climatology = resolve(base_dir, get<std::string>(root, "climatology", "top level"));

    {
        const json& b = root.contains("backend") ? root["backend"] : json::object({{"kind", "persistence"}});
        check_keys(b, "backend", {"kind", "command", "cells", "per_hours", "horizons", "require_canonical_grid"});
        const auto kind = get<std::string>(b, "kind", "backend");
        const auto horizons = get_or<std::vector<int>>(b, "horizons", {24}, "backend");
        if (kind == "persistence")
            cfg.backend = BackendSpec::persistence(horizons);
        else if (kind == "advection")
            cfg.backend = BackendSpec::advection(get<int>(b, "cells", "backend"), get_or<int>(b, "per_hours", 24, "backend"),
                                                 horizons);
        else if (kind == "external")
            cfg.backend = BackendSpec::external(get<std::string>(b, "command", "backend"), horizons);
        else
            fail(fmt::format("backend.kind '{}' is not persistence, advection or external", kind));
        cfg.backend.require_canonical_grid = get_or<bool>(b, "require_canonical_grid", true, "backend");
    }

    cfg.lead_hours = get_or<std::vector<int>>(root, "lead_hours", default_lead_hours(), "top level");

    if (root.contains("regions")) {
        if (!root["regions"].is_array()) fail("'regions' must be a list");
        for (std::size_t k = 0; k < root["regions"].size(); ++k) {
            const json& r = root["regions"][k];
            const std::string where = fmt::format("regions[{}]", k);
            check_keys(r, where, {"name", "box"});
            cfg.regions.push_back({get<std::string>(r, "name", where), box_from_json(r.at("box"), where + ".box")});
        }
    } else {
        cfg.regions = default_regions();
    }

    if (root.contains("splice_scenarios")) {
        if (!root["splice_scenarios"].is_array()) fail("'splice_scenarios' must be a list");
        for (std::size_t k = 0; k < root["splice_scenarios"].size(); ++k) {
            const json& s = root["splice_scenarios"][k];
            const std::string where = fmt::format("splice_scenarios[{}]", k);
            check_keys(s, where, {"label", "base", "donor", "region", "scope", "blend_width", "allow_time_mismatch"});
            SpliceScenario sc;
            sc.base_source = get<std::string>(s, "base", where);
            sc.donor_source = get<std::string>(s, "donor", where);
            sc.label = get_or<std::string>(s, "label", splice_label(sc.donor_source, sc.base_source), where);
            if (s.contains("region")) {
                const json& r = s["region"];
                if (r.is_string()) {
                    const auto name = r.get<std::string>();
                    auto it = std::find_if(cfg.regions.begin(), cfg.regions.end(),
                                           [&](const NamedRegion& nr) { return nr.name == name; });
                    if (it == cfg.regions.end()) fail(fmt::format("{}: unknown region '{}'", where, name));
                    sc.spec.region = it->box;
                } else {
                    sc.spec.region = box_from_json(r, where + ".region");
                }
            }
            try {
                sc.spec.scope = parse_splice_scope(get_or<std::string>(s, "scope", "upper-only", where));
            } catch (const ConfigError&) {
                throw;
            } catch (const Error& e) {
                fail(fmt::format("{}: {}", where, e.what()));
            }
            sc.spec.blend_width = get_or<double>(s, "blend_width", 0.0, where);
            sc.spec.allow_time_mismatch = get_or<bool>(s, "allow_time_mismatch", false, where);
            cfg.splice_scenarios.push_back(std::move(sc));
        }
    }

    cfg.report_channels = root.contains("report_channels")
                              ? channels_from_json(root["report_channels"], "report_channels")
                              : default_report_channels();
    cfg.output_dir = resolve(base_dir, get<std::string>(root, "output_dir", "top level"));
    if (root.contains("target_grid")) cfg.target_grid = grid_from_json(root["target_grid"], "target_grid");
    cfg.workers = get_or<std::size_t>(root, "workers", 0, "top level");

    if (root.contains("ingest")) {
        const json& in = root["ingest"];
        check_keys(in, "ingest", {"nan", "range"});
        cfg.ingest.nan_policy = policy_from(get_or<std::string>(in, "nan", "error", "ingest"), "ingest.nan");
        const auto range = get_or<std::string>(in, "range", "warn", "ingest");
        if (range == "off")
            cfg.ingest.range_limits.enabled = false;
        else
            cfg.ingest.range_policy = policy_from(range, "ingest.range");
    }
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(fmt::format("cannot read '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    auto base = path.parent_path();
    if (base.empty()) base = ".";
    return parse_config(ss.str(), base);
}

void ExperimentConfig::validate() const {
    if (name.empty()) fail("'name' is empty");
    if (ic_sources.empty()) fail("'ic_sources' is empty");
    std::set<std::string> labels;
    for (const auto& s : ic_sources) {
        if (!label_ok(s.label)) fail(fmt::format("invalid source label '{}'", s.label));
        if (!labels.insert(s.label).second) fail(fmt::format("duplicate label '{}'", s.label));
        if (!std::filesystem::exists(s.path))
            fail(fmt::format("source '{}': file '{}' does not exist", s.label, s.path.string()));
        if (s.format == SourceFormat::Raw) {
            const auto n = s.layout.resolved_channels().size();
            if (n != kChannelCount) fail(fmt::format("source '{}': raw layout lists {} channels", s.label, n));
        }
    }
    for (const auto& sc : splice_scenarios) {
        if (!label_ok(sc.label)) fail(fmt::format("invalid scenario label '{}'", sc.label));
        if (!labels.insert(sc.label).second) fail(fmt::format("duplicate label '{}'", sc.label));
        for (const auto& ref : {sc.base_source, sc.donor_source})
            if (std::none_of(ic_sources.begin(), ic_sources.end(), [&](const IcSource& s) { return s.label == ref; }))
                fail(fmt::format("scenario '{}' references unknown source '{}'", sc.label, ref));
        if (!(sc.spec.blend_width >= 0.0)) fail(fmt::format("scenario '{}': negative blend_width", sc.label));
    }
    if (truth_pattern.empty()) fail("'truth' is empty");
    if (!std::filesystem::exists(climatology))
        fail(fmt::format("climatology '{}' does not exist", climatology.string()));
    if (lead_hours.empty()) fail("'lead_hours' is empty");
    if (backend.horizons.empty()) fail("backend has no horizons");
    if (std::any_of(backend.horizons.begin(), backend.horizons.end(), [](int h) { return h <= 0; }))
        fail("backend horizons must be positive");
    const int g = std::accumulate(backend.horizons.begin(), backend.horizons.end(), 0,
                                  [](int a, int b) { return std::gcd(a, b); });
    std::set<int> seen;
    for (int lead : lead_hours) {
        if (lead <= 0) fail(fmt::format("lead {} h must be positive", lead));
        if (lead % g != 0) fail(fmt::format("lead {} h is not a multiple of the backend horizons' gcd {} h", lead, g));
        if (!seen.insert(lead).second) fail(fmt::format("lead {} h listed twice", lead));
    }
    if (backend.kind == BackendKind::External && backend.command.empty()) fail("external backend has no command");
    if (regions.empty()) fail("'regions' is empty");
    std::set<std::string> region_names;
    for (const auto& r : regions) {
        if (!label_ok(r.name)) fail(fmt::format("invalid region name '{}'", r.name));
        if (!region_names.insert(r.name).second) fail(fmt::format("duplicate region '{}'", r.name));
    }
    if (report_channels.empty()) fail("'report_channels' is empty");
    if (output_dir.empty()) fail("'output_dir' is empty");
}

}  // namespace nwp
