#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "nwp/fieldio.hpp"
#include "nwp/grid.hpp"
#include "nwp/rollout.hpp"
#include "nwp/splice.hpp"

namespace nwp {

inline constexpr int kConfigSchemaVersion = 1;

enum class SourceFormat { Archive, Raw };

struct IcSource {
    std::string label;
    std::filesystem::path path;
    SourceFormat format = SourceFormat::Archive;
    GridSpec grid;         // raw only
    RawDumpLayout layout;  // raw only
};

struct SpliceScenario {
    std::string label;
    std::string base_source;
    std::string donor_source;
    SpliceSpec spec;
};

/// Declarative run matrix. See README.md for the JSON schema.
struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::string name;
    TimePoint init_time{};
    std::vector<IcSource> ic_sources;
    /// Truth archive per lead; "{lead}" and "{lead:03}" are substituted.
    std::string truth_pattern;
    std::filesystem::path climatology;
    BackendSpec backend;
    std::vector<int> lead_hours;
    std::vector<NamedRegion> regions;
    std::vector<SpliceScenario> splice_scenarios;
    std::vector<ChannelId> report_channels;
    std::filesystem::path output_dir;
    GridSpec target_grid = GridSpec::canonical();
    /// 0 = NWP_WORKERS from the environment, else hardware concurrency.
    std::size_t workers = 0;
    IngestOptions ingest;

    /// Throws ConfigError on the first problem found.
    void validate() const;
};

std::vector<int> default_lead_hours();

/// Parses JSON config text; relative paths resolve against base_dir.
ExperimentConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string expand_lead_pattern(std::string_view pattern, int lead_hours);

/// "canonical" or "nlat,nlon,lat_start,dlat,lon_start,dlon".
GridSpec parse_grid(std::string_view text);

/// Worker count from NWP_WORKERS, falling back to hardware concurrency.
std::size_t default_worker_count();

}  // namespace nwp
