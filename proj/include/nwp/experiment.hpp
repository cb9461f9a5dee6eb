#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "nwp/config.hpp"
#include "nwp/verify.hpp"

namespace nwp {

struct RunOutcome {
    std::string label;
    bool ok = false;
    /// Set when the run aborted (ingest, splice or rollout failure).
    std::string error;
    /// Leads (or channel/region pairs) that could not be scored.
    std::vector<LeadError> lead_errors;
    std::size_t records = 0;
    std::filesystem::path log_path;
};

struct RunReport {
    std::filesystem::path csv_path;
    std::vector<RunOutcome> runs;
    std::vector<std::filesystem::path> plots;
    std::filesystem::path config_snapshot;
    std::string config_hash;
    std::size_t rows = 0;

    bool all_ok() const noexcept;
};

/// Runs every IC source and splice scenario (ingest, regrid, splice,
/// rollout, evaluate), then writes metrics.csv, the plots, a byte copy of
/// the config and report.json into cfg.output_dir. Per-run failures are
/// recorded in the report; config problems throw ConfigError up front.
RunReport run_experiment(const ExperimentConfig& cfg, std::string_view config_text);
RunReport run_experiment(const std::filesystem::path& config_path);

}  // namespace nwp
