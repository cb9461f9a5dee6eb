#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "nwp/grid.hpp"
#include "nwp/verify.hpp"

namespace nwp {

struct RolloutPlan {
    std::vector<int> steps;  // hours

    int total_hours() const noexcept;
    /// Positive partial sums: the leads reachable along the plan.
    std::vector<int> cumulative_leads() const;
};

/// Greedy largest-first decomposition of `lead_hours` into available
/// horizons. Falls back to a minimum-step search when greedy dead-ends
/// (e.g. 27 over {24, 9}). Throws ScheduleError when no decomposition exists.
RolloutPlan schedule_steps(int lead_hours, std::span<const int> horizons);

/// Concatenates schedule_steps over the gaps between the sorted leads, so
/// every requested lead is reached. Leads must be positive and distinct.
RolloutPlan plan_through_leads(std::span<const int> leads, std::span<const int> horizons);

enum class BackendKind { External, Persistence, Advection };

struct BackendSpec {
    BackendKind kind = BackendKind::Persistence;
    /// External: invoked as `<command> --in <in.nws> --out <out.nws> --step-hours <H>`.
    std::string command;
    /// Advection: shift `advection_cells` columns east per `advection_per_hours` hours.
    int advection_cells = 0;
    int advection_per_hours = 24;
    std::vector<int> horizons{24};
    /// External backends normally need the 721x1440 model grid.
    bool require_canonical_grid = true;

    static BackendSpec persistence(std::vector<int> horizons = {24});
    static BackendSpec advection(int cells, int per_hours = 24, std::vector<int> horizons = {24});
    static BackendSpec external(std::string command, std::vector<int> horizons = {24});
};

/// "persistence", "advection:<cells>[/<per_hours>]", "external:<command>".
BackendSpec parse_backend(std::string_view text);
std::string describe(const BackendSpec& backend);

/// One step of a builtin backend; valid_time advances by step_hours.
StateSet builtin_step(const StateSet& state, const BackendSpec& backend, int step_hours);

struct RolloutOptions {
    /// Scratch directory for external-backend archives (created if missing).
    std::filesystem::path work_dir = std::filesystem::temp_directory_path() / "nwpharness-rollout";
    /// Receives progress lines and captured backend output.
    std::ostream* log = nullptr;
    /// Runs the first external step twice and warns if outputs differ.
    bool verify_determinism = false;
    bool keep_files = false;
};

/// Drives the backend along the plan and returns the states at emit_leads,
/// stamped valid_time = ic.valid_time + lead and ic's source label.
std::vector<LeadState> run_rollout(const StateSet& ic, const BackendSpec& backend, const RolloutPlan& plan,
                                   std::span<const int> emit_leads, const RolloutOptions& options = {});

/// As run_rollout, handing each emitted state to `on_emit` as soon as it is
/// produced instead of collecting the series.
void run_rollout(const StateSet& ic, const BackendSpec& backend, const RolloutPlan& plan,
                 std::span<const int> emit_leads, const std::function<void(LeadState)>& on_emit,
                 const RolloutOptions& options = {});

}  // namespace nwp
