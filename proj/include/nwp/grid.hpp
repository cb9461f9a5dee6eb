#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nwp {

using TimePoint = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DDTHH:MM:SSZ" (the trailing Z and the seconds are optional).
TimePoint parse_time(std::string_view text);
/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_time(TimePoint t);

// ---------------------------------------------------------------------------
// Grid geometry
// ---------------------------------------------------------------------------

/// Regular lat/lon grid. Row 0 is the northmost latitude, rows step south by
/// dlat; column 0 sits at lon_start and columns step east by dlon.
struct GridSpec {
    std::size_t nlat = 0;
    std::size_t nlon = 0;
    double lat_start = 90.0;
    double dlat = 0.25;
    double lon_start = 0.0;
    double dlon = 0.25;

    /// The 721x1440 0.25 degree grid consumed by the forecast model.
    static GridSpec canonical();

    std::size_t size() const noexcept { return nlat * nlon; }
    double lat_end() const noexcept { return lat_start - static_cast<double>(nlat - 1) * dlat; }
    /// True when the columns cover the full circle at spacing dlon.
    bool is_global_in_lon() const noexcept;

    /// Throws InvalidGridError when a geometric invariant is violated.
    void validate() const;

    bool operator==(const GridSpec&) const = default;
};

std::string describe(const GridSpec& grid);

struct LatLon {
    double lat;
    double lon;
};

/// Coordinates of cell (i, j); lon is reduced to [0, 360).
LatLon grid_coords(const GridSpec& grid, std::size_t i, std::size_t j);

/// Reduces a longitude to [0, 360).
double wrap_lon(double lon) noexcept;

// ---------------------------------------------------------------------------
// Variables, levels, channels
// ---------------------------------------------------------------------------

/// Numeric values double as the archive var_code.
enum class Variable : std::uint16_t { MSLP = 0, U10 = 1, V10 = 2, T2 = 3, Z = 4, Q = 5, T = 6, U = 7, V = 8 };

inline constexpr std::size_t kVariableCount = 9;

bool is_surface(Variable v) noexcept;
std::string_view variable_name(Variable v) noexcept;
std::optional<Variable> variable_from_code(std::uint16_t code) noexcept;
std::optional<Variable> variable_from_name(std::string_view name) noexcept;
/// SI unit stored internally.
std::string_view variable_unit(Variable v) noexcept;

struct PressureLevel {
    std::uint16_t hpa = 0;  // 0 = surface

    static constexpr PressureLevel surface() noexcept { return {0}; }
    constexpr bool is_surface() const noexcept { return hpa == 0; }
    auto operator<=>(const PressureLevel&) const = default;
};

/// Canonical level order, descending pressure.
inline constexpr std::array<PressureLevel, 13> kPressureLevels{{
    {1000}, {925}, {850}, {700}, {600}, {500}, {400}, {300}, {250}, {200}, {150}, {100}, {50},
}};

inline constexpr std::array<Variable, 4> kSurfaceVariables{Variable::MSLP, Variable::U10, Variable::V10,
                                                           Variable::T2};
inline constexpr std::array<Variable, 5> kUpperVariables{Variable::Z, Variable::Q, Variable::T, Variable::U,
                                                         Variable::V};

inline constexpr std::size_t kSurfaceChannels = kSurfaceVariables.size();
inline constexpr std::size_t kUpperChannels = kUpperVariables.size() * kPressureLevels.size();
inline constexpr std::size_t kChannelCount = kSurfaceChannels + kUpperChannels;

struct ChannelId {
    Variable variable = Variable::MSLP;
    PressureLevel level{};

    bool operator==(const ChannelId&) const = default;
};

enum class Block { Surface, Upper };

struct ChannelIndex {
    Block block;
    std::size_t index;

    /// Position in the flat 69-channel sequence (surface block first).
    std::size_t flat() const noexcept { return block == Block::Surface ? index : kSurfaceChannels + index; }
    bool operator==(const ChannelIndex&) const = default;
};

/// Throws InvalidChannelError for illegal (variable, level) combinations.
ChannelIndex state_channel_index(Variable variable, PressureLevel level);
inline ChannelIndex state_channel_index(ChannelId c) { return state_channel_index(c.variable, c.level); }

/// Inverse of state_channel_index(...).flat().
ChannelId channel_at(std::size_t flat);

const std::array<ChannelId, kChannelCount>& canonical_channels();

/// "MSLP", "T2", "Z500", ...
std::string channel_name(ChannelId c);
/// Inverse of channel_name; throws InvalidChannelError.
ChannelId parse_channel(std::string_view name);

/// MSLP, T2, U10, V10, Q500, T500, U500, V500, Z500.
std::vector<ChannelId> default_report_channels();

// ---------------------------------------------------------------------------
// Fields and states
// ---------------------------------------------------------------------------

/// One nlat x nlon plane of float32 values, row-major, north row first.
/// The value buffer is shared between copies and never mutated.
class Field {
public:
    Field(ChannelId channel, GridSpec grid, std::vector<float> values);

    ChannelId channel() const noexcept { return channel_; }
    Variable variable() const noexcept { return channel_.variable; }
    PressureLevel level() const noexcept { return channel_.level; }
    const GridSpec& grid() const noexcept { return grid_; }
    std::span<const float> values() const noexcept { return *values_; }
    float at(std::size_t i, std::size_t j) const;

    /// Same channel and grid, new values (size must match).
    Field with_values(std::vector<float> values) const;

private:
    ChannelId channel_;
    GridSpec grid_;
    std::shared_ptr<const std::vector<float>> values_;
};

bool bitwise_equal(const Field& a, const Field& b) noexcept;

/// A timestamped set of fields sharing one grid. A canonical state holds the
/// 69 channels in state_channel_index order; construction only enforces the
/// shared grid so that malformed states can still be inspected by
/// validate_state.
class StateSet {
public:
    StateSet(TimePoint valid_time, std::string source_label, GridSpec grid, std::vector<Field> fields);

    TimePoint valid_time() const noexcept { return valid_time_; }
    const std::string& source_label() const noexcept { return source_label_; }
    const GridSpec& grid() const noexcept { return grid_; }
    std::span<const Field> fields() const noexcept { return fields_; }

    bool is_canonical() const noexcept;
    /// Throws InvalidStateError when !is_canonical().
    void require_canonical() const;

    std::span<const Field> surface() const;
    std::span<const Field> upper() const;
    const Field& channel(ChannelId c) const;
    const Field& channel(Variable v, PressureLevel level) const { return channel({v, level}); }

    StateSet with_valid_time(TimePoint t) const;
    StateSet with_source_label(std::string label) const;

private:
    TimePoint valid_time_;
    std::string source_label_;
    GridSpec grid_;
    std::vector<Field> fields_;
};

bool bitwise_equal(const StateSet& a, const StateSet& b) noexcept;

/// Builds a canonical state from 69 planes given in canonical order.
StateSet make_state(TimePoint valid_time, std::string source_label, const GridSpec& grid,
                    std::vector<std::vector<float>> planes);

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

/// Inclusive lat/lon rectangle; no dateline crossing (lon_min <= lon_max).
struct RegionBox {
    double lat_min = -90.0;
    double lat_max = 90.0;
    double lon_min = 0.0;
    double lon_max = 360.0;

    static RegionBox global() noexcept { return {}; }
    /// 10S-60N, 60E-150E.
    static RegionBox east_asia() noexcept { return {-10.0, 60.0, 60.0, 150.0}; }

    void validate() const;
    bool operator==(const RegionBox&) const = default;
};

/// Parses "lat_min,lat_max,lon_min,lon_max".
RegionBox parse_box(std::string_view text);

struct NamedRegion {
    std::string name;
    RegionBox box;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

/// Sanity gates for ingested data. Not physical constants; adjust freely.
struct RangeLimits {
    bool enabled = true;
    double t2_min = 150.0, t2_max = 350.0;
    double mslp_min = 85000.0, mslp_max = 110000.0;
    double q_min = 0.0, q_max = 0.05;
    double wind_abs_max = 150.0;
};

enum class ViolationKind { ChannelCount, ChannelOrder, GridInvalid, GridMismatch, NonFinite, Range };

struct Violation {
    ViolationKind kind;
    std::string message;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool clean() const noexcept { return violations.empty(); }
    /// Structural or non-finite problems; range problems are soft.
    bool has_hard_errors() const noexcept;
    std::size_t count(ViolationKind kind) const noexcept;
    std::string summary() const;
};

ValidationReport validate_state(const StateSet& state, const RangeLimits& limits = {});

}  // namespace nwp
