#include "nwp/grid.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include <fmt/format.h>

#include "nwp/error.hpp"

namespace nwp {

namespace {

constexpr double kGeomEps = 1e-9;

}  // namespace

TimePoint parse_time(std::string_view text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    std::string buf(text);
    int n = std::sscanf(buf.c_str(), "%d-%d-%dT%d:%d:%d", &y, &mo, &d, &h, &mi, &s);
    if (n < 3 || (n > 3 && n < 5)) throw Error(fmt::format("invalid time '{}'", text));
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60)
        throw Error(fmt::format("invalid time '{}'", text));
    return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} + std::chrono::seconds{s};
}

std::string format_time(TimePoint t) {
    const auto day = std::chrono::floor<std::chrono::days>(t);
    const std::chrono::year_month_day ymd{day};
    const std::chrono::hh_mm_ss hms{t - day};
    return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hms.hours().count(),
                       hms.minutes().count(), hms.seconds().count());
}

// ---------------------------------------------------------------------------

GridSpec GridSpec::canonical() { return GridSpec{721, 1440, 90.0, 0.25, 0.0, 0.25}; }

bool GridSpec::is_global_in_lon() const noexcept {
    return std::abs(static_cast<double>(nlon) * dlon - 360.0) <= kGeomEps;
}

void GridSpec::validate() const {
    auto fail = [this](std::string_view why) {
        throw InvalidGridError(fmt::format("invalid grid {}: {}", describe(*this), why));
    };
    if (nlat == 0 || nlon == 0) fail("empty");
    if (!std::isfinite(lat_start) || !std::isfinite(dlat) || !std::isfinite(lon_start) || !std::isfinite(dlon))
        fail("non-finite geometry");
    if (dlat <= 0.0) fail("dlat must be positive");
    if (dlon <= 0.0) fail("dlon must be positive");
    if (lat_start > 90.0 + kGeomEps) fail("lat_start north of the pole");
    if (lat_end() < -90.0 - kGeomEps) fail("last row south of the pole");
    if (lon_start < 0.0 || lon_start >= 360.0) fail("lon_start outside [0, 360)");
    if (static_cast<double>(nlon) * dlon > 360.0 + kGeomEps) fail("longitudes overlap after wrap");
}

std::string describe(const GridSpec& g) {
    return fmt::format("{}x{} lat {}/-{} lon {}/+{}", g.nlat, g.nlon, g.lat_start, g.dlat, g.lon_start, g.dlon);
}

double wrap_lon(double lon) noexcept {
    double r = std::fmod(lon, 360.0);
    if (r < 0.0) r += 360.0;
    if (r >= 360.0) r -= 360.0;
    return r;
}

LatLon grid_coords(const GridSpec& grid, std::size_t i, std::size_t j) {
    if (i >= grid.nlat || j >= grid.nlon)
        throw IndexError(fmt::format("index ({}, {}) outside {}x{} grid", i, j, grid.nlat, grid.nlon));
    return {grid.lat_start - static_cast<double>(i) * grid.dlat,
            wrap_lon(grid.lon_start + static_cast<double>(j) * grid.dlon)};
}

// ---------------------------------------------------------------------------

bool is_surface(Variable v) noexcept {
    return v == Variable::MSLP || v == Variable::U10 || v == Variable::V10 || v == Variable::T2;
}

std::string_view variable_name(Variable v) noexcept {
    switch (v) {
        case Variable::MSLP: return "MSLP";
        case Variable::U10: return "U10";
        case Variable::V10: return "V10";
        case Variable::T2: return "T2";
        case Variable::Z: return "Z";
        case Variable::Q: return "Q";
        case Variable::T: return "T";
        case Variable::U: return "U";
        case Variable::V: return "V";
    }
    return "?";
}

std::string_view variable_unit(Variable v) noexcept {
    switch (v) {
        case Variable::MSLP: return "Pa";
        case Variable::T2:
        case Variable::T: return "K";
        case Variable::Z: return "m2/s2";
        case Variable::Q: return "kg/kg";
        default: return "m/s";
    }
}

std::optional<Variable> variable_from_code(std::uint16_t code) noexcept {
    if (code >= kVariableCount) return std::nullopt;
    return static_cast<Variable>(code);
}

std::optional<Variable> variable_from_name(std::string_view name) noexcept {
    for (std::uint16_t c = 0; c < kVariableCount; ++c) {
        auto v = static_cast<Variable>(c);
        if (variable_name(v) == name) return v;
    }
    return std::nullopt;
}

ChannelIndex state_channel_index(Variable variable, PressureLevel level) {
    if (is_surface(variable)) {
        if (!level.is_surface())
            throw InvalidChannelError(
                fmt::format("invalid channel: {} is a surface variable, got level {} hPa", variable_name(variable),
                            level.hpa));
        auto it = std::find(kSurfaceVariables.begin(), kSurfaceVariables.end(), variable);
        return {Block::Surface, static_cast<std::size_t>(it - kSurfaceVariables.begin())};
    }
    auto var_it = std::find(kUpperVariables.begin(), kUpperVariables.end(), variable);
    auto lev_it = std::find(kPressureLevels.begin(), kPressureLevels.end(), level);
    if (var_it == kUpperVariables.end() || lev_it == kPressureLevels.end())
        throw InvalidChannelError(fmt::format("invalid channel: {} at level {} hPa", variable_name(variable), level.hpa));
    const auto var_rank = static_cast<std::size_t>(var_it - kUpperVariables.begin());
    const auto level_rank = static_cast<std::size_t>(lev_it - kPressureLevels.begin());
    return {Block::Upper, var_rank * kPressureLevels.size() + level_rank};
}

const std::array<ChannelId, kChannelCount>& canonical_channels() {
    static const auto table = [] {
        std::array<ChannelId, kChannelCount> t{};
        std::size_t k = 0;
        for (auto v : kSurfaceVariables) t[k++] = {v, PressureLevel::surface()};
        for (auto v : kUpperVariables)
            for (auto lev : kPressureLevels) t[k++] = {v, lev};
        return t;
    }();
    return table;
}

ChannelId channel_at(std::size_t flat) {
    if (flat >= kChannelCount) throw IndexError(fmt::format("channel index {} out of range", flat));
    return canonical_channels()[flat];
}

std::string channel_name(ChannelId c) {
    if (c.level.is_surface()) return std::string(variable_name(c.variable));
    return fmt::format("{}{}", variable_name(c.variable), c.level.hpa);
}

ChannelId parse_channel(std::string_view name) {
    if (auto v = variable_from_name(name); v && is_surface(*v)) return {*v, PressureLevel::surface()};
    // Upper-air names are a single letter followed by the level.
    if (name.size() >= 2) {
        if (auto v = variable_from_name(name.substr(0, 1)); v && !is_surface(*v)) {
            unsigned hpa = 0;
            for (char ch : name.substr(1)) {
                if (ch < '0' || ch > '9' || hpa > 10000) throw InvalidChannelError(fmt::format("invalid channel '{}'", name));
                hpa = hpa * 10 + static_cast<unsigned>(ch - '0');
            }
            ChannelId id{*v, PressureLevel{static_cast<std::uint16_t>(hpa)}};
            state_channel_index(id);
            return id;
        }
    }
    throw InvalidChannelError(fmt::format("invalid channel '{}'", name));
}

std::vector<ChannelId> default_report_channels() {
    const PressureLevel p500{500};
    return {{Variable::MSLP, PressureLevel::surface()},
            {Variable::T2, PressureLevel::surface()},
            {Variable::U10, PressureLevel::surface()},
            {Variable::V10, PressureLevel::surface()},
            {Variable::Q, p500},
            {Variable::T, p500},
            {Variable::U, p500},
            {Variable::V, p500},
            {Variable::Z, p500}};
}

// ---------------------------------------------------------------------------

Field::Field(ChannelId channel, GridSpec grid, std::vector<float> values)
    : channel_(channel), grid_(grid) {
    if (values.size() != grid.size())
        throw InvalidStateError(fmt::format("field {} has {} values, grid needs {}", channel_name(channel), values.size(),
                                            grid.size()));
    values_ = std::make_shared<const std::vector<float>>(std::move(values));
}

float Field::at(std::size_t i, std::size_t j) const {
    if (i >= grid_.nlat || j >= grid_.nlon) throw IndexError(fmt::format("index ({}, {}) outside field", i, j));
    return (*values_)[i * grid_.nlon + j];
}

Field Field::with_values(std::vector<float> values) const { return Field(channel_, grid_, std::move(values)); }

bool bitwise_equal(const Field& a, const Field& b) noexcept {
    if (!(a.channel() == b.channel()) || !(a.grid() == b.grid())) return false;
    auto va = a.values();
    auto vb = b.values();
    return va.size() == vb.size() && (va.data() == vb.data() || std::memcmp(va.data(), vb.data(), va.size_bytes()) == 0);
}

StateSet::StateSet(TimePoint valid_time, std::string source_label, GridSpec grid, std::vector<Field> fields)
    : valid_time_(valid_time), source_label_(std::move(source_label)), grid_(grid), fields_(std::move(fields)) {
    for (const auto& f : fields_) {
        if (!(f.grid() == grid_))
            throw GridMismatchError(fmt::format("field {} is on grid {}, state grid is {}", channel_name(f.channel()),
                                                describe(f.grid()), describe(grid_)));
    }
}

bool StateSet::is_canonical() const noexcept {
    if (fields_.size() != kChannelCount) return false;
    const auto& order = canonical_channels();
    for (std::size_t k = 0; k < kChannelCount; ++k)
        if (!(fields_[k].channel() == order[k])) return false;
    return true;
}

void StateSet::require_canonical() const {
    if (fields_.size() != kChannelCount)
        throw InvalidStateError(fmt::format("state '{}' has {} channels, expected {}", source_label_, fields_.size(),
                                            kChannelCount));
    if (!is_canonical()) throw InvalidStateError(fmt::format("state '{}' is not in canonical channel order", source_label_));
}

std::span<const Field> StateSet::surface() const {
    require_canonical();
    return std::span<const Field>(fields_).first(kSurfaceChannels);
}

std::span<const Field> StateSet::upper() const {
    require_canonical();
    return std::span<const Field>(fields_).subspan(kSurfaceChannels);
}

const Field& StateSet::channel(ChannelId c) const {
    require_canonical();
    return fields_[state_channel_index(c).flat()];
}

StateSet StateSet::with_valid_time(TimePoint t) const {
    StateSet s = *this;
    s.valid_time_ = t;
    return s;
}

StateSet StateSet::with_source_label(std::string label) const {
    StateSet s = *this;
    s.source_label_ = std::move(label);
    return s;
}

bool bitwise_equal(const StateSet& a, const StateSet& b) noexcept {
    if (a.valid_time() != b.valid_time() || a.source_label() != b.source_label() || !(a.grid() == b.grid()))
        return false;
    if (a.fields().size() != b.fields().size()) return false;
    for (std::size_t k = 0; k < a.fields().size(); ++k)
        if (!bitwise_equal(a.fields()[k], b.fields()[k])) return false;
    return true;
}

StateSet make_state(TimePoint valid_time, std::string source_label, const GridSpec& grid,
                    std::vector<std::vector<float>> planes) {
    if (planes.size() != kChannelCount)
        throw InvalidStateError(fmt::format("make_state needs {} planes, got {}", kChannelCount, planes.size()));
    std::vector<Field> fields;
    fields.reserve(kChannelCount);
    for (std::size_t k = 0; k < kChannelCount; ++k) fields.emplace_back(channel_at(k), grid, std::move(planes[k]));
    return StateSet(valid_time, std::move(source_label), grid, std::move(fields));
}

// ---------------------------------------------------------------------------

void RegionBox::validate() const {
    const bool ok = std::isfinite(lat_min) && std::isfinite(lat_max) && std::isfinite(lon_min) &&
                    std::isfinite(lon_max) && -90.0 <= lat_min && lat_min <= lat_max && lat_max <= 90.0 &&
                    0.0 <= lon_min && lon_min <= lon_max && lon_max <= 360.0;
    if (!ok)
        throw Error(fmt::format("invalid region box [{}, {}] x [{}, {}]", lat_min, lat_max, lon_min, lon_max));
}

RegionBox parse_box(std::string_view text) {
    std::string buf(text);
    std::erase_if(buf, [](unsigned char c) { return std::isspace(c) != 0; });
    RegionBox box;
    char tail = 0;
    if (std::sscanf(buf.c_str(), "%lf,%lf,%lf,%lf%c", &box.lat_min, &box.lat_max, &box.lon_min, &box.lon_max, &tail) != 4)
        throw Error(fmt::format("invalid box '{}', expected lat_min,lat_max,lon_min,lon_max", text));
    box.validate();
    return box;
}

// ---------------------------------------------------------------------------

bool ValidationReport::has_hard_errors() const noexcept {
    return std::any_of(violations.begin(), violations.end(),
                       [](const Violation& v) { return v.kind != ViolationKind::Range; });
}

std::size_t ValidationReport::count(ViolationKind kind) const noexcept {
    return static_cast<std::size_t>(
        std::count_if(violations.begin(), violations.end(), [kind](const Violation& v) { return v.kind == kind; }));
}

std::string ValidationReport::summary() const {
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v.message;
    }
    return out;
}

namespace {

std::optional<std::pair<double, double>> range_for(Variable v, const RangeLimits& lim) {
    switch (v) {
        case Variable::T2: return std::pair{lim.t2_min, lim.t2_max};
        case Variable::MSLP: return std::pair{lim.mslp_min, lim.mslp_max};
        case Variable::Q: return std::pair{lim.q_min, lim.q_max};
        case Variable::U10:
        case Variable::V10:
        case Variable::U:
        case Variable::V: return std::pair{-lim.wind_abs_max, lim.wind_abs_max};
        default: return std::nullopt;
    }
}

}  // namespace

ValidationReport validate_state(const StateSet& state, const RangeLimits& limits) {
    ValidationReport report;
    auto add = [&report](ViolationKind kind, std::string msg) { report.violations.push_back({kind, std::move(msg)}); };

    try {
        state.grid().validate();
    } catch (const InvalidGridError& e) {
        add(ViolationKind::GridInvalid, e.what());
    }
    if (state.fields().size() != kChannelCount) {
        add(ViolationKind::ChannelCount,
            fmt::format("channel count {} (expected {})", state.fields().size(), kChannelCount));
    } else if (!state.is_canonical()) {
        add(ViolationKind::ChannelOrder, "channels not in canonical order");
    }

    for (const auto& f : state.fields()) {
        const std::string name = channel_name(f.channel());
        if (!(f.grid() == state.grid())) add(ViolationKind::GridMismatch, fmt::format("{}: grid differs from state", name));

        std::size_t non_finite = 0, out_of_range = 0;
        float lo = std::numeric_limits<float>::infinity(), hi = -lo;
        const auto range = limits.enabled ? range_for(f.variable(), limits) : std::nullopt;
        for (float x : f.values()) {
            if (!std::isfinite(x)) {
                ++non_finite;
                continue;
            }
            if (range && (x < range->first || x > range->second)) {
                ++out_of_range;
                lo = std::min(lo, x);
                hi = std::max(hi, x);
            }
        }
        if (non_finite > 0) add(ViolationKind::NonFinite, fmt::format("{}: {} non-finite values", name, non_finite));
        if (out_of_range > 0)
            add(ViolationKind::Range, fmt::format("{}: {} values outside [{}, {}] {} (seen {}..{})", name, out_of_range,
                                                  range->first, range->second, variable_unit(f.variable()), lo, hi));
    }
    return report;
}

}  // namespace nwp
