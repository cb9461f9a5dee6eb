#include "nwp/regrid.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include <fmt/format.h>

#include "nwp/error.hpp"
#include "parallel.hpp"

namespace nwp {

namespace {

constexpr double kSnap = 1e-9;

double snap(double x) {
    const double r = std::round(x);
    return std::abs(x - r) < kSnap ? r : x;
}

struct Bracket {
    std::uint32_t lo;
    std::uint32_t hi;
    double t;  // weight of `hi`
};

Bracket lat_bracket(const GridSpec& src, double lat) {
    const double r = snap((src.lat_start - lat) / src.dlat);
    const auto last = static_cast<std::uint32_t>(src.nlat - 1);
    if (r <= 0.0) return {0, 0, 0.0};
    if (r >= static_cast<double>(last)) return {last, last, 0.0};
    const auto k0 = static_cast<std::uint32_t>(std::floor(r));
    return {k0, k0 + 1, r - k0};
}

Bracket lon_bracket(const GridSpec& src, double lon) {
    const auto last = static_cast<std::uint32_t>(src.nlon - 1);
    double offset = wrap_lon(lon - src.lon_start);
    if (360.0 - offset < kSnap) offset = 0.0;
    const double p = snap(offset / src.dlon);
    if (p <= static_cast<double>(last)) {
        const auto j0 = static_cast<std::uint32_t>(std::floor(p));
        if (j0 >= last) return {last, 0, 0.0};
        return {j0, j0 + 1, p - j0};
    }
    const double last_offset = static_cast<double>(last) * src.dlon;
    const double gap = 360.0 - last_offset;
    if (!src.is_global_in_lon()) {
        // Regional source: clamp to the nearer edge column.
        return offset - last_offset <= gap / 2.0 ? Bracket{last, last, 0.0} : Bracket{0, 0, 0.0};
    }
    // Wrap cell between the last meridian and the first one + 360.
    double t = (offset - last_offset) / gap;
    if (t >= 1.0 - kSnap) return {0, 0, 0.0};
    return {last, 0, t};
}

}  // namespace

RegridPlan::RegridPlan(GridSpec source, GridSpec destination, std::vector<Stencil> stencils)
    : source_(source), destination_(destination), stencils_(std::move(stencils)) {
    if (stencils_.size() != destination_.size())
        throw Error(fmt::format("regrid plan has {} stencils for {} destination points", stencils_.size(),
                                destination_.size()));
}

RegridPlan build_plan(const GridSpec& src, const GridSpec& dst) {
    src.validate();
    dst.validate();
    if (src.nlat < 2 || src.nlon < 2)
        throw InvalidGridError(fmt::format("degenerate source grid {}: need at least 2 rows and 2 columns", describe(src)));
    if (src.size() > std::numeric_limits<std::uint32_t>::max())
        throw InvalidGridError("source grid too large for 32-bit stencil indices");

    std::vector<RegridPlan::Stencil> stencils(dst.size());
    if (src == dst) {
        for (std::size_t k = 0; k < dst.size(); ++k) {
            const auto idx = static_cast<std::uint32_t>(k);
            stencils[k] = {{idx, idx, idx, idx}, {1.0, 0.0, 0.0, 0.0}};
        }
        return RegridPlan(src, dst, std::move(stencils));
    }

    std::vector<Bracket> rows(dst.nlat), cols(dst.nlon);
    for (std::size_t i = 0; i < dst.nlat; ++i) rows[i] = lat_bracket(src, grid_coords(dst, i, 0).lat);
    for (std::size_t j = 0; j < dst.nlon; ++j) cols[j] = lon_bracket(src, grid_coords(dst, 0, j).lon);

    const auto nlon = static_cast<std::uint32_t>(src.nlon);
    for (std::size_t i = 0; i < dst.nlat; ++i) {
        const Bracket& r = rows[i];
        for (std::size_t j = 0; j < dst.nlon; ++j) {
            const Bracket& c = cols[j];
            auto& s = stencils[i * dst.nlon + j];
            s.index = {r.lo * nlon + c.lo, r.lo * nlon + c.hi, r.hi * nlon + c.lo, r.hi * nlon + c.hi};
            s.weight = {(1.0 - r.t) * (1.0 - c.t), (1.0 - r.t) * c.t, r.t * (1.0 - c.t), r.t * c.t};
        }
    }
    return RegridPlan(src, dst, std::move(stencils));
}

Field apply_plan(const RegridPlan& plan, const Field& field) {
    if (!(field.grid() == plan.source()))
        throw GridMismatchError(fmt::format("field {} is on {}, plan expects {}", channel_name(field.channel()),
                                            describe(field.grid()), describe(plan.source())));
    const auto src = field.values();
    std::vector<float> out(plan.destination().size());
    const auto stencils = plan.stencils();
    for (std::size_t k = 0; k < out.size(); ++k) {
        const auto& s = stencils[k];
        double acc = 0.0;
        for (std::size_t q = 0; q < 4; ++q)
            if (s.weight[q] != 0.0) acc += s.weight[q] * static_cast<double>(src[s.index[q]]);
        out[k] = static_cast<float>(acc);
    }
    return Field(field.channel(), plan.destination(), std::move(out));
}

StateSet regrid_state(const StateSet& state, const GridSpec& dst) {
    if (state.grid() == dst) return state;
    const RegridPlan plan = build_plan(state.grid(), dst);
    const auto in = state.fields();
    std::vector<std::optional<Field>> slots(in.size());
    detail::parallel_for(in.size(), detail::default_workers(),
                         [&](std::size_t k) { slots[k].emplace(apply_plan(plan, in[k])); });
    std::vector<Field> out;
    out.reserve(in.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return StateSet(state.valid_time(), state.source_label(), dst, std::move(out));
}

}  // namespace nwp
