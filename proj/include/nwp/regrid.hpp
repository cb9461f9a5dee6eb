#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "nwp/grid.hpp"

namespace nwp {

/// Precomputed bilinear stencils from one regular lat/lon grid to another.
class RegridPlan {
public:
    struct Stencil {
        std::array<std::uint32_t, 4> index;  // flat source indices: NW, NE, SW, SE
        std::array<double, 4> weight;
    };

    RegridPlan(GridSpec source, GridSpec destination, std::vector<Stencil> stencils);

    const GridSpec& source() const noexcept { return source_; }
    const GridSpec& destination() const noexcept { return destination_; }
    std::span<const Stencil> stencils() const noexcept { return stencils_; }
    const Stencil& at(std::size_t i, std::size_t j) const { return stencils_.at(i * destination_.nlon + j); }

private:
    GridSpec source_;
    GridSpec destination_;
    std::vector<Stencil> stencils_;
};

/// Bilinear in (lat, lon). Longitudes wrap modulo 360: the cell between the
/// last source meridian and the first one (+360) is a regular cell. Latitudes
/// poleward of the outermost source rows clamp to that row; on a regional
/// source, longitudes outside its span clamp to the nearer edge column.
RegridPlan build_plan(const GridSpec& src, const GridSpec& dst);

Field apply_plan(const RegridPlan& plan, const Field& field);

/// Regrids every channel with one shared plan; metadata is preserved.
StateSet regrid_state(const StateSet& state, const GridSpec& dst);

}  // namespace nwp
