#pragma once

#include <cstdint>
#include <vector>

#include "nwp/grid.hpp"

namespace nwp {

/// nlat x nlon boolean mask, row-major.
struct Mask {
    GridSpec grid;
    std::vector<std::uint8_t> cells;

    bool at(std::size_t i, std::size_t j) const { return cells.at(i * grid.nlon + j) != 0; }
    std::size_t count() const noexcept;
};

/// Grid points with lat in [lat_min, lat_max] and lon in [lon_min, lon_max],
/// bounds inclusive. Longitude 0 also matches a box ending at 360.
Mask region_mask(const GridSpec& grid, const RegionBox& box);

/// Rectangular-degree distance from a point to the box: the larger of the
/// latitude and (wrapped) longitude distances; 0 inside.
double box_distance(const RegionBox& box, double lat, double lon) noexcept;

enum class SpliceScope { UpperOnly, AllChannels };

SpliceScope parse_splice_scope(std::string_view text);
std::string_view splice_scope_name(SpliceScope s) noexcept;

struct SpliceSpec {
    RegionBox region = RegionBox::east_asia();
    SpliceScope scope = SpliceScope::UpperOnly;
    /// 0 = hard splice.
    double blend_width = 0.0;
    bool allow_time_mismatch = false;
};

/// Label of a spliced state: "<donor>pad<base>".
std::string splice_label(std::string_view donor, std::string_view base);

/// Replaces the in-scope channels of `base` inside the box with `donor`,
/// feathering linearly over `blend_width` degrees outside the box.
StateSet splice_states(const StateSet& base, const StateSet& donor, const SpliceSpec& spec);

}  // namespace nwp
