#include "nwp/splice.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nwp/error.hpp"

namespace nwp {

namespace {

constexpr double kEdgeEps = 1e-9;

bool lon_in_box(const RegionBox& box, double lon) noexcept {
    return (lon >= box.lon_min - kEdgeEps && lon <= box.lon_max + kEdgeEps) ||
           (lon + 360.0 >= box.lon_min - kEdgeEps && lon + 360.0 <= box.lon_max + kEdgeEps);
}

double interval_distance(double x, double lo, double hi) noexcept {
    if (x < lo - kEdgeEps) return lo - x;
    if (x > hi + kEdgeEps) return x - hi;
    return 0.0;
}

}  // namespace

std::size_t Mask::count() const noexcept {
    return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

Mask region_mask(const GridSpec& grid, const RegionBox& box) {
    box.validate();
    Mask mask{grid, std::vector<std::uint8_t>(grid.size(), 0)};
    for (std::size_t i = 0; i < grid.nlat; ++i) {
        const double lat = grid_coords(grid, i, 0).lat;
        if (lat < box.lat_min - kEdgeEps || lat > box.lat_max + kEdgeEps) continue;
        for (std::size_t j = 0; j < grid.nlon; ++j)
            if (lon_in_box(box, grid_coords(grid, i, j).lon)) mask.cells[i * grid.nlon + j] = 1;
    }
    return mask;
}

double box_distance(const RegionBox& box, double lat, double lon) noexcept {
    const double dlat = interval_distance(lat, box.lat_min, box.lat_max);
    const double l = wrap_lon(lon);
    double dlon = std::min({interval_distance(l, box.lon_min, box.lon_max),
                            interval_distance(l + 360.0, box.lon_min, box.lon_max),
                            interval_distance(l - 360.0, box.lon_min, box.lon_max)});
    return std::max(dlat, dlon);
}

SpliceScope parse_splice_scope(std::string_view text) {
    if (text == "upper-only") return SpliceScope::UpperOnly;
    if (text == "all-channels") return SpliceScope::AllChannels;
    throw Error(fmt::format("unknown splice scope '{}' (expected upper-only or all-channels)", text));
}

std::string_view splice_scope_name(SpliceScope s) noexcept {
    return s == SpliceScope::UpperOnly ? "upper-only" : "all-channels";
}

std::string splice_label(std::string_view donor, std::string_view base) {
    return fmt::format("{}pad{}", donor, base);
}

StateSet splice_states(const StateSet& base, const StateSet& donor, const SpliceSpec& spec) {
    base.require_canonical();
    donor.require_canonical();
    spec.region.validate();
    if (!(spec.blend_width >= 0.0) || !std::isfinite(spec.blend_width))
        throw Error(fmt::format("blend width must be a finite non-negative number, got {}", spec.blend_width));
    if (!(base.grid() == donor.grid()))
        throw GridMismatchError(fmt::format("splice grids differ: base {}, donor {}", describe(base.grid()),
                                            describe(donor.grid())));
    if (base.valid_time() != donor.valid_time() && !spec.allow_time_mismatch)
        throw TimeMismatchError(fmt::format("splice valid times differ: base {}, donor {}", format_time(base.valid_time()),
                                            format_time(donor.valid_time())));

    const GridSpec& grid = base.grid();
    // Donor weight per point: 1 inside, linear ramp to 0 at blend_width.
    std::vector<double> alpha(grid.size(), 0.0);
    for (std::size_t i = 0; i < grid.nlat; ++i)
        for (std::size_t j = 0; j < grid.nlon; ++j) {
            const auto ll = grid_coords(grid, i, j);
            const bool inside = ll.lat >= spec.region.lat_min - kEdgeEps && ll.lat <= spec.region.lat_max + kEdgeEps &&
                                lon_in_box(spec.region, ll.lon);
            double a = 0.0;
            if (inside) {
                a = 1.0;
            } else if (spec.blend_width > 0.0) {
                const double d = box_distance(spec.region, ll.lat, ll.lon);
                if (d < spec.blend_width) a = 1.0 - d / spec.blend_width;
            }
            alpha[i * grid.nlon + j] = a;
        }

    std::vector<Field> out;
    out.reserve(kChannelCount);
    for (std::size_t k = 0; k < kChannelCount; ++k) {
        const Field& b = base.fields()[k];
        const bool in_scope = spec.scope == SpliceScope::AllChannels || !b.level().is_surface();
        if (!in_scope) {
            out.push_back(b);
            continue;
        }
        const auto bv = b.values();
        const auto dv = donor.fields()[k].values();
        std::vector<float> values(bv.begin(), bv.end());
        for (std::size_t p = 0; p < values.size(); ++p) {
            const double a = alpha[p];
            if (a == 1.0)
                values[p] = dv[p];
            else if (a > 0.0)
                values[p] = static_cast<float>(a * dv[p] + (1.0 - a) * bv[p]);
        }
        out.push_back(b.with_values(std::move(values)));
    }
    return StateSet(base.valid_time(), splice_label(donor.source_label(), base.source_label()), grid, std::move(out));
}

}  // namespace nwp
