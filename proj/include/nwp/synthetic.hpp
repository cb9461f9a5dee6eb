#pragma once

#include <cstdint>

#include "nwp/grid.hpp"

namespace nwp {

/// Smooth zonal-mean-like structure for all 69 channels, inside the default
/// RangeLimits. Used as the anomaly climatology in tests and demos.
StateSet synthetic_climatology(const GridSpec& grid, TimePoint valid_time = {});

/// Climatology plus seeded large-scale anomalies. Always inside the default
/// RangeLimits; distinct seeds give distinct states.
StateSet synthetic_state(const GridSpec& grid, TimePoint valid_time, std::string label, std::uint64_t seed);

/// Adds independent Gaussian noise per point with a per-variable scale
/// multiplied by `amplitude`. Q is kept non-negative.
StateSet add_noise(const StateSet& state, std::uint64_t seed, double amplitude = 1.0);

}  // namespace nwp
