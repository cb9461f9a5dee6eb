#include "nwp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace nwp {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double base_value(ChannelId c, double lat, double lon) {
    const double phi = lat * kDeg;
    const double lam = lon * kDeg;
    const double s2 = std::sin(phi) * std::sin(phi);
    const double cphi = std::cos(phi);
    const double p = c.level.hpa / 1000.0;
    switch (c.variable) {
        case Variable::MSLP: return 101325.0 + 1200.0 * std::cos(2.0 * phi) + 600.0 * std::sin(lam) * cphi;
        case Variable::U10: return 8.0 * std::cos(3.0 * phi);
        case Variable::V10: return 4.0 * std::sin(lam) * cphi;
        case Variable::T2: return 300.0 - 50.0 * s2 + 3.0 * std::cos(lam) * cphi;
        case Variable::Z: return 9.80665 * (8000.0 * std::log(1.01325 / p) - 400.0 * s2);
        case Variable::Q: return 0.018 * cphi * cphi * p * p * p + 1e-6;
        case Variable::T: return 290.0 * std::pow(p, 0.19) - 30.0 * s2;
        case Variable::U: return 10.0 + 25.0 * (1.0 - p) * std::cos(2.0 * phi);
        case Variable::V: return 5.0 * std::sin(2.0 * lam) * cphi;
    }
    return 0.0;
}

/// Amplitude of the seeded anomaly; Q uses a relative amplitude.
double anomaly_scale(ChannelId c) {
    switch (c.variable) {
        case Variable::MSLP: return 500.0;
        case Variable::T2: return 2.0;
        case Variable::Z: return 300.0;
        case Variable::Q: return 0.3;
        case Variable::T: return 2.0;
        default: return 3.0;
    }
}

double noise_scale(ChannelId c) {
    switch (c.variable) {
        case Variable::MSLP: return 100.0;
        case Variable::T2: return 1.0;
        case Variable::Z: return 50.0;
        case Variable::Q: return 1e-4;
        case Variable::T: return 0.5;
        default: return 1.0;
    }
}

std::vector<std::vector<float>> base_planes(const GridSpec& grid) {
    std::vector<std::vector<float>> planes(kChannelCount, std::vector<float>(grid.size()));
    for (std::size_t k = 0; k < kChannelCount; ++k) {
        const ChannelId c = channel_at(k);
        for (std::size_t i = 0; i < grid.nlat; ++i)
            for (std::size_t j = 0; j < grid.nlon; ++j) {
                const auto ll = grid_coords(grid, i, j);
                planes[k][i * grid.nlon + j] = static_cast<float>(base_value(c, ll.lat, ll.lon));
            }
    }
    return planes;
}

}  // namespace

StateSet synthetic_climatology(const GridSpec& grid, TimePoint valid_time) {
    grid.validate();
    return make_state(valid_time, "climatology", grid, base_planes(grid));
}

StateSet synthetic_state(const GridSpec& grid, TimePoint valid_time, std::string label, std::uint64_t seed) {
    grid.validate();
    auto planes = base_planes(grid);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

    for (std::size_t k = 0; k < kChannelCount; ++k) {
        const ChannelId c = channel_at(k);
        // Three low-order waves, normalised so |w| <= 1.
        struct Wave { double amp, m, n, ph; };
        std::array<Wave, 3> waves{};
        double total = 0.0;
        for (std::size_t w = 0; w < waves.size(); ++w) {
            waves[w] = {unit(rng), static_cast<double>(w + 1), static_cast<double>(2 * w + 1), phase(rng)};
            total += std::abs(waves[w].amp);
        }
        const double scale = anomaly_scale(c) / std::max(total, 1e-12);
        for (std::size_t i = 0; i < grid.nlat; ++i)
            for (std::size_t j = 0; j < grid.nlon; ++j) {
                const auto ll = grid_coords(grid, i, j);
                double w = 0.0;
                for (const auto& wave : waves)
                    w += wave.amp * std::cos(wave.m * ll.lon * kDeg + wave.ph) * std::cos(wave.n * ll.lat * kDeg * 0.5);
                float& v = planes[k][i * grid.nlon + j];
                if (c.variable == Variable::Q)
                    v = static_cast<float>(v * (1.0 + scale * w));
                else
                    v = static_cast<float>(v + scale * w);
            }
    }
    return make_state(valid_time, std::move(label), grid, std::move(planes));
}

StateSet add_noise(const StateSet& state, std::uint64_t seed, double amplitude) {
    state.require_canonical();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Field> out;
    out.reserve(kChannelCount);
    for (const auto& f : state.fields()) {
        const double sigma = noise_scale(f.channel()) * amplitude;
        std::vector<float> values(f.values().begin(), f.values().end());
        for (auto& v : values) {
            double x = v + sigma * normal(rng);
            if (f.variable() == Variable::Q) x = std::max(x, 0.0);
            v = static_cast<float>(x);
        }
        out.push_back(f.with_values(std::move(values)));
    }
    return StateSet(state.valid_time(), state.source_label(), state.grid(), std::move(out));
}

}  // namespace nwp
