#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "nwp/grid.hpp"

namespace nwp::test {

/// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("nwp-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

/// 2.5 degree global grid, poles included.
inline GridSpec coarse_grid() { return {73, 144, 90.0, 2.5, 0.0, 2.5}; }

/// 10 degree global grid for fast tests.
inline GridSpec tiny_grid() { return {19, 36, 90.0, 10.0, 0.0, 10.0}; }

inline TimePoint t0() { return parse_time("2023-06-06T00:00:00Z"); }

/// Random global grid with nlat <= max_lat, nlon <= max_lon. Spacing is
/// chosen so the grid spans the globe (pole rows included when it fits).
inline GridSpec random_global_grid(std::mt19937_64& rng, std::size_t max_lat, std::size_t max_lon) {
    std::uniform_int_distribution<std::size_t> dl(2, max_lat), dn(2, max_lon);
    GridSpec g;
    g.nlat = dl(rng);
    g.nlon = dn(rng);
    g.dlat = 180.0 / static_cast<double>(g.nlat - 1);
    g.lat_start = 90.0;
    g.dlon = 360.0 / static_cast<double>(g.nlon);
    g.lon_start = 0.0;
    return g;
}

/// Random canonical-channel state with arbitrary (non-physical) values.
inline StateSet random_state(std::mt19937_64& rng, const GridSpec& g, const std::string& label = "rand") {
    std::normal_distribution<float> nd(0.0f, 100.0f);
    std::vector<std::vector<float>> planes(kChannelCount, std::vector<float>(g.size()));
    for (auto& p : planes)
        for (auto& v : p) v = nd(rng);
    std::uniform_int_distribution<std::int64_t> secs(-2'000'000'000, 4'000'000'000);
    return make_state(TimePoint{std::chrono::seconds{secs(rng)}}, label, g, std::move(planes));
}

/// Constant-valued canonical state.
inline StateSet constant_state(const GridSpec& g, float value, const std::string& label = "const") {
    std::vector<std::vector<float>> planes(kChannelCount, std::vector<float>(g.size(), value));
    return make_state(t0(), label, g, std::move(planes));
}

/// Applies fn(channel_flat, i, j, value) -> new value to every point.
template <typename Fn>
StateSet map_state(const StateSet& s, Fn&& fn) {
    std::vector<std::vector<float>> planes;
    const auto& g = s.grid();
    for (std::size_t k = 0; k < s.fields().size(); ++k) {
        const auto vals = s.fields()[k].values();
        std::vector<float> out(vals.begin(), vals.end());
        for (std::size_t i = 0; i < g.nlat; ++i)
            for (std::size_t j = 0; j < g.nlon; ++j) out[i * g.nlon + j] = fn(k, i, j, out[i * g.nlon + j]);
        planes.push_back(std::move(out));
    }
    return make_state(s.valid_time(), s.source_label(), g, std::move(planes));
}

inline double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace nwp::test
