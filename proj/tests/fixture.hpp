#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nwp/fieldio.hpp"
#include "nwp/synthetic.hpp"
#include "support.hpp"

namespace nwp::test {

/// On-disk experiment: a static synthetic truth written for every lead,
/// a climatology, and noisy copies of the truth as initial conditions.
struct ExperimentFixture {
    std::filesystem::path root;
    GridSpec grid;
    TimePoint init;
    StateSet truth;
    std::vector<std::string> sources;

    ExperimentFixture(const std::filesystem::path& dir, GridSpec g, std::vector<std::string> labels,
                      std::vector<int> leads = {24, 48, 72, 96, 120, 144, 168, 192, 216, 240})
        : root(dir), grid(g), init(t0()), truth(synthetic_state(g, t0(), "era5", 42)), sources(std::move(labels)) {
        std::filesystem::create_directories(root / "truth");
        write_archive(synthetic_climatology(g, init), root / "clim.nws");
        for (int lead : leads)
            write_archive(truth.with_valid_time(init + std::chrono::hours(lead)),
                          root / "truth" / fmt_lead(lead));
        for (std::size_t k = 0; k < sources.size(); ++k)
            write_archive(add_noise(truth, 100 + k, 1.0).with_source_label(sources[k]), root / (sources[k] + ".nws"));
    }

    static std::string fmt_lead(int lead) {
        std::string s = std::to_string(lead);
        while (s.size() < 3) s = "0" + s;
        return "era5_" + s + "h.nws";
    }

    /// Config JSON with relative paths, so it is valid from `root`.
    nlohmann::ordered_json config(const std::string& out = "out") const {
        nlohmann::ordered_json j;
        j["schema_version"] = 1;
        j["name"] = "fixture";
        j["init_time"] = format_time(init);
        j["ic_sources"] = nlohmann::ordered_json::array();
        for (const auto& s : sources) j["ic_sources"].push_back({{"label", s}, {"path", s + ".nws"}});
        j["truth"] = "truth/era5_{lead:03}h.nws";
        j["climatology"] = "clim.nws";
        j["backend"] = {{"kind", "persistence"}};
        j["regions"] = nlohmann::ordered_json::array(
            {{{"name", "global"}, {"box", {-90, 90, 0, 360}}}, {{"name", "east_asia"}, {"box", {-10, 60, 60, 150}}}});
        j["output_dir"] = out;
        j["target_grid"] = {{"nlat", grid.nlat},         {"nlon", grid.nlon}, {"lat_start", grid.lat_start},
                            {"dlat", grid.dlat},         {"lon_start", grid.lon_start}, {"dlon", grid.dlon}};
        return j;
    }

    std::filesystem::path write_config(const nlohmann::ordered_json& j, const std::string& name = "exp.json") const {
        const auto p = root / name;
        spit(p, j.dump(2) + "\n");
        return p;
    }
};

}  // namespace nwp::test
