// Stand-in for an external forecast model, speaking the subprocess protocol:
//   fake_backend [--mode M] --in <in.nws> --out <out.nws> --step-hours <H>
// Modes: persist (default), advect:<cells per 24 h>, fail, nan, garbage,
// nondet, coarsen, silent.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <unistd.h>

#include "nwp/fieldio.hpp"
#include "nwp/regrid.hpp"
#include "nwp/rollout.hpp"

int main(int argc, char** argv) {
    std::string mode = "persist", in, out;
    int hours = -1;
    for (int k = 1; k + 1 < argc; k += 2) {
        const std::string flag = argv[k];
        const std::string value = argv[k + 1];
        if (flag == "--mode") mode = value;
        else if (flag == "--in") in = value;
        else if (flag == "--out") out = value;
        else if (flag == "--step-hours") hours = std::stoi(value);
        else {
            std::cerr << "fake_backend: unknown flag " << flag << '\n';
            return 64;
        }
    }
    if (in.empty() || out.empty() || hours <= 0) {
        std::cerr << "fake_backend: missing --in/--out/--step-hours\n";
        return 64;
    }
    std::cout << "fake_backend " << mode << " step " << hours << " h\n";

    try {
        const nwp::StateSet s = nwp::read_archive(std::filesystem::path(in));
        if (mode == "fail") {
            std::cerr << "fake_backend: simulated model crash\n";
            return 3;
        }
        if (mode == "silent") return 0;
        if (mode == "garbage") {
            std::ofstream(out, std::ios::binary) << "this is not an archive";
            return 0;
        }
        nwp::StateSet next = s;
        if (mode == "persist") {
            next = nwp::builtin_step(s, nwp::BackendSpec::persistence({hours}), hours);
        } else if (mode.starts_with("advect:")) {
            next = nwp::builtin_step(s, nwp::BackendSpec::advection(std::stoi(mode.substr(7)), 24, {hours}), hours);
        } else if (mode == "nan" || mode == "nondet") {
            std::vector<std::vector<float>> planes;
            for (const auto& f : s.fields()) planes.emplace_back(f.values().begin(), f.values().end());
            if (mode == "nan")
                planes[10][0] = std::nanf("");
            else
                planes[0][0] += static_cast<float>(::getpid() % 97 + 1) +
                                static_cast<float>(std::chrono::steady_clock::now().time_since_epoch().count() % 1000);
            next = nwp::make_state(s.valid_time() + std::chrono::hours(hours), s.source_label(), s.grid(),
                                   std::move(planes));
        } else if (mode == "coarsen") {
            auto g = s.grid();
            g.nlat = (g.nlat + 1) / 2;
            g.nlon /= 2;
            g.dlat *= 2;
            g.dlon *= 2;
            next = nwp::regrid_state(s, g);
        } else {
            std::cerr << "fake_backend: unknown mode " << mode << '\n';
            return 64;
        }
        nwp::write_archive(next, std::filesystem::path(out));
    } catch (const std::exception& e) {
        std::cerr << "fake_backend: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
