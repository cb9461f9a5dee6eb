#include <iostream>
#include <string>
#include <vector>

#include "nwp/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return nwp::run_cli(args, std::cout, std::cerr);
}
