#include "citysplat/cli/commands.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return citysplat::cli::run_cli(argc, argv, std::cout, std::cerr);
}
