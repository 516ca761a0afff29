#include <iostream>
#include <string>
#include <vector>

#include "semdepth/cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return semdepth::run_cli(args, std::cout, std::cerr).exit_code;
}
