#include <iostream>
#include <string>
#include <vector>

#include "ecgode/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ecgode::run_cli(args, std::cout, std::cerr);
}
