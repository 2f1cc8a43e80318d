#include <iostream>

#include "sparsepick/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return sparsepick::cli::run(args, std::cout, std::cerr);
}
