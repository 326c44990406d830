#include <iostream>
#include <string>
#include <vector>

#include "micropump/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return micropump::run(args, std::cout, std::cerr);
}
