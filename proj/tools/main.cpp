#include <iostream>

#include "blochkit/cli.hpp"

int main(int argc, char** argv) {
    return blochkit::cli::run({argv + 1, argv + argc}, std::cout, std::cerr);
}
