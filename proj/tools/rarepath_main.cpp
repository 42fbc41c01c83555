#include "rarepath/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return rarepath::cli::run(argc, argv, std::cout, std::cerr);
}
