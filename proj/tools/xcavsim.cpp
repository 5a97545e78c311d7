#include <iostream>

#include "xcav/cli.hpp"

int main(int argc, char** argv) { return xcav::cli::run(argc, argv, std::cout, std::cerr); }
