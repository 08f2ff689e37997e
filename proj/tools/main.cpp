#include "xmsmo/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return xmsmo::cli::run(argc, argv, std::cout, std::cerr); }
