#include <iostream>

#include "selfsim/cli.hpp"

int main(int argc, char** argv) { return selfsim::cli::run_cli(argc, argv, std::cout, std::cerr); }
