#include <iostream>

#include "mixts_cli/cli.hpp"

int main(int argc, char** argv) { return mixts::cli::run(argc, argv, std::cout, std::cerr); }
