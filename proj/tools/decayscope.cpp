#include <iostream>

#include "dscope/cli.hpp"

int main(int argc, char** argv) { return dscope::cli::run_cli(argc, argv, std::cout, std::cerr); }
