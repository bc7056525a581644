#include <iostream>

#include "versa/cli/commands.hpp"

int main(int argc, char** argv) { return versa::cli::run_cli(argc, argv, std::cout, std::cerr); }
