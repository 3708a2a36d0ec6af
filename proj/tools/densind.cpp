#include <iostream>

#include "densind/cli/commands.hpp"

int main(int argc, char** argv) { return densind::cli::run_cli(argc, argv, std::cout, std::cerr); }
