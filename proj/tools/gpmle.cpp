#include <iostream>

#include "gpmle/cli.hpp"

int main(int argc, char** argv) { return gpmle::cli::run_cli(argc, argv, std::cout, std::cerr); }
