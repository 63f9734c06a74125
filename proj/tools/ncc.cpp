#include <iostream>

#include "ncc/cli.hpp"

int main(int argc, char **argv) { return ncc::run_cli(argc, argv, std::cout, std::cerr); }
