#include "oodenv/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return oodenv::run_cli(argc, argv, std::cout, std::cerr); }
