#include <iostream>

#include "topoforge/cli.hpp"

int main(int argc, char** argv) { return topoforge::run_cli(argc, argv, std::cout, std::cerr); }
