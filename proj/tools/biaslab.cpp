#include <iostream>

#include "biaslab/cli.hpp"

int main(int argc, char** argv) { return biaslab::run_cli(argc, argv, std::cout, std::cerr); }
