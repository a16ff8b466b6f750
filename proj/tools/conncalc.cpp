#include <iostream>

#include "conncalc/cli.hpp"

int main(int argc, char** argv) { return conncalc::run_cli(argc, argv, std::cout, std::cerr); }
