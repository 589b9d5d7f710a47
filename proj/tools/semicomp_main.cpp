#include <iostream>

#include "semicomp/cli.hpp"

int main(int argc, char** argv) { return semicomp::run_cli(argc, argv, std::cout, std::cerr); }
