#include <iostream>

#include "propdetect/cli.hpp"

int main(int argc, char** argv) { return propdetect::run_cli(argc, argv, std::cout, std::cerr); }
