#include <iostream>

#include "mitra/cli.hpp"

int main(int argc, char** argv) { return mitra::run_cli(argc, argv, std::cout, std::cerr); }
